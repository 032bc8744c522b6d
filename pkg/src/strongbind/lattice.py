"""Honeycomb geometry: triangular lattice, its dual, sublattices and rational edges.

Lengths are measured so that the lattice vectors have unit length; the
nearest-neighbour (A-B) distance is then 1/sqrt(3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NotCoprime

SQRT3 = math.sqrt(3.0)
BZ_TOL = 1e-12


def rotation(angle: float) -> np.ndarray:
    """Counter-clockwise rotation by ``angle`` (negative angle rotates clockwise)."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class HoneycombGeometry:
    v1: np.ndarray
    v2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    vA: np.ndarray
    vB: np.ndarray
    xc: np.ndarray
    R120: np.ndarray  # clockwise 2pi/3
    R60: np.ndarray  # clockwise pi/3
    eA: np.ndarray  # (3, 2)
    eB: np.ndarray  # (3, 2)
    Kvert: np.ndarray  # (6, 2): K, RK, R^2K, K', RK', R^2K'
    cell_area: float = field(default=SQRT3 / 2)

    @property
    def K(self) -> np.ndarray:
        return self.Kvert[0]

    @property
    def Kprime(self) -> np.ndarray:
        return self.Kvert[3]

    @property
    def M(self) -> np.ndarray:
        return 0.5 * (self.k1 + self.k2)

    @property
    def lattice_basis(self) -> np.ndarray:
        """Columns v1, v2."""
        return np.column_stack([self.v1, self.v2])

    @property
    def dual_basis(self) -> np.ndarray:
        """Columns k1, k2."""
        return np.column_stack([self.k1, self.k2])

    def dual_vector(self, m) -> np.ndarray:
        """m1*k1 + m2*k2 for one index pair or an (n, 2) array of them."""
        return np.asarray(m, dtype=float) @ np.vstack([self.k1, self.k2])

    def lattice_vector(self, n) -> np.ndarray:
        return np.asarray(n, dtype=float) @ np.vstack([self.v1, self.v2])

    def dual_rotation_indices(self) -> np.ndarray:
        """Integer matrix S with R120 (m.k) = (S m).k for all integer m."""
        B = self.dual_basis
        S = np.linalg.solve(B, self.R120 @ B)
        return np.rint(S).astype(int)


@lru_cache(maxsize=1)
def build_geometry() -> HoneycombGeometry:
    v1 = np.array([SQRT3 / 2, 0.5])
    v2 = np.array([SQRT3 / 2, -0.5])
    k1 = 2 * math.pi * np.array([SQRT3 / 3, 1.0])
    k2 = 2 * math.pi * np.array([SQRT3 / 3, -1.0])
    R120 = np.array([[-0.5, SQRT3 / 2], [-SQRT3 / 2, -0.5]])
    R60 = np.array([[0.5, SQRT3 / 2], [-SQRT3 / 2, 0.5]])
    vA = np.zeros(2)
    vB = np.array([1 / SQRT3, 0.0])
    xc = 0.5 * np.array([1 / SQRT3, -1.0])
    eA1 = np.array([1 / SQRT3, 0.0])
    eA = np.array([eA1, R120 @ eA1, R120 @ R120 @ eA1])
    K = (k1 - k2) / 3
    Kvert = np.array([K, R120 @ K, R120 @ R120 @ K, -K, -(R120 @ K), -(R120 @ R120 @ K)])
    arrays = (v1, v2, k1, k2, vA, vB, xc, R120, R60, eA, -eA, Kvert)
    for a in arrays:
        a.setflags(write=False)
    return HoneycombGeometry(*arrays)


def _hexagon_normals(geom: HoneycombGeometry) -> np.ndarray:
    g = np.array([geom.k1, geom.k2, geom.k1 + geom.k2])
    return np.vstack([g, -g])


def in_brillouin_zone(k, geom: HoneycombGeometry | None = None, tol: float = BZ_TOL) -> bool:
    """Closed-hexagon membership: k.g <= |g|^2/2 for the six shortest dual vectors."""
    geom = geom or build_geometry()
    g = _hexagon_normals(geom)
    lhs = g @ np.asarray(k, dtype=float)
    rhs = 0.5 * np.einsum("ij,ij->i", g, g)
    return bool(np.all(lhs <= rhs * (1 + tol) + tol))


def reduce_to_bz(k, geom: HoneycombGeometry | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Split k = k_red + m1 k1 + m2 k2 with k_red in the closed Brillouin hexagon.

    Boundary ties go to the smallest translation |m|, then lexicographically
    smallest (m1, m2).
    """
    geom = geom or build_geometry()
    k = np.asarray(k, dtype=float)
    frac = np.linalg.solve(geom.dual_basis, k)
    base = np.floor(frac).astype(int)
    best = None
    for d1 in range(-1, 3):
        for d2 in range(-1, 3):
            m = base + (d1, d2)
            kr = k - geom.dual_vector(m)
            if not in_brillouin_zone(kr, geom):
                continue
            key = (int(m @ m), int(m[0]), int(m[1]))
            if best is None or key < best[0]:
                best = (key, kr, m)
    if best is None:  # pragma: no cover - the candidate window always covers the hexagon
        raise RuntimeError(f"no Brillouin-zone representative found for k={k}")
    return best[1], best[2]


@dataclass(frozen=True)
class EdgeSpec:
    a1: int
    b1: int
    a2: int
    b2: int
    V1: np.ndarray
    V2: np.ndarray
    KK1: np.ndarray
    KK2: np.ndarray

    @property
    def name(self) -> str:
        return {(1, 0): "zigzag", (1, 1): "armchair"}.get((self.a1, self.b1), f"({self.a1},{self.b1})")


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def edge_from_indices(a1: int, b1: int, geom: HoneycombGeometry | None = None) -> EdgeSpec:
    """Edge along a1 v1 + b1 v2, completed to a unimodular basis.

    (a2, b2) solves a1 b2 - a2 b1 = 1 with |a2| minimal; remaining ties go to
    the smallest |b2|, then the larger a2.
    """
    geom = geom or build_geometry()
    a1, b1 = int(a1), int(b1)
    if (a1, b1) == (0, 0) or math.gcd(a1, b1) != 1:
        raise NotCoprime(f"edge indices ({a1}, {b1}) are not coprime")
    # x*a1 + y*b1 = 1  ->  b2 = x, a2 = -y
    g, x, y = _ext_gcd(a1, b1)
    assert g == 1 and x * a1 + y * b1 == 1
    b2_0, a2_0 = x, -y
    candidates = []
    # general solution: (a2, b2) = (a2_0 + t a1, b2_0 + t b1)
    if a1 != 0:
        t0 = -a2_0 / a1
        ts = range(math.floor(t0) - 1, math.ceil(t0) + 2)
    else:
        t0 = -b2_0 / b1
        ts = range(math.floor(t0) - 1, math.ceil(t0) + 2)
    for t in ts:
        a2, b2 = a2_0 + t * a1, b2_0 + t * b1
        candidates.append(((abs(a2), abs(b2), -a2), a2, b2))
    _, a2, b2 = min(candidates)
    V1 = a1 * geom.v1 + b1 * geom.v2
    V2 = a2 * geom.v1 + b2 * geom.v2
    KK1 = b2 * geom.k1 - a2 * geom.k2
    KK2 = -b1 * geom.k1 + a1 * geom.k2
    return EdgeSpec(a1, b1, a2, b2, V1, V2, KK1, KK2)
