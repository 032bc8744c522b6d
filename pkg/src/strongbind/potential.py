"""Lambda_h-periodic potentials stored as lattice Fourier series.

Convention: V(x) = sum_m Vhat(m) exp(i (m1 k1 + m2 k2) . x), coefficients kept
in a dense (2c+1) x (2c+1) table indexed by m + c.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .atomic import AtomicWell, hankel_transform
from .errors import MissingCoefficient
from .lattice import build_geometry


@dataclass(eq=False)
class FourierPotential:
    table: np.ndarray  # complex, shape (2*cutoff+1, 2*cutoff+1)
    cutoff: int
    label: str = ""
    finite: bool = False  # True: every coefficient beyond the cutoff is exactly zero
    hex_center: tuple | None = None  # symmetry (rotation, inversion) centre; None means xc

    @classmethod
    def from_coeffs(cls, coeffs: dict, cutoff: int | None = None, label: str = "",
                    finite: bool = True) -> "FourierPotential":
        c = max(max(abs(a), abs(b)) for a, b in coeffs) if cutoff is None else cutoff
        table = np.zeros((2 * c + 1, 2 * c + 1), dtype=complex)
        for (a, b), v in coeffs.items():
            table[a + c, b + c] = v
        return cls(table, c, label, finite)

    @classmethod
    def zero(cls, cutoff: int = 0) -> "FourierPotential":
        return cls(np.zeros((2 * cutoff + 1,) * 2, dtype=complex), cutoff, "zero", True)

    @property
    def coeffs(self) -> dict:
        c = self.cutoff
        idx = np.argwhere(self.table != 0)
        return {(int(i) - c, int(j) - c): complex(self.table[i, j]) for i, j in idx}

    @property
    def center(self) -> np.ndarray:
        return build_geometry().xc if self.hex_center is None else np.asarray(self.hex_center, dtype=float)

    def coeff(self, m) -> complex:
        a, b = int(m[0]), int(m[1])
        if max(abs(a), abs(b)) > self.cutoff:
            if self.finite:
                return 0j
            raise MissingCoefficient(f"coefficient {m} beyond cutoff {self.cutoff}")
        return complex(self.table[a + self.cutoff, b + self.cutoff])

    def lookup(self, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
        """Vectorized coefficient lookup for index differences (d1, d2)."""
        c = self.cutoff
        d1, d2 = np.asarray(d1), np.asarray(d2)
        outside = (np.abs(d1) > c) | (np.abs(d2) > c)
        if not np.any(outside):
            return self.table[d1 + c, d2 + c]
        if not self.finite:
            raise MissingCoefficient(f"index difference beyond potential cutoff {c}")
        out = self.table[np.clip(d1, -c, c) + c, np.clip(d2, -c, c) + c]
        return np.where(outside, 0, out)

    @property
    def v11(self) -> float:
        """Coefficient at m = (1, 1), the low-contrast edge diagnostic."""
        return self.coeff((1, 1)).real if self.cutoff >= 1 else 0.0

    def sup_norm_bound(self) -> float:
        return float(np.abs(self.table).sum())

    def evaluate(self, x, chunk: int = 4096) -> np.ndarray:
        """V at points x, shape (..., 2); returns real values."""
        geom = build_geometry()
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, 2)
        nz = np.argwhere(self.table != 0)
        vals = self.table[nz[:, 0], nz[:, 1]]
        q = (nz - self.cutoff) @ np.vstack([geom.k1, geom.k2])
        out = np.empty(len(pts))
        for s in range(0, len(pts), chunk):
            ph = pts[s:s + chunk] @ q.T
            out[s:s + chunk] = (np.exp(1j * ph) @ vals).real
        return out.reshape(x.shape[:-1])

    __call__ = evaluate

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.table - np.conj(self.table[::-1, ::-1]))) <= tol)

    def to_json(self) -> str:
        rows = [[m[0], m[1], v.real, v.imag] for m, v in sorted(self.coeffs.items())]
        return json.dumps({"schema": 1, "label": self.label, "cutoff": self.cutoff,
                           "finite": self.finite, "hex_center": self.hex_center, "coeffs": rows})

    @classmethod
    def from_json(cls, text: str) -> "FourierPotential":
        d = json.loads(text)
        coeffs = {(int(a), int(b)): complex(re, im) for a, b, re, im in d["coeffs"]}
        V = cls.from_coeffs(coeffs, cutoff=d["cutoff"], label=d["label"], finite=d.get("finite", False))
        hc = d.get("hex_center")
        V.hex_center = None if hc is None else tuple(hc)
        return V


def index_grid(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.arange(-cutoff, cutoff + 1)
    return np.meshgrid(r, r, indexing="ij")


def periodize(well: AtomicWell, cutoff: int, n_quad: int = 1200) -> FourierPotential:
    """Fourier table of sum over the honeycomb sites of V0(x - v).

    Coefficients are kept for |m k| <= 2 pi cutoff, the largest disc inside the
    index square, so the truncated potential keeps the 120-degree symmetry.
    """
    geom = build_geometry()
    M1, M2 = index_grid(cutoff)
    q = M1[..., None] * geom.k1 + M2[..., None] * geom.k2
    qn = np.linalg.norm(q, axis=-1)
    # many |q| repeat (rotation images); transform each distinct radius once
    uniq, inv = np.unique(np.round(qn, 10), return_inverse=True)
    vt = hankel_transform(well.profile, uniq, rmax=well.r0, n=n_quad)
    vt = np.asarray(vt)[inv].reshape(qn.shape)
    phase = np.exp(-1j * (q @ geom.vA)) + np.exp(-1j * (q @ geom.vB))
    table = np.where(qn <= 2 * math.pi * cutoff * (1 + 1e-12), phase * vt / geom.cell_area, 0)
    return FourierPotential(table, cutoff, f"periodized {well.kind} r0={well.r0:.6g}")


def trig_potential() -> FourierPotential:
    """cos(k1.x) + cos(k2.x) + cos((k1+k2).x).

    Its minima form a honeycomb whose hexagons are centred on the lattice
    points, so the symmetry centre is the origin.
    """
    coeffs = {}
    for m in [(1, 0), (0, 1), (1, 1)]:
        coeffs[m] = 0.5
        coeffs[(-m[0], -m[1])] = 0.5
    V = FourierPotential.from_coeffs(coeffs, label="trig")
    V.hex_center = (0.0, 0.0)
    return V


def pt_breaking_potential(center=None) -> FourierPotential:
    """sin(k1.(x-c)) + sin(k2.(x-c)) + sin((k1+k2).(x-c)), odd about c.

    c defaults to xc; pass the inversion centre of the base potential when it
    differs (the trig potential has its centre at the origin).
    """
    geom = build_geometry()
    c = geom.xc if center is None else np.asarray(center, dtype=float)
    coeffs = {}
    for m in [(1, 0), (0, 1), (1, 1)]:
        g = geom.dual_vector(m)
        z = np.exp(-1j * g @ c) / 2j
        coeffs[m] = z
        coeffs[(-m[0], -m[1])] = np.conj(z)
    W = FourierPotential.from_coeffs(coeffs, label="pt-breaking")
    W.hex_center = None if center is None else tuple(float(t) for t in c)
    return W


def cell_samples(n: int) -> np.ndarray:
    """n x n points (i/n) v1 + (j/n) v2 of the fundamental cell, shape (n*n, 2)."""
    geom = build_geometry()
    f = np.arange(n) / n
    F1, F2 = np.meshgrid(f, f, indexing="ij")
    return np.stack([F1.ravel(), F2.ravel()], axis=1) @ np.vstack([geom.v1, geom.v2])


def check_symmetries(V: FourierPotential, n: int = 128, tol: float = 1e-8, center=None) -> dict:
    """Sup-norm defects of 120-degree rotation and inversion about ``center``
    (default the potential's own symmetry centre) on an n x n cell grid."""
    geom = build_geometry()
    c = V.center if center is None else np.asarray(center, dtype=float)
    x = cell_samples(n)
    v = V.evaluate(x)
    y = x - c
    rot = V.evaluate(c + y @ geom.R120)  # rows: R120^T y, the counter-clockwise image
    inv = V.evaluate(c - y)
    scale = max(1.0, float(np.max(np.abs(v))))
    d_rot = float(np.max(np.abs(rot - v)))
    d_even = float(np.max(np.abs(inv - v)))
    d_odd = float(np.max(np.abs(inv + v)))
    if d_even <= tol * scale:
        parity, d_par = "even", d_even
    elif d_odd <= tol * scale:
        parity, d_par = "odd", d_odd
    else:
        parity, d_par = "none", min(d_even, d_odd)
    return {
        "rotation_ok": d_rot <= tol * scale,
        "inversion_parity": parity,
        "max_violation": max(d_rot, d_par),
        "rotation_violation": d_rot,
        "even_violation": d_even,
        "odd_violation": d_odd,
    }
