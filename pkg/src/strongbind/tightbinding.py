"""Wallace's nearest-neighbour two-band model on the honeycomb (hopping t = 1)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import build_geometry


def gamma(k) -> complex | np.ndarray:
    """Sum of exp(i k.e_B) over the three B->A bonds.

    ``k`` may be complex and may carry leading batch axes (shape (..., 2)).
    """
    geom = build_geometry()
    k = np.asarray(k)
    phases = np.tensordot(k, geom.eB.T, axes=([-1], [0]))
    out = np.exp(1j * phases).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def wallace(k) -> float | np.ndarray:
    """|1 + exp(i k.v1) + exp(i k.v2)| for real k; vectorized over leading axes."""
    geom = build_geometry()
    k = np.asarray(k, dtype=float)
    s = 1 + np.exp(1j * (k @ geom.v1)) + np.exp(1j * (k @ geom.v2))
    out = np.abs(s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TBHamiltonian:
    k: np.ndarray
    matrix: np.ndarray

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def resolvent(self, z: complex) -> np.ndarray:
        return np.linalg.inv(self.matrix - z * np.eye(2))


def h_tb_matrix(k) -> np.ndarray:
    """Batched 2x2 Bloch matrices [[0, -conj g], [-g, 0]], shape (..., 2, 2)."""
    g = np.asarray(gamma(k))
    H = np.zeros(g.shape + (2, 2), dtype=complex)
    H[..., 0, 1] = -np.conj(g)
    H[..., 1, 0] = -g
    return H


def h_tb(k) -> TBHamiltonian:
    k = np.asarray(k, dtype=float)
    return TBHamiltonian(k=k, matrix=h_tb_matrix(k))


def dual_cell_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform n x n grid over one dual cell, f in {0, 1/n, ..., (n-1)/n}^2.

    Returns (k, frac) with k = f1 k1 + f2 k2, both of shape (n*n, 2). The
    vertex classes K ~ (1/3, 2/3) and K' ~ (2/3, 1/3) are grid points iff 3 | n.
    """
    geom = build_geometry()
    f = np.arange(n) / n
    F1, F2 = np.meshgrid(f, f, indexing="ij")
    frac = np.stack([F1.ravel(), F2.ravel()], axis=1)
    return frac @ np.vstack([geom.k1, geom.k2]), frac


def torus_distance(frac, target) -> np.ndarray:
    """Euclidean distance in fractional coordinates modulo the integer lattice."""
    d = np.asarray(frac, dtype=float) - np.asarray(target, dtype=float)
    d -= np.rint(d)
    return np.hypot(d[..., 0], d[..., 1])
