"""Band slices transverse to rational edges and the spectral no-fold check."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .bloch import BlochProblem, assemble_hk, lowest_eigh
from .lattice import EdgeSpec, build_geometry, reduce_to_bz


@dataclass
class BandSlice:
    edge: EdgeSpec
    Kstar: np.ndarray
    xis: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E_D: float
    vertices_met: list = field(default_factory=list)

    @property
    def step(self) -> float:
        return float(self.xis[1] - self.xis[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["xi", "E1", "E2", "E_D"])
        for x, a, b in zip(self.xis, self.E1, self.E2):
            w.writerow([f"{x:.12g}", f"{a:.15g}", f"{b:.15g}", f"{self.E_D:.15g}"])
        return buf.getvalue()


def slice_vertices(edge: EdgeSpec, Kstar, xis) -> list[dict]:
    """Brillouin-zone vertices (up to the dual lattice) the slice passes through."""
    geom = build_geometry()
    met = []
    for x in xis:
        k = np.asarray(Kstar) + x * edge.KK2
        kr = reduce_to_bz(k)[0]
        d = np.linalg.norm(geom.Kvert - kr, axis=1)
        j = int(np.argmin(d))
        if d[j] < 1e-9:
            label = "K" if j in (0, 1, 2) else "K'"
            met.append({"xi": float(x), "vertex": label, "index": j})
    return met


def dual_slice(prob: BlochProblem, edge: EdgeSpec, Kstar, M: int = 41) -> BandSlice:
    """Two lowest bands at Kstar + xi KK2 for M equally spaced xi in [-1/2, 1/2]."""
    if M < 41 or M % 2 == 0:
        raise ValueError("M must be odd and at least 41")
    Kstar = np.asarray(Kstar, dtype=float)
    xis = np.linspace(-0.5, 0.5, M)
    E = np.array([lowest_eigh(assemble_hk(prob, Kstar + x * edge.KK2), 2) for x in xis])
    mid = M // 2
    E_D = float(0.5 * (E[mid, 0] + E[mid, 1]))
    return BandSlice(edge, Kstar, xis, E[:, 0], E[:, 1], E_D, slice_vertices(edge, Kstar, xis))


def _sign_changes(xs: np.ndarray, f: np.ndarray, tol: float) -> list[float]:
    """Locations where f changes sign, values within tol treated as touching."""
    s = np.where(np.abs(f) <= tol, 0, np.sign(f))
    out = []
    last = None
    for i in range(len(xs)):
        if s[i] == 0:
            continue
        if last is not None and s[i] != s[last]:
            # linear interpolation between the bracketing nonzero samples
            a, b = f[last], f[i]
            out.append(float(xs[last] + (xs[i] - xs[last]) * a / (a - b)))
        last = i
    return out


def nofold_check(sl: BandSlice, tol: float = 1e-6, exclusion_steps: int = 2) -> dict:
    """Whether E = E_D meets the two lowest slice curves only near xi = 0."""
    xi_dirac = exclusion_steps * sl.step * (1 + 1e-9)
    crossings = []
    for band, E in (("E1", sl.E1), ("E2", sl.E2)):
        f = E - sl.E_D
        for side in (sl.xis < -xi_dirac, sl.xis > xi_dirac):
            crossings += [{"band": band, "xi": x} for x in _sign_changes(sl.xis[side], f[side], tol)]
    crossings.sort(key=lambda c: c["xi"])
    return {"holds": not crossings, "crossings": crossings, "xi_dirac": xi_dirac}
