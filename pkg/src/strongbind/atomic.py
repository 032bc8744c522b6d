"""Single atomic well: radial profiles, ground state, overlap scale and radial transforms.

The ground state of -Laplacian + lam^2 V0 on R^2 is computed from the radial
reduction -u'' - u'/r + m^2/r^2 u + lam^2 V0 u = E u with a cell-centred
finite-volume scheme (regular at r = 0, Dirichlet at Rmax).  The scheme is
symmetrized with the weight sqrt(r) so a tridiagonal symmetric eigensolver
applies.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import GridTooCoarse, NoBoundState, NoRoot, Underflow
from .lattice import SQRT3, build_geometry

NN_DIST = 1 / SQRT3  # |e_{A,1}|
R_CRITICAL = 0.33 * NN_DIST
R_WEAK = 0.5 * NN_DIST


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1 / np.where(t > 0, t, 1)), 0.0)
        b = np.where(t < 1, np.exp(-1 / np.where(t < 1, 1 - t, 1)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class AtomicWell:
    """Radial well with values in [-1, 0] supported in |x| < r0.

    ``kind`` is ``"smooth-bump"`` or ``"smoothed-cylinder"``; for the latter
    ``radius`` is the mid-point of the edge and ``width`` its smoothing width,
    so r0 = radius + width / 2.
    """

    kind: str
    r0: float
    radius: float = 0.0
    width: float = 0.0
    allow_weak: bool = False

    def __post_init__(self):
        if self.kind not in ("smooth-bump", "smoothed-cylinder"):
            raise ValueError(f"unknown well kind {self.kind!r}")
        bound = R_WEAK if self.allow_weak else R_CRITICAL
        # the default bump sits exactly at 0.33 |e_A1|; allow rounding there
        if not 0 < self.r0 <= bound * (1 + 1e-12):
            raise ValueError(f"support radius {self.r0} outside (0, {bound:.6f}]")

    def profile(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "smooth-bump":
            s = np.minimum(r / self.r0, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                v = np.where(s < 1, -np.exp(1 - 1 / np.where(s < 1, 1 - s * s, 1)), 0.0)
            return v
        t = (self.radius + 0.5 * self.width - r) / self.width
        return -_smooth_step(t)

    __call__ = profile

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r0": self.r0, "radius": self.radius, "width": self.width}


def bump_well(r0: float = R_CRITICAL) -> AtomicWell:
    return AtomicWell("smooth-bump", r0)


def smoothed_cylinder_well(radius: float = 0.15, width: float = 0.01) -> AtomicWell:
    return AtomicWell("smoothed-cylinder", radius + 0.5 * width, radius=radius, width=width)


def well_from_dict(d: dict) -> AtomicWell:
    if d["kind"] == "smooth-bump":
        return bump_well(d["r0"])
    return smoothed_cylinder_well(d["radius"], d["width"])


def default_rmax(well: AtomicWell, lam: float) -> float:
    # well past |e_A1| + r0 so the Dirichlet wall does not bend the tail used for rho
    return max(well.r0 + max(5 / lam, 2 * NN_DIST), 3.0)


@dataclass
class GroundState:
    lam: float
    E0: float
    radial_grid: np.ndarray
    u: np.ndarray
    E1_m0: float
    E0_m1: float
    well: AtomicWell | None = None
    rho: float | None = None
    norm: float = field(default=1.0)

    @property
    def gap(self) -> float:
        """Distance from E0 to the next radial level over the m = 0 and m = 1 channels."""
        return min(self.E1_m0, self.E0_m1) - self.E0

    @property
    def energy_ratio(self) -> float:
        """E0 / lam^2, the empirical constant in E0 <= -C lam^2."""
        return self.E0 / self.lam**2

    def log_p0(self, r) -> np.ndarray:
        """log p0 at radius r, linear interpolation of log u between grid points."""
        r = np.abs(np.asarray(r, dtype=float))
        with np.errstate(divide="ignore"):
            logu = np.log(self.u)
        return np.interp(r, self.radial_grid, logu)

    def p0(self, r) -> np.ndarray:
        return np.exp(self.log_p0(r))

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": 1,
                "lambda": self.lam,
                "E0": self.E0,
                "E1_m0": self.E1_m0,
                "E0_m1": self.E0_m1,
                "rho": self.rho,
                "well": None if self.well is None else self.well.to_dict(),
                "grid": self.radial_grid.tolist(),
                "u": self.u.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundState":
        d = json.loads(text)
        return cls(
            lam=d["lambda"],
            E0=d["E0"],
            radial_grid=np.array(d["grid"]),
            u=np.array(d["u"]),
            E1_m0=d["E1_m0"],
            E0_m1=d["E0_m1"],
            well=None if d["well"] is None else well_from_dict(d["well"]),
            rho=d["rho"],
        )


def _radial_operator(V: np.ndarray, h: float, n: int, m: int):
    r = (np.arange(1, n + 1) - 0.5) * h
    r_half = np.arange(0, n + 1) * h  # faces r_{i-1/2}, i = 1..n+1
    diag = (r_half[1:] + r_half[:-1]) / (r * h * h) + V + (m * m) / (r * r)
    off = -r_half[1:-1] / (h * h * np.sqrt(r[:-1] * r[1:]))
    return r, diag, off


def radial_levels(well: AtomicWell, lam: float, n_r: int, rmax: float, m: int = 0, count: int = 1):
    """Lowest ``count`` eigenpairs of the radial operator in angular channel m.

    Returns (r, energies, u) with u[:, j] normalized in L^2(R^2) and the
    ground-state column positive.
    """
    h = rmax / (n_r + 0.5)
    r = (np.arange(1, n_r + 1) - 0.5) * h
    V = lam**2 * well.profile(r)
    r, diag, off = _radial_operator(V, h, n_r, m)
    w, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    # sum w_i^2 = 1 with w = sqrt(r h) u  <=>  2 pi int u^2 r dr = 2 pi
    u = vecs / np.sqrt(r * h)[:, None] / math.sqrt(2 * math.pi)
    if u[0, 0] < 0:
        u[:, 0] = -u[:, 0]
    return r, w, u


def ground_state(well: AtomicWell, lam: float, n_r: int = 8000, rmax: float | None = None,
                 refine_check: bool = True, with_rho: bool = True) -> GroundState:
    """Ground state (E0, p0) of -Laplacian + lam^2 V0 on R^2.

    Raises NoBoundState if E0 >= 0 and GridTooCoarse if doubling n_r moves E0
    by more than 1e-6 lam^2.
    """
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    if n_r < 200:
        raise ValueError("n_r must be >= 200")
    rmax = default_rmax(well, lam) if rmax is None else rmax
    if rmax < well.r0 + 5 / lam:
        raise ValueError("rmax must be at least r0 + 5/lambda")
    r, w0, u0 = radial_levels(well, lam, n_r, rmax, m=0, count=2)
    E0 = float(w0[0])
    if E0 >= 0:
        raise NoBoundState(f"lowest radial level {E0:.6g} >= 0 at lambda={lam}")
    if refine_check:
        _, wf, _ = radial_levels(well, lam, 2 * n_r, rmax, m=0, count=1)
        if abs(wf[0] - E0) > 1e-6 * lam**2:
            raise GridTooCoarse(
                f"E0 changes by {abs(wf[0] - E0):.3g} under grid doubling (tolerance {1e-6 * lam**2:.3g})"
            )
    _, w1, _ = radial_levels(well, lam, n_r, rmax, m=1, count=1)
    # roundoff leaves a few non-positive samples deep in the tail
    u = np.maximum(u0[:, 0], np.finfo(float).tiny)
    norm = math.sqrt(2 * math.pi * np.sum(u * u * r) * (r[1] - r[0]))
    gs = GroundState(lam=lam, E0=E0, radial_grid=r, u=u, E1_m0=float(w0[1]), E0_m1=float(w1[0]),
                     well=well, norm=norm)
    if with_rho and rmax >= NN_DIST + well.r0:
        gs.rho = rho_lambda(gs, well)
    return gs


def rho_lambda(gs: GroundState, well: AtomicWell, bond=None, n_s: int = 400, n_phi: int = 384) -> float:
    """Overlap scale lam^2 int_{|y|<r0} |V0(y)| p0(y) p0(y + e) dy, e a nearest-neighbour bond.

    Polar Gauss-Legendre (radius) x trapezoid (angle) quadrature; ``n_phi``
    is kept a multiple of 6 so rotating the bond is exact on the angular grid.
    """
    if gs.radial_grid[-1] < NN_DIST + well.r0:
        raise ValueError("radial grid must reach |e_A1| + r0")
    e = build_geometry().eA[0] if bond is None else np.asarray(bond, dtype=float)
    x, wx = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * well.r0 * (x + 1)
    ws = 0.5 * well.r0 * wx
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    Y = s[:, None, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)[None, :, :]
    shifted = np.linalg.norm(Y + e, axis=-1)
    log_int = gs.log_p0(s)[:, None] + gs.log_p0(shifted)
    if not np.all(np.isfinite(log_int)) or log_int.max() < math.log(np.finfo(float).tiny):
        raise Underflow(f"overlap integrand underflows at lambda={gs.lam}")
    integrand = np.abs(well.profile(s))[:, None] * np.exp(log_int)
    val = gs.lam**2 * (2 * math.pi / n_phi) * np.sum(ws[:, None] * s[:, None] * integrand)
    if val <= 0:
        raise Underflow(f"overlap integral is not positive at lambda={gs.lam}")
    return float(val)


def cylinder_matching(E: float, lam: float, R: float, m: int) -> float:
    """Matching function for the sharp cylindrical well; zero at bound-state energies.

    Inside J_m(a r), outside K_m(b r) with a = sqrt(lam^2 - |E|), b = sqrt(|E|);
    continuity of u'/u at r = R gives a J_m'(aR) K_m(bR) - b K_m'(bR) J_m(aR) = 0.
    """
    a = math.sqrt(lam * lam - abs(E))
    b = math.sqrt(abs(E))
    # exponentially scaled K_m keeps the function finite for large b R
    Km = special.kve(m, b * R)
    Kmp = special.kvp(m, b * R) * math.exp(b * R)
    return a * special.jvp(m, a * R) * Km - b * Kmp * special.jv(m, a * R)


def cylinder_well_eigenvalue(lam: float, R: float, m: int = 0, branch: int = 1) -> float:
    """Bound-state energy (branch-th root, counted from the bottom) of the sharp well
    V0 = -1 for |x| < R in angular channel m.

    Roots are bracketed by sign changes of the matching function on a fine
    scan of the inside wave number a R in (0, lam R), then refined by Brent's method.
    """
    if branch < 1 or m < 0:
        raise ValueError("branch >= 1 and m >= 0 required")
    amax = lam * R * (1 - 1e-12)
    aR = np.linspace(1e-9, amax, 20000)
    E = -(lam**2) + (aR / R) ** 2
    vals = np.array([cylinder_matching(e, lam, R, m) for e in E])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(idx) < branch:
        raise NoRoot(f"no bound state for m={m}, branch={branch} at lambda R = {lam * R:.4g}")
    i = idx[branch - 1]
    root = brentq(lambda e: cylinder_matching(e, lam, R, m), E[i], E[i + 1], xtol=1e-13, rtol=1e-15)
    return float(root)


def hankel_transform(f, xi, rmax: float | None = None, n: int = 2000):
    """Radial 2D Fourier transform 2 pi int_0^inf f(r) J0(xi r) r dr.

    ``f`` is either a callable supported in [0, rmax] (Gauss-Legendre
    quadrature) or a pair (r, values) sampled on an increasing grid
    (trapezoid rule with the r = 0 endpoint contributing nothing).
    ``xi`` may be a scalar or an array.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if callable(f):
        if rmax is None:
            raise ValueError("rmax is required for callable input")
        x, wx = np.polynomial.legendre.leggauss(n)
        r = 0.5 * rmax * (x + 1)
        w = 0.5 * rmax * wx
        vals = np.asarray(f(r), dtype=float)
    else:
        r, vals = (np.asarray(a, dtype=float) for a in f)
        r = np.concatenate([[0.0], r])
        vals = np.concatenate([[vals[0]], vals])
        w = np.zeros_like(r)
        dr = np.diff(r)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
    out = 2 * math.pi * (special.j0(np.outer(xi_arr, r)) @ (w * vals * r))
    return float(out[0]) if np.ndim(xi) == 0 else out


def ground_state_fourier(gs: GroundState, xi) -> np.ndarray:
    """Fourier transform of p0 at radial frequencies xi (array)."""
    r, u = gs.radial_grid, gs.u
    h = r[1] - r[0]
    xi = np.asarray(xi, dtype=float)
    flat = xi.ravel()
    out = np.empty_like(flat)
    # midpoint rule on the cell-centred grid, chunked to bound memory
    weights = 2 * math.pi * h * u * r
    for s in range(0, flat.size, 256):
        out[s:s + 256] = special.j0(np.outer(flat[s:s + 256], r)) @ weights
    return out.reshape(xi.shape)


def kernel_representation(gs: GroundState, well: AtomicWell, radii, n_s: int = 300, n_phi: int = 240):
    """lam^2 / (2 pi) int K0(sqrt|E0| |x - y|) |V0(y)| p0(y) dy at |x| = radii.

    Equals p0 when (E0, p0) is an exact bound state; the 1/(2 pi) makes
    K0/(2 pi) the fundamental solution of -Laplacian + 1 in the plane.
    """
    kappa = math.sqrt(abs(gs.E0))
    x, wx = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * well.r0 * (x + 1)
    ws = 0.5 * well.r0 * wx
    phi = 2 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    src = gs.lam**2 * np.abs(well.profile(s)) * gs.p0(s) * s * ws * (2 * math.pi / n_phi)
    out = []
    for R in np.atleast_1d(radii):
        d = np.sqrt(R * R + s[:, None] ** 2 - 2 * R * s[:, None] * np.cos(phi)[None, :])
        out.append(np.sum(src[:, None] * special.k0(kappa * d)) / (2 * math.pi))
    return np.array(out)


def sweep_rho(well: AtomicWell, lambdas, **kw) -> list[GroundState]:
    return [ground_state(well, lam, **kw) for lam in lambdas]

