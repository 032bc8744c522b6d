"""Plane-wave Floquet-Bloch solver for -(grad + ik)^2 + lam^2 V + eta W on the honeycomb.

The Bloch function at quasi-momentum k is expanded as
sum_m c_m exp(i (k + m.k) . x) over the index square |m|_inf <= N; in this
basis the kinetic term is diagonal and the potential is a Toeplitz table lookup.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .atomic import GroundState, ground_state_fourier
from .errors import IllConditioned, NotDegenerate, RotationLeak
from .lattice import build_geometry, reduce_to_bz
from .potential import FourierPotential
from .tightbinding import h_tb_matrix, wallace

TAU = complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))
DENSE_LIMIT = 3721  # basis size of N = 30


@dataclass(eq=False)
class BlochProblem:
    V: FourierPotential
    lam: float
    N: int
    eta: float = 0.0
    W: FourierPotential | None = None
    reduce_k: bool = True

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("truncation radius N must be >= 4")
        r = np.arange(-self.N, self.N + 1)
        M1, M2 = np.meshgrid(r, r, indexing="ij")
        self.m = np.stack([M1.ravel(), M2.ravel()], axis=1)
        geom = build_geometry()
        self.q = self.m @ np.vstack([geom.k1, geom.k2])
        d1 = self.m[:, None, 0] - self.m[None, :, 0]
        d2 = self.m[:, None, 1] - self.m[None, :, 1]
        pot = self.lam**2 * self.V.lookup(d1, d2)
        if self.W is not None and self.eta != 0.0:
            pot = pot + self.eta * self.W.lookup(d1, d2)
        self._pot = pot

    @property
    def size(self) -> int:
        return (2 * self.N + 1) ** 2

    def with_(self, **kw) -> "BlochProblem":
        args = dict(V=self.V, lam=self.lam, N=self.N, eta=self.eta, W=self.W, reduce_k=self.reduce_k)
        args.update(kw)
        return BlochProblem(**args)


def _prepare_k(prob: BlochProblem, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return reduce_to_bz(k)[0] if prob.reduce_k else k


def assemble_hk(prob: BlochProblem, k) -> np.ndarray:
    """Hermitian Bloch matrix |k + q_m|^2 delta + lam^2 Vhat(m - m') + eta What(m - m')."""
    k = _prepare_k(prob, k)
    H = prob._pot.copy()
    kin = np.sum((k + prob.q) ** 2, axis=1)
    H[np.diag_indices_from(H)] += kin
    return H


def lowest_eigh(H: np.ndarray, n: int, vectors: bool = False):
    """Lowest n eigenpairs; dense LAPACK up to DENSE_LIMIT, Lanczos (ARPACK) above."""
    if H.shape[0] <= DENSE_LIMIT:
        return sla.eigh(H, subset_by_index=[0, n - 1], eigvals_only=not vectors, driver="evr")
    w, v = spla.eigsh(H, k=n, which="SA", tol=1e-12)
    order = np.argsort(w)
    return (w[order], v[:, order]) if vectors else w[order]


@dataclass
class BandStructure:
    kpoints: np.ndarray
    energies: np.ndarray  # (n_k, n_bands)
    n_bands: int
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        geom = build_geometry()
        frac = np.linalg.solve(geom.dual_basis, self.kpoints.T).T
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k1_frac", "k2_frac"] + [f"E_{b + 1}" for b in range(self.n_bands)])
        for f, row in zip(frac, self.energies):
            w.writerow([f"{f[0]:.12g}", f"{f[1]:.12g}"] + [f"{e:.15g}" for e in row])
        return buf.getvalue()


def band_path(prob: BlochProblem, kpoints, n_bands: int) -> BandStructure:
    kpoints = np.atleast_2d(np.asarray(kpoints, dtype=float))
    if n_bands > prob.size:
        raise ValueError("n_bands exceeds the basis size")
    E = np.array([lowest_eigh(assemble_hk(prob, k), n_bands) for k in kpoints])
    return BandStructure(kpoints, E, n_bands, {"lambda": prob.lam, "N": prob.N})


def symmetry_path(n_per_segment: int = 30) -> np.ndarray:
    """Gamma -> K -> M -> Gamma, endpoints of each segment included once."""
    geom = build_geometry()
    G, K, M = np.zeros(2), geom.K, geom.M
    pts = []
    for a, b in [(G, K), (K, M), (M, G)]:
        t = np.linspace(0, 1, n_per_segment, endpoint=False)
        pts.append(a + t[:, None] * (b - a))
    pts.append(G[None, :])
    return np.vstack(pts)


def rotation_on_basis(prob: BlochProblem, Kstar) -> tuple[np.ndarray, float]:
    """Matrix of f -> f(c + R^T (x - c)) on the Kstar plane-wave basis, c the
    symmetry centre of the potential.

    Returns (Rmat, leak) where columns whose rotated index leaves the square
    are dropped; ``leak`` is the number of dropped columns over the basis size.
    """
    geom = build_geometry()
    Kstar = np.asarray(Kstar, dtype=float)
    p = Kstar + prob.q
    Rp = p @ geom.R120.T
    # R p = Kstar + q_{m'}  ->  m' from fractional coordinates
    frac = np.linalg.solve(geom.dual_basis, (Rp - Kstar).T).T
    mp = np.rint(frac).astype(int)
    if np.max(np.abs(frac - mp)) > 1e-8:
        raise RotationLeak("Kstar is not a rotation-invariant quasi-momentum")
    phase = np.exp(1j * ((p - Rp) @ prob.V.center))
    N = prob.N
    inside = np.all(np.abs(mp) <= N, axis=1)
    rows = (mp[inside, 0] + N) * (2 * N + 1) + (mp[inside, 1] + N)
    Rmat = np.zeros((prob.size, prob.size), dtype=complex)
    Rmat[rows, np.nonzero(inside)[0]] = phase[inside]
    return Rmat, float(np.count_nonzero(~inside)) / prob.size


@dataclass
class DiracReport:
    Kstar: np.ndarray
    E_D: float
    split: float
    vF: float
    vF_ratio: float | None
    tau_index: int
    rotation_eigenvalues: list
    leak: float
    Phi1: np.ndarray = field(repr=False)
    Phi2: np.ndarray = field(repr=False)
    vF_directions: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": 1,
                "Kstar": list(map(float, self.Kstar)),
                "E_D": self.E_D,
                "split": self.split,
                "vF": self.vF,
                "vF_ratio": self.vF_ratio,
                "vF_directions": self.vF_directions,
                "tau_index": self.tau_index,
                "rotation_eigenvalues": [[z.real, z.imag] for z in self.rotation_eigenvalues],
                "leak": self.leak,
                "meta": self.meta,
            }
        )


def _half_gap(prob: BlochProblem, k) -> float:
    e = lowest_eigh(assemble_hk(prob, k), 2)
    return 0.5 * (e[1] - e[0])


def cone_slope(prob: BlochProblem, Kstar, theta: float, h: float = 1e-3, g0: float | None = None) -> float:
    """Slope of (E2 - E1)/2 away from Kstar along angle theta, from the +-h samples."""
    Kstar = np.asarray(Kstar, dtype=float)
    d = np.array([math.cos(theta), math.sin(theta)])
    if g0 is None:
        g0 = _half_gap(prob, Kstar)
    gp = _half_gap(prob, Kstar + h * d)
    gm = _half_gap(prob, Kstar - h * d)
    return (gp + gm - 2 * g0) / (2 * h)


def dirac_point(prob: BlochProblem, Kstar, tol: float | None = None, h: float = 1e-3,
                theta: float = 0.0, rho: float | None = None, max_leak: float = 1.0) -> DiracReport:
    """Degenerate pair at a Brillouin-zone vertex, its rotation labels and cone slope."""
    Kstar = np.asarray(Kstar, dtype=float)
    tol = 1e-5 * prob.lam**2 if tol is None else tol
    H = assemble_hk(prob, Kstar)
    w, v = lowest_eigh(H, 2, vectors=True)
    split = float(w[1] - w[0])
    if split > tol:
        raise NotDegenerate(f"lowest pair at K* split by {split:.3g} > {tol:.3g}")
    Rmat, leak = rotation_on_basis(prob, Kstar)
    if leak > max_leak:
        raise RotationLeak(f"rotation drops {leak:.3g} of the basis")
    # rotation restricted to the degenerate pair; eigenvectors are tau / conj(tau) states
    Rsub = v.conj().T @ Rmat @ v
    rvals, rvecs = np.linalg.eig(Rsub)
    tau_index = int(np.argmin(np.abs(rvals - TAU)))
    Phi = v @ rvecs
    Phi /= np.linalg.norm(Phi, axis=0)
    Phi1, Phi2 = Phi[:, tau_index], Phi[:, 1 - tau_index]
    g0 = 0.5 * split
    slopes = [cone_slope(prob, Kstar, theta + a, h, g0) for a in (0.0, 0.5 * math.pi)]
    vF = float(np.mean(slopes))
    ratio = None if rho is None else vF / (math.sqrt(3) / 2 * rho)
    return DiracReport(
        Kstar=Kstar, E_D=float(0.5 * (w[0] + w[1])), split=split, vF=vF, vF_ratio=ratio,
        tau_index=tau_index, rotation_eigenvalues=[complex(z) for z in rvals], leak=leak,
        Phi1=Phi1, Phi2=Phi2, vF_directions=slopes,
        meta={"lambda": prob.lam, "N": prob.N, "eta": prob.eta},
    )


def rescaled_dispersion(prob: BlochProblem, gs: GroundState, kset, E_D: float | None = None) -> list[dict]:
    """(E_-+ - E_D)/rho against -+ Wallace at each k; rho from the atomic solve."""
    if E_D is None:
        E_D = dirac_point(prob, build_geometry().K).E_D
    rows = []
    for k in np.atleast_2d(kset):
        e = lowest_eigh(assemble_hk(prob, k), 2)
        mu_m, mu_p = (e[0] - E_D) / gs.rho, (e[1] - E_D) / gs.rho
        w = wallace(k)
        rows.append({"k": np.asarray(k, dtype=float), "mu_minus": float(mu_m), "mu_plus": float(mu_p),
                     "wtb": float(w), "dev": float(max(abs(mu_m + w), abs(mu_p - w)))})
    return rows


def fermi_velocity(prob: BlochProblem, gs: GroundState, Kstar=None, **kw) -> dict:
    Kstar = build_geometry().K if Kstar is None else Kstar
    rep = dirac_point(prob, Kstar, rho=gs.rho, **kw)
    return {"vF": rep.vF, "ratio": rep.vF_ratio, "E_D": rep.E_D, "split": rep.split}


def gap_vs_eta(prob: BlochProblem, W: FourierPotential, Kstar, etas) -> list[dict]:
    """Gap at Kstar under lam^2 V + eta W against the first-order prediction 2 |theta| eta.

    theta = <Phi1, W Phi1> with Phi1 the tau-labelled eigenvector at eta = 0.
    """
    base = prob.with_(eta=0.0, W=None)
    rep = dirac_point(base, Kstar)
    N = prob.N
    d1 = prob.m[:, None, 0] - prob.m[None, :, 0]
    d2 = prob.m[:, None, 1] - prob.m[None, :, 1]
    Wmat = W.lookup(d1, d2)
    theta = float(np.real(rep.Phi1.conj() @ Wmat @ rep.Phi1))
    H0 = assemble_hk(base, Kstar)
    rows = []
    for eta in etas:
        e = lowest_eigh(H0 + eta * Wmat, 2)
        rows.append({"eta": float(eta), "gap": float(e[1] - e[0]), "theta_sharp": theta,
                     "predicted_gap": 2 * abs(theta) * abs(eta), "E_D": rep.E_D, "N": N})
    return rows


def atomic_mode_vectors(prob: BlochProblem, gs: GroundState, k) -> np.ndarray:
    """Plane-wave coefficients of the pseudo-periodic atomic sums P_{A,k}, P_{B,k}.

    c_m(I) = p0hat(k + q_m) exp(-i q_m . v_I) / |D|, scaled by sqrt(|D|) so the
    Euclidean norm of the coefficient vector is the L^2(cell) norm.
    """
    geom = build_geometry()
    k = _prepare_k(prob, k)
    p = k + prob.q
    phat = ground_state_fourier(gs, np.linalg.norm(p, axis=1))
    cols = [phat * np.exp(-1j * (prob.q @ v)) / math.sqrt(geom.cell_area) for v in (geom.vA, geom.vB)]
    return np.column_stack(cols)


def resolvent_distance(prob: BlochProblem, gs: GroundState, k, z: complex = 1j, E_D: float | None = None,
                       max_overlap: float = 0.5) -> dict:
    """Operator-norm distance between the scaled Bloch resolvent and the lifted
    tight-binding resolvent on the truncated space."""
    if z.imag == 0:
        raise ValueError("z must be off the real axis")
    geom = build_geometry()
    if E_D is None:
        E_D = dirac_point(prob, geom.K).E_D
    k = np.asarray(k, dtype=float)
    P = atomic_mode_vectors(prob, gs, k)
    G = P.conj().T @ P
    overlap = abs(G[0, 1]) / math.sqrt(abs(G[0, 0] * G[1, 1]))
    if overlap >= max_overlap:
        raise IllConditioned(f"mode overlap {overlap:.3g} >= {max_overlap}")
    # symmetric (Loewdin) orthonormalization
    gw, gv = np.linalg.eigh(G)
    J = P @ (gv @ np.diag(gw**-0.5) @ gv.conj().T)
    H = (assemble_hk(prob, k) - E_D * np.eye(prob.size)) / gs.rho
    hw, hv = np.linalg.eigh(H)
    R_full = (hv / (hw - z)) @ hv.conj().T
    R_tb = np.linalg.inv(h_tb_matrix(_prepare_k(prob, k)) - z * np.eye(2))
    D = R_full - J @ R_tb @ J.conj().T
    dist = float(np.linalg.norm(D, 2))
    return {"distance": dist, "overlap": float(overlap), "norms": [float(abs(G[0, 0])), float(abs(G[1, 1]))]}


def truncation_check(fn, prob: BlochProblem, rebuild=None, step: int = 4, rel_tol: float = 0.01) -> dict:
    """Evaluate a headline number fn(prob) at N and N + step.

    ``rebuild(N)`` must return the problem at truncation N; it is only optional
    for finite Fourier potentials, whose table needs no regeneration.
    """
    if rebuild is None:
        if not prob.V.finite or (prob.W is not None and not prob.W.finite):
            raise ValueError("rebuild is required for potentials truncated at a cutoff")
        rebuild = lambda N: prob.with_(N=N)  # noqa: E731
    v = float(fn(prob))
    v2 = float(fn(rebuild(prob.N + step)))
    rel = abs(v2 - v) / max(abs(v), np.finfo(float).tiny)
    return {"value": v, "value_next": v2, "N": prob.N, "N_next": prob.N + step,
            "rel_change": rel, "converged": bool(rel < rel_tol)}
