"""Finite grid verification of the Euclidean inequalities behind r_critical.

Support points are replaced by the rational grid Gamma_delta; each continuum
statement is checked on grid pairs with a discretization slack 4 delta/sqrt(2)
and a floating-point guard ``margin_floor``.  The constants c', c'', ... are
outputs: the smallest margin found, together with the pair attaining it.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .lattice import build_geometry

NN_DIST = 1 / math.sqrt(3)
N_BAD = ((0, 0), (-1, 0), (0, -1))


@dataclass(frozen=True)
class LemmaConfig:
    delta: float = 0.5e-2
    r0: float = 0.33 * NN_DIST
    epsilon: float = 1e-8
    margin_floor: float = 1e-10
    index_bound: int = 8
    chunk: int = 32
    workers: int = 1

    def __post_init__(self):
        if not (0 < self.r0 < 0.5 * NN_DIST):
            raise ConfigError("r0 must lie in (0, |e_A1|/2)")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.index_bound < 1 or self.chunk < 1 or self.workers < 1:
            raise ConfigError("index_bound, chunk and workers must be positive")

    @property
    def slack(self) -> float:
        return 4 * self.delta / math.sqrt(2)


@dataclass
class AssertionResult:
    name: str
    checked_pairs: int
    min_margin: float
    witness: dict
    verdict: bool
    constant: float | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class LemmaReport:
    config: LemmaConfig
    grid_size: int
    assertions: list

    @property
    def verdict(self) -> bool:
        return all(a.verdict for a in self.assertions)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": 1,
                "config": asdict(self.config),
                "grid_size": self.grid_size,
                "verdict": self.verdict,
                "assertions": [asdict(a) for a in self.assertions],
            },
            indent=2,
        )


def build_grid(cfg: LemmaConfig) -> np.ndarray:
    """Points p delta with |p delta| < r0 + delta/sqrt(2), row-major by p2 then p1."""
    bound = cfg.r0 + cfg.delta / math.sqrt(2)
    P = int(math.ceil(bound / cfg.delta))
    p = np.arange(-P, P + 1)
    P2, P1 = np.meshgrid(p, p, indexing="ij")
    pts = np.stack([P1.ravel(), P2.ravel()], axis=1) * cfg.delta
    return pts[np.hypot(pts[:, 0], pts[:, 1]) < bound]


def _rotations(y: np.ndarray) -> np.ndarray:
    """R60^l y for l = 0..5, shape (6, n, 2)."""
    R = build_geometry().R60
    out = [y]
    for _ in range(5):
        out.append(out[-1] @ R.T)
    return np.stack(out)


def _chunked_min(cfg: LemmaConfig, n_z: int, fn):
    """Apply fn(lo, hi) -> (min, argmin info) to z chunks and reduce in chunk order."""
    spans = [(lo, min(lo + cfg.chunk, n_z)) for lo in range(0, n_z, cfg.chunk)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(lambda s: fn(*s), spans))
    else:
        parts = [fn(*s) for s in spans]
    best = None
    for val, info in parts:
        if best is None or val < best[0]:  # strict: first encountered wins ties
            best = (val, info)
    return best


def _min_rot_dist(z: np.ndarray, yrot: np.ndarray, shift=None) -> np.ndarray:
    """min over l of |z + shift - R60^l y|, shape (len(z), n_y)."""
    zz = z if shift is None else z + shift
    d = zz[None, :, None, :] - yrot[:, None, :, :]
    return np.sqrt(np.min(np.sum(d * d, axis=-1), axis=0))


def _witness(z, y, **kw) -> dict:
    out = {"z": [float(t) for t in z], "y": [float(t) for t in y]}
    out.update(kw)
    return out


def verify_assertion1(cfg: LemmaConfig, grid: np.ndarray | None = None) -> AssertionResult:
    """min over pairs of max_l (|z+e-y| - |z - R60^l y|) - 4 delta/sqrt(2)."""
    geom = build_geometry()
    e = geom.eA[0]
    G = build_grid(cfg) if grid is None else grid
    yrot = _rotations(G)

    def work(lo, hi):
        z = G[lo:hi]
        lhs = np.linalg.norm(z[:, None, :] + e - G[None, :, :], axis=-1)
        d = _min_rot_dist(z, yrot)
        marg = lhs - d - cfg.slack
        i, j = np.unravel_index(int(np.argmin(marg)), marg.shape)
        return float(marg[i, j]), (lo + i, j)

    val, (i, j) = _chunked_min(cfg, len(G), work)
    return AssertionResult(
        "assertion1", len(G) ** 2, val, _witness(G[i], G[j]), val > cfg.margin_floor,
        constant=val / NN_DIST,
    )


def candidate_shifts(cfg: LemmaConfig) -> list[tuple[int, int]]:
    """Nonzero n with |n1 v1 + n2 v2| <= |e_A1| + 3 r0 + epsilon."""
    geom = build_geometry()
    bound = NN_DIST + 3 * cfg.r0 + cfg.epsilon
    # |n.v| >= smin |n| with smin the least singular value of [v1 v2]
    smin = np.linalg.svd(geom.lattice_basis, compute_uv=False).min()
    B = int(math.ceil(bound / smin))
    out = []
    for n1 in range(-B, B + 1):
        for n2 in range(-B, B + 1):
            if (n1, n2) != (0, 0) and np.linalg.norm(geom.lattice_vector((n1, n2))) <= bound:
                out.append((n1, n2))
    return out


def verify_assertion4(cfg: LemmaConfig, grid: np.ndarray | None = None) -> AssertionResult:
    """For each candidate n: max_l |z+n.v-y| - |z+e-R60^l y| against 4 delta/sqrt(2) + epsilon."""
    geom = build_geometry()
    e = geom.eA[0]
    G = build_grid(cfg) if grid is None else grid
    yrot = _rotations(G)
    ns = candidate_shifts(cfg)
    shifts = np.array([geom.lattice_vector(n) for n in ns])

    def work(lo, hi):
        z = G[lo:hi]
        d = _min_rot_dist(z, yrot, shift=e)
        best = (math.inf, None)
        for a, s in enumerate(shifts):
            lhs = np.linalg.norm(z[:, None, :] + s - G[None, :, :], axis=-1)
            marg = lhs - d - cfg.slack - cfg.epsilon
            i, j = np.unravel_index(int(np.argmin(marg)), marg.shape)
            if marg[i, j] < best[0]:
                best = (float(marg[i, j]), (lo + i, j, a))
        return best

    val, (i, j, a) = _chunked_min(cfg, len(G), work)
    return AssertionResult(
        "assertion4", len(G) ** 2 * len(ns), val, _witness(G[i], G[j], n=list(ns[a])),
        val > cfg.margin_floor, constant=val / NN_DIST, extra={"shifts": [list(n) for n in ns]},
    )


def _index_set(bound: int):
    r = range(-bound, bound + 1)
    return [(a, b) for a in r for b in r]


def verify_assertion2_bounded(cfg: LemmaConfig, grid: np.ndarray | None = None) -> AssertionResult:
    """|z - m.v - y| - min_l |z - R60^l y| >= c'' |m| for 0 < |m|_inf <= index_bound.

    c'' = |e_A1| 1e-6 / 2.  Shifts whose crude lower bound
    |m.v| - 2 max|x| - max d - c''|m| already exceeds the running chunk minimum
    are certified by that bound instead of pairwise evaluation.
    """
    geom = build_geometry()
    G = build_grid(cfg) if grid is None else grid
    yrot = _rotations(G)
    c2 = 0.5 * NN_DIST * 1e-6
    ms = [m for m in _index_set(cfg.index_bound) if m != (0, 0)]
    mv = np.array([geom.lattice_vector(m) for m in ms])
    mnorm = np.hypot(*np.array(ms, dtype=float).T)
    order = np.argsort(np.linalg.norm(mv, axis=1), kind="stable")
    gmax = float(np.max(np.linalg.norm(G, axis=1)))

    def work(lo, hi):
        z = G[lo:hi]
        d = _min_rot_dist(z, yrot)
        dmax = float(d.max())
        best = (math.inf, None)
        for a in order:
            lb = np.linalg.norm(mv[a]) - 2 * gmax - dmax - c2 * mnorm[a]
            if lb >= best[0]:
                continue
            lhs = np.linalg.norm(z[:, None, :] - mv[a] - G[None, :, :], axis=-1)
            marg = lhs - d - c2 * mnorm[a]
            i, j = np.unravel_index(int(np.argmin(marg)), marg.shape)
            if marg[i, j] < best[0]:
                best = (float(marg[i, j]), (lo + i, j, int(a)))
        return best

    val, (i, j, a) = _chunked_min(cfg, len(G), work)
    return AssertionResult(
        "assertion2", len(G) ** 2 * len(ms), val, _witness(G[i], G[j], m=list(ms[a])),
        val > cfg.margin_floor, constant=c2, extra={"c2": c2, "index_bound": cfg.index_bound},
    )


def verify_assertion3_bounded(cfg: LemmaConfig) -> AssertionResult:
    """|e + m.v| > |e| + 3 r0 + epsilon for every m outside N_bad with |m|_inf <= index_bound."""
    geom = build_geometry()
    e = geom.eA[0]
    thresh = NN_DIST + 3 * cfg.r0 + cfg.epsilon
    best = (math.inf, None)
    count = 0
    for m in _index_set(cfg.index_bound):
        if m in N_BAD:
            continue
        count += 1
        marg = float(np.linalg.norm(e + geom.lattice_vector(m))) - thresh
        if marg < best[0]:
            best = (marg, m)
    return AssertionResult(
        "assertion3", count, best[0], {"m": list(best[1])}, best[0] > cfg.margin_floor,
        constant=best[0], extra={"N_bad": [list(m) for m in N_BAD], "threshold": thresh},
    )


def verify_assertions23_bounded(cfg: LemmaConfig, grid: np.ndarray | None = None):
    return verify_assertion2_bounded(cfg, grid), verify_assertion3_bounded(cfg)


def run_lemma(cfg: LemmaConfig | None = None) -> LemmaReport:
    cfg = LemmaConfig() if cfg is None else cfg
    G = build_grid(cfg)
    a1 = verify_assertion1(cfg, G)
    a2, a3 = verify_assertions23_bounded(cfg, G)
    a4 = verify_assertion4(cfg, G)
    return LemmaReport(cfg, len(G), [a1, a2, a3, a4])
