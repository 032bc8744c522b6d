"""Command-line front end: strongbind <command> [options].

Every command writes one CSV or JSON artifact (stdout unless --out is given).
Options may also come from a flat JSON or TOML file passed with --config;
explicit flags take precedence over the file.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .atomic import (GroundState, R_CRITICAL, bump_well, ground_state, rho_lambda,
                     smoothed_cylinder_well)
from .bloch import (BlochProblem, band_path, dirac_point, gap_vs_eta, rescaled_dispersion,
                    resolvent_distance, symmetry_path, truncation_check)
from .edges import dual_slice, nofold_check
from .errors import ConfigError, NotCoprime, StrongBindError
from .geomlemma import LemmaConfig, run_lemma
from .lattice import build_geometry, edge_from_indices
from .potential import FourierPotential, periodize, pt_breaking_potential, trig_potential
from .tightbinding import dual_cell_grid, h_tb_matrix, wallace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERDICT = 0, 1, 2, 3
SCHEMA = 1
FIGURE_CASES = [(1.0, (1, 0)), (1.0, (1, 1)), (1.0, (2, 1)), (5.0, (1, 0)), (5.0, (1, 1)), (5.0, (2, 1))]


class VerdictFalse(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _edge(text: str) -> tuple[int, int]:
    parts = [int(t) for t in str(text).split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("edge must be 'a1,b1'")
    return parts[0], parts[1]


def atomic_write(path: str | None, text: str) -> None:
    """Write text to path via a temporary file and rename; stdout when path is None."""
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.15g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def json_text(payload: dict, args) -> str:
    out = {"schema": SCHEMA, "version": __version__, "config": _config_echo(args)}
    out.update(payload)
    return json.dumps(out, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}


def load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text) if path.endswith(".toml") else json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
        raise ConfigError("config file must be a flat key-value document")
    return {k.replace("-", "_"): v for k, v in data.items()}


# ---------------------------------------------------------------- model builders

def make_well(args):
    if args.well == "bump":
        return bump_well(args.r0 if args.r0 is not None else R_CRITICAL)
    return smoothed_cylinder_well(radius=args.radius, width=args.width)


def cached_ground_state(args, lam: float) -> GroundState:
    """Atomic solve, reused from the cache directory when an identical run exists."""
    well = make_well(args)
    key = json.dumps({"well": well.to_dict(), "lambda": lam, "n_r": args.n_r}, sort_keys=True)
    digest = hashlib.sha256(key.encode()).hexdigest()[:20]
    path = Path(args.cache_dir) / f"gs-{digest}.json" if args.cache_dir else None
    if path is not None and path.exists():
        return GroundState.from_json(path.read_text(encoding="utf-8"))
    gs = ground_state(well, lam, n_r=args.n_r)
    if path is not None:
        atomic_write(str(path), gs.to_json())
    return gs


def make_potential(args, N: int) -> FourierPotential:
    if args.potential == "trig":
        return trig_potential()
    if args.potential == "zero":
        return FourierPotential.zero()
    return periodize(make_well(args), args.pot_cutoff or 2 * N)


def make_problem(args, lam: float, N: int | None = None) -> BlochProblem:
    N = args.N if N is None else N
    return BlochProblem(make_potential(args, N), lam, N)


def _kpoint(name: str) -> np.ndarray:
    geom = build_geometry()
    table = {"gamma": np.zeros(2), "K": geom.K, "Kprime": geom.Kprime, "M": geom.M, "mid": 0.5 * geom.K}
    if name in table:
        return table[name]
    vals = _floats(name)
    if len(vals) != 2:
        raise ConfigError(f"unknown k-point {name!r}")
    return np.array(vals)


# ---------------------------------------------------------------- commands

def cmd_tb(args):
    k, frac = dual_cell_grid(args.grid)
    w = wallace(k)
    ev = np.linalg.eigvalsh(h_tb_matrix(k))
    rows = [(float(f[0]), float(f[1]), float(p[0]), float(p[1]), float(a), float(e[0]), float(e[1]))
            for f, p, a, e in zip(frac, k, w, ev)]
    return csv_text(["k1_frac", "k2_frac", "kx", "ky", "wtb", "E_minus", "E_plus"], rows)


def cmd_ground(args):
    gs = cached_ground_state(args, args.lam)
    well = make_well(args)
    rho = gs.rho if gs.rho is not None else rho_lambda(gs, well)
    return json_text({"lambda": gs.lam, "E0": gs.E0, "E0_over_lambda2": gs.energy_ratio,
                      "gap": gs.gap, "rho": rho, "well": well.to_dict()}, args)


def cmd_rho(args):
    rows = []
    for lam in args.lambdas:
        gs = cached_ground_state(args, lam)
        rows.append((lam, gs.E0, gs.gap, gs.rho, math.log(gs.rho) if gs.rho > 0 else float("-inf")))
    return csv_text(["lambda", "E0", "gap", "rho", "ln_rho"], rows)


def cmd_bands(args):
    prob = make_problem(args, args.lam)
    bs = band_path(prob, symmetry_path(args.path_points), args.n_bands)
    return bs.to_csv()


def cmd_dirac(args):
    prob = make_problem(args, args.lam)
    K = _kpoint(args.kstar)
    rho = None
    if args.potential != "trig" and args.potential != "zero":
        rho = cached_ground_state(args, args.lam).rho
    rep = dirac_point(prob, K, rho=rho)
    conv = truncation_check(lambda p: dirac_point(p, K).E_D, prob,
                            rebuild=lambda N: make_problem(args, args.lam, N))
    payload = json.loads(rep.to_json())
    payload["truncation"] = conv
    return json_text({"dirac": payload}, args)


def _kset() -> np.ndarray:
    geom = build_geometry()
    K, M = geom.K, geom.M
    t = np.linspace(0, 1, 5)[:-1, None]
    return np.vstack([t * K, K + t * (M - K), M * (1 - t)])


def cmd_converge(args):
    ks = _kset()
    rows = []
    for lam in args.lambdas:
        gs = cached_ground_state(args, lam)

        def sup_dev(p):
            return max(r["dev"] for r in rescaled_dispersion(p, gs, ks))

        prob = make_problem(args, lam)
        conv = truncation_check(sup_dev, prob, rebuild=lambda N, lam=lam: make_problem(args, lam, N))
        rows.append((lam, args.N, gs.rho, conv["value"], conv["value_next"], conv["rel_change"],
                     int(conv["converged"])))
    return csv_text(["lambda", "N", "rho", "sup_dev", "sup_dev_N_plus_4", "rel_change", "converged"], rows)


def cmd_nofold(args):
    geom = build_geometry()
    cases = [c for c in FIGURE_CASES
             if (args.lam is None or c[0] == args.lam) and (args.edge is None or c[1] == args.edge)]
    if not cases:
        cases = [(args.lam if args.lam is not None else 1.0, args.edge or (1, 0))]
    rows = []
    for lam, ab in cases:
        prob = make_problem(args, lam)
        sl = dual_slice(prob, edge_from_indices(*ab), geom.K, args.M)
        res = nofold_check(sl, tol=args.tol)
        verdict = "holds" if res["holds"] else "fails"
        print(f"lambda={lam:g} edge={ab[0]},{ab[1]} ({sl.edge.name}): {verdict}", file=sys.stderr)
        if args.slices_dir:
            atomic_write(os.path.join(args.slices_dir, f"slice_l{lam:g}_{ab[0]}_{ab[1]}.csv"), sl.to_csv())
        rows.append((lam, ab[0], ab[1], sl.edge.name, verdict, len(res["crossings"]),
                     ";".join(f"{c['xi']:.6f}" for c in res["crossings"])))
    return csv_text(["lambda", "a1", "b1", "edge", "verdict", "n_crossings", "crossings_xi"], rows)


def cmd_gap(args):
    prob = make_problem(args, args.lam)
    W = pt_breaking_potential(center=prob.V.center)
    rows = gap_vs_eta(prob, W, _kpoint(args.kstar), args.etas)
    return csv_text(["eta", "gap", "theta_sharp", "predicted_gap", "ratio"],
                    [(r["eta"], r["gap"], r["theta_sharp"], r["predicted_gap"],
                      r["gap"] / r["predicted_gap"] if r["predicted_gap"] > 0 else float("nan")) for r in rows])


def cmd_resolvent(args):
    k = _kpoint(args.k)
    z = complex(args.z_re, args.z_im)
    rows = []
    for lam in args.lambdas:
        gs = cached_ground_state(args, lam)
        prob = make_problem(args, lam)
        r = resolvent_distance(prob, gs, k, z, max_overlap=args.max_overlap)
        rows.append((lam, r["overlap"], r["distance"]))
    return csv_text(["lambda", "overlap", "distance"], rows)


def cmd_geomlemma(args):
    cfg = LemmaConfig(delta=args.delta, r0=args.r0_factor / math.sqrt(3), epsilon=args.epsilon,
                      index_bound=args.index_bound, workers=args.workers)
    report = run_lemma(cfg)
    text = report.to_json() + "\n"
    if not report.verdict:
        atomic_write(args.out, text)
        raise VerdictFalse("geometric lemma verification failed")
    return text


# ---------------------------------------------------------------- parser

def _add_well(p):
    p.add_argument("--well", choices=["bump", "cylinder"], default="bump")
    p.add_argument("--r0", type=float, default=None, help="bump support radius")
    p.add_argument("--radius", type=float, default=0.15, help="cylinder radius")
    p.add_argument("--width", type=float, default=0.01, help="cylinder edge smoothing width")
    p.add_argument("--n-r", dest="n_r", type=int, default=8000, help="radial grid points")
    p.add_argument("--cache-dir", default=".strongbind-cache")


def _add_bloch(p, potential="bump", N=16):
    p.add_argument("--potential", choices=["bump", "cylinder", "trig", "zero"], default=potential)
    p.add_argument("--N", type=int, default=N, help="plane-wave truncation radius")
    p.add_argument("--pot-cutoff", type=int, default=None, help="Fourier cutoff of the periodized well")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strongbind", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="flat JSON or TOML option file")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.set_defaults(func=func)
        return p

    p = add("tb", cmd_tb, "tight-binding surface on a dual-cell grid")
    p.add_argument("--grid", type=int, default=201)

    p = add("ground", cmd_ground, "atomic ground state and rho")
    _add_well(p)
    p.add_argument("--lambda", dest="lam", type=float, default=16.0)

    p = add("rho", cmd_rho, "rho over a lambda sweep")
    _add_well(p)
    p.add_argument("--lambdas", type=_floats, default=[8.0, 12.0, 16.0, 20.0])

    p = add("bands", cmd_bands, "band structure along Gamma-K-M-Gamma")
    _add_well(p)
    _add_bloch(p)
    p.add_argument("--lambda", dest="lam", type=float, default=16.0)
    p.add_argument("--path-points", type=int, default=30, help="samples per path segment")
    p.add_argument("--n-bands", type=int, default=6)

    p = add("dirac", cmd_dirac, "Dirac point report at a zone vertex")
    _add_well(p)
    _add_bloch(p)
    p.add_argument("--lambda", dest="lam", type=float, default=16.0)
    p.add_argument("--kstar", default="K")

    p = add("converge", cmd_converge, "rescaled dispersion against the tight-binding bands")
    _add_well(p)
    _add_bloch(p)
    p.add_argument("--lambdas", type=_floats, default=[8.0, 12.0, 16.0, 20.0])

    p = add("nofold", cmd_nofold, "spectral no-fold check along rational edges")
    _add_well(p)
    _add_bloch(p, potential="trig", N=14)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--edge", type=_edge, default=None, help="a1,b1 (default: all figure cases)")
    p.add_argument("--M", type=int, default=41, help="odd number of slice samples")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--slices-dir", default=None, help="directory for per-slice CSV files")

    p = add("gap", cmd_gap, "gap at a vertex under an inversion-odd perturbation")
    _add_well(p)
    _add_bloch(p, potential="trig", N=14)
    p.add_argument("--lambda", dest="lam", type=float, default=5.0)
    p.add_argument("--kstar", default="K")
    p.add_argument("--etas", type=_floats, default=[0.0, 1e-3, 1e-2, 1e-1])

    p = add("resolvent", cmd_resolvent, "scaled resolvent distance over a lambda sweep")
    _add_well(p)
    _add_bloch(p)
    p.add_argument("--lambdas", type=_floats, default=[10.0, 16.0, 20.0])
    p.add_argument("--k", default="gamma", help="gamma, mid, K, M or 'kx,ky'")
    p.add_argument("--z-re", type=float, default=0.0)
    p.add_argument("--z-im", type=float, default=1.0)
    p.add_argument("--max-overlap", type=float, default=0.5)

    p = add("geomlemma", cmd_geomlemma, "grid verification of the geometric lemma")
    p.add_argument("--delta", type=float, default=0.5e-2)
    p.add_argument("--r0-factor", type=float, default=0.33, help="r0 in units of |e_A1|")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--index-bound", type=int, default=8)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    return ap


def parse_args(argv) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        file_opts = load_config_file(args.config)
        sub = ap._subparsers._group_actions[0].choices[args.command]
        # keys are long option names (dashes or underscores) or destinations
        by_key = {}
        for action in sub._actions:
            if action.dest in ("help", "config", "out") or not action.option_strings:
                continue
            by_key[action.dest] = action
            for opt in action.option_strings:
                if opt.startswith("--"):
                    by_key[opt[2:].replace("-", "_")] = action
        unknown = sorted(set(file_opts) - set(by_key))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        converted = {}
        for key, v in file_opts.items():
            action = by_key[key]
            if action.type is _floats and isinstance(v, list):
                v = [float(t) for t in v]
            elif action.type is _edge and isinstance(v, list):
                v = tuple(int(t) for t in v)
            elif action.type is not None and isinstance(v, (str, int, float)):
                v = action.type(str(v)) if action.type in (_floats, _edge) else action.type(v)
            converted[action.dest] = v
        # file values become defaults, so explicit flags still win
        sub.set_defaults(**converted)
        args = ap.parse_args(argv)
    _validate(args)
    return args


def _validate(args) -> None:
    for name in ("N", "M", "grid", "n_bands", "path_points", "n_r", "workers", "index_bound"):
        v = getattr(args, name, None)
        if v is not None and v <= 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "N", None) is not None and args.N < 4:
        raise ConfigError("--N must be at least 4")
    if getattr(args, "lam", None) is not None and args.lam <= 0:
        raise ConfigError("--lambda must be positive")
    if getattr(args, "M", None) is not None and (args.M < 41 or args.M % 2 == 0):
        raise ConfigError("--M must be odd and at least 41")


def _error_record(exc: BaseException, code: int) -> None:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(rec), file=sys.stderr)


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        text = args.func(args)
        atomic_write(args.out, text)
        return EXIT_OK
    except SystemExit as exc:  # argparse usage errors and --help
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    except (ConfigError, NotCoprime, argparse.ArgumentTypeError, FileNotFoundError) as exc:
        _error_record(exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except VerdictFalse as exc:
        _error_record(exc, EXIT_VERDICT)
        return EXIT_VERDICT
    except (StrongBindError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        _error_record(exc, EXIT_NUMERIC)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
