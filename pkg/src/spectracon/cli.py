"""Command-line front end.

Exit codes: 0 success (every verdict PASS), 1 at least one dominance FAIL,
2 usage or data error. Eigen-indices on the command line are 1-based.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .concentration import (
    SubgaussianProfile,
    angle_tail_bound,
    eigenvalue_tail_bound,
    k_factor,
    k_factors,
    pc_capture_bound,
    pc_capture_support,
    samples_for_angle,
    samples_for_eigenvalue,
)
from .montecarlo import ExperimentConfig, ExperimentError, run_experiment, summarize, verify_dominance
from .perturbation import DEFAULT_GAP_TOL
from .sampling import DistributionSpec, derive_seed, parse_spec, read_samples_csv
from .svg import line_chart

THREADS_ENV = "SPECTRACON_THREADS"


class UsageError(Exception):
    """Bad flags or unreadable input; maps to exit code 2."""


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.9g}"


def _list(kind):
    def parse(text: str):
        try:
            return [kind(tok) for tok in text.split(",") if tok.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None
    return parse


def _flat(values) -> list:
    if values is None:
        return None
    return [v for chunk in values for v in chunk]


def _add_source(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--data", metavar="CSV", help="samples, one per row (the full-dataset covariance is the truth)")
    g.add_argument("--dist", metavar="SPEC", help="kind:l1,l2,...[@basis=<csv>], kind in gaussian|sphere|rademacher")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=_list(int), nargs="+", required=True, help="sample counts")
    p.add_argument("--trials", type=int, default=100, help="sample draws per m (default 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (fallback ${THREADS_ENV}, default 1)")
    p.add_argument("--out", default=".", help="output directory (default .)")


def _spec(args) -> DistributionSpec:
    try:
        if args.data:
            return DistributionSpec("empirical", data=read_samples_csv(args.data))
        return parse_spec(args.dist)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise UsageError(f"${THREADS_ENV} must be an integer") from None


def _indices(values, n: int, name: str) -> list[int]:
    vals = _flat(values)
    if vals is None:
        return list(range(n))
    bad = [v for v in vals if not 1 <= v <= n]
    if bad:
        raise UsageError(f"--{name} values {bad} outside 1..{n}")
    return [v - 1 for v in vals]


def _config(args, spec: DistributionSpec, i_idx, **kw) -> ExperimentConfig:
    try:
        return ExperimentConfig(spec, _flat(args.m), args.trials, args.seed, i_idx, threads=_threads(args),
                                **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    path.write_bytes(buf.getvalue().encode())


class _Manifest:
    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.start = time.perf_counter()
        self.outputs: list[str] = []
        self.extra: dict = {}

    def add(self, path: Path) -> Path:
        self.outputs.append(path.name)
        return path

    def write(self, out: Path) -> None:
        manifest = {f"config.{k}": v for k, v in vars(self.args).items() if k != "func"}
        manifest.update({
            "command": self.args.command,
            "argv": self.argv,
            "seed": getattr(self.args, "seed", None),
            "version": __version__,
            "outputs": sorted(self.outputs) + ["manifest.json"],
            "duration_s": round(time.perf_counter() - self.start, 3),
        })
        manifest.update(self.extra)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _kfactors_for(spec: DistributionSpec, args) -> list:
    return k_factors(spec, spec.decomposition(), None, n_mc=args.nmc, seed=derive_seed(args.seed, 0x6B))


def cmd_localize(args, man: _Manifest) -> int:
    spec = _spec(args)
    n = spec.n
    i_idx = _indices(args.i, n, "i")
    config = _config(args, spec, i_idx, exhaustive=args.all_rows)
    report = summarize(run_experiment(config), config)
    man.extra["failed_trials"] = report.failed_trials
    lam = report.eigenvalues
    out = _outdir(args)
    rows = []
    for curve in sorted(report.localization, key=lambda c: (c.i, c.m)):
        for j in range(n):
            rows.append([curve.i + 1, j + 1, float(lam[j]), curve.m, float(curve.mean_abs_inner[j]),
                         float(curve.stderr[j])])
    _write_csv(man.add(out / "localize.csv"), ["i", "j", "lambda_j", "m", "mean_abs_inner", "stderr"], rows)
    if args.svg:
        for curve in report.localization:
            svg = line_chart([(f"i={curve.i + 1}, m={curve.m}", list(lam), list(curve.mean_abs_inner))],
                             title=f"mean |<u_hat_{curve.i + 1}, u_j>| at m={curve.m}",
                             xlabel="lambda_j", ylabel="mean |inner product|")
            man.add(out / f"localize_i{curve.i + 1}_m{curve.m}.svg").write_text(svg)
    man.write(out)
    return 0


def cmd_verify(args, man: _Manifest) -> int:
    spec = _spec(args)
    n = spec.n
    i_idx = _indices(args.i, n, "i")
    j_idx = set(_indices(args.j, n, "j"))
    t_grid = _flat(args.t)
    profile = None
    if args.bound == "subgaussian":
        try:
            profile = SubgaussianProfile.from_spec(spec, n_mc=args.nmc, seed=derive_seed(args.seed, 0x5B),
                                                   p_max=args.p_max, c_abs=args.c_abs)
        except ValueError as exc:
            raise UsageError(f"subgaussian bound unavailable: {exc}") from None
    if args.bound == "capture" and any(not 0 < t < 1 for t in t_grid):
        raise UsageError("capture bound needs every --t in (0, 1)")
    ells = _flat(args.ell) or [0]
    capture_t = None
    if args.bound == "capture":
        _check_capture_support(spec.decomposition().eigenvalues, i_idx, ells, n)
    else:
        capture_t = []
    config = _config(args, spec, i_idx, t_grid=t_grid, ell_grid=ells)
    k = _kfactors_for(spec, args)
    try:
        report = summarize(run_experiment(config), config, k=k, profile=profile, capture_t=capture_t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    man.extra["failed_trials"] = report.failed_trials
    verdicts = verify_dominance(report, [args.bound], bound_scale=args.bound_scale)
    cond = {(c.i, c.j, c.t, c.m): c for c in report.angle}
    rows = []
    for v in verdicts:
        c = v.coords
        if v.bound in ("tchebichef", "subgaussian", "condition") and c["j"] not in j_idx:
            continue
        if v.bound in ("tchebichef", "subgaussian"):
            cell = cond[(c["i"], c["j"], c["t"], c["m"])]
            row = [v.bound, c["i"] + 1, c["j"] + 1, c["t"], c["m"], cell.empirical, cell.empirical_conditional]
        elif v.bound == "condition":
            row = [v.bound, c["i"] + 1, c["j"] + 1, "", c["m"], v.empirical, ""]
        elif v.bound == "eigenvalue":
            row = [v.bound, c["i"] + 1, "", c["t"], c["m"], v.empirical, ""]
        else:
            # capture rows carry the window half-width in the j column
            row = [v.bound, c["i"] + 1, c["ell"], c["t"], c["m"], v.empirical, ""]
        rows.append(row + [v.theoretical, v.stderr, "PASS" if v.passed else "FAIL"])
    out = _outdir(args)
    _write_csv(man.add(out / "verify.csv"),
               ["bound", "i", "j", "t", "m", "empirical", "empirical_conditional", "theoretical", "stderr",
                "verdict"], rows)
    man.write(out)
    failed = [r for r in rows if r[-1] == "FAIL"]
    print(f"{len(rows) - len(failed)} PASS, {len(failed)} FAIL")
    for r in failed:
        print("FAIL " + ",".join(fmt(x) if not isinstance(x, str) else x for x in r[:-1]))
    return 1 if failed else 0


def cmd_samplesize(args, man: _Manifest) -> int:
    t, eps = args.t, args.epsilon
    try:
        if args.kj is not None and args.gap is not None:
            m = samples_for_angle(t, eps, args.kj, args.gap)
            b = (2 * args.kj / (t * args.gap)) ** 2 / m
            print(f"m = {m}")
            print(f"angle bound at m = {fmt(min(1.0, b))}")
            return 0
        if args.ki is not None and args.lam is not None:
            m = samples_for_eigenvalue(t, eps, args.ki, args.lam)
            print(f"m = {m}")
            print(f"eigenvalue bound at m = {fmt(eigenvalue_tail_bound(t, m, args.ki, args.lam))}")
            return 0
        if args.dist or args.data:
            spec = _spec(args)
            decomp = spec.decomposition()
            lam = decomp.eigenvalues
            if args.i is None:
                raise UsageError("--dist/--data needs --i (and --j for the angle bound)")
            (i,) = _indices([[args.i]], spec.n, "i")
            if args.j:
                (j,) = _indices([[args.j]], spec.n, "j")
                kj = k_factors(spec, decomp, None, args.nmc, args.seed)[j]
                m = samples_for_angle(t, eps, kj, abs(lam[i] - lam[j]))
                print(f"k_{j + 1} = {fmt(kj.value)} ({kj.method})")
                print(f"m = {m}")
                print(f"angle bound at m = {fmt(angle_tail_bound(t, m, kj, lam[i], lam[j]))}")
            else:
                ki = k_factor(spec, decomp, i, {"gaussian": "closed", "empirical": "dataset"}.get(spec.kind, "mc"),
                              args.nmc, args.seed)
                m = samples_for_eigenvalue(t, eps, ki, lam[i])
                print(f"k_{i + 1} = {fmt(ki.value)} ({ki.method})")
                print(f"m = {m}")
                print(f"eigenvalue bound at m = {fmt(eigenvalue_tail_bound(t, m, ki, lam[i]))}")
            return 0
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError("give --kj and --gap, or --ki and --lambda, or --dist/--data with --i [--j]")


def _check_capture_support(lam, i_idx, ells, rank: int) -> None:
    for i in i_idx:
        for ell in ells:
            for j in pc_capture_support(i, ell, rank):
                if abs(lam[i] - lam[j]) <= DEFAULT_GAP_TOL:
                    raise UsageError(f"zero eigenvalue gap between i={i + 1} and j={j + 1} inside the capture support "
                                     f"for ell={ell}")


def cmd_capture(args, man: _Manifest) -> int:
    spec = _spec(args)
    n = spec.n
    i_idx = _indices(args.i, n, "i")
    ells = _flat(args.ell)
    if not 0 < args.t < 1:
        raise UsageError("--t must lie in (0, 1)")
    lam = spec.decomposition().eigenvalues
    rank = args.rank or n
    _check_capture_support(lam, i_idx, ells, rank)
    config = _config(args, spec, i_idx, t_grid=[args.t], ell_grid=ells)
    k = _kfactors_for(spec, args)
    records = run_experiment(config)
    report = summarize(records, config, capture_t=[args.t])
    man.extra["failed_trials"] = report.failed_trials
    out = _outdir(args)
    rows = []
    for c in sorted(report.capture, key=lambda c: (c.i, c.ell, c.m)):
        bound = pc_capture_bound(c.i, c.ell, args.t, lam, k, c.m, rank)
        rows.append([c.i + 1, c.ell, c.m, c.mean_capture, c.stderr_capture, bound])
    _write_csv(man.add(out / "capture.csv"), ["i", "ell", "m", "mean_capture", "stderr", "pc_bound"], rows)
    if args.svg:
        for i in i_idx:
            for ell in ells:
                pts = [(r[2], r[3]) for r in rows if r[0] == i + 1 and r[1] == ell]
                svg = line_chart([(f"i={i + 1}, ell={ell}", [p[0] for p in pts], [p[1] for p in pts])],
                                 title=f"capture of u_hat_{i + 1} within +-{ell}", xlabel="m",
                                 ylabel="mean capture", log_x=True)
                man.add(out / f"capture_i{i + 1}_ell{ell}.svg").write_text(svg)
    man.write(out)
    return 0


def cmd_kfactor(args, man: _Manifest) -> int:
    spec = _spec(args)
    decomp = spec.decomposition()
    for j in _indices(args.j, spec.n, "j"):
        try:
            kf = k_factor(spec, decomp, j, args.method, args.nmc, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        extra = f", {kf.estimate_count} samples" if kf.estimate_count else ""
        print(f"k_{j + 1} = {fmt(kf.value)} ({kf.method}{extra})")
    return 0


def cmd_rerun(args, man: _Manifest) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = manifest["argv"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    return main(argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectracon",
                                     description="Eigenvector/eigenvalue concentration bounds for sample covariances.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("localize", help="mean |<u_hat_i, u_j>| against lambda_j")
    _add_source(p)
    p.add_argument("--i", type=_list(int), nargs="+", required=True, help="sample eigenvector indices (1-based)")
    _add_run(p)
    p.add_argument("--svg", action="store_true", help="also write one SVG chart per (i, m)")
    p.add_argument("--all-rows", action="store_true",
                   help="debug: use every dataset row exactly once instead of resampling")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("verify", help="check a bound against Monte Carlo exceedance frequencies")
    _add_source(p)
    p.add_argument("--bound", choices=["tchebichef", "subgaussian", "eigenvalue", "capture", "condition"],
                   default="tchebichef")
    p.add_argument("--i", type=_list(int), nargs="+", help="indices (1-based, default all)")
    p.add_argument("--j", type=_list(int), nargs="+", help="indices (1-based, default all)")
    p.add_argument("--t", type=_list(float), nargs="+", required=True, help="thresholds")
    p.add_argument("--ell", type=_list(int), nargs="+", help="capture windows (capture bound only)")
    _add_run(p)
    p.add_argument("--c-abs", type=float, default=1.0, help="absolute constant of the subgaussian bound")
    p.add_argument("--p-max", type=int, default=8, help="largest moment order in the psi2 estimate")
    p.add_argument("--nmc", type=int, default=200_000, help="Monte Carlo draws for k-factors and psi2")
    p.add_argument("--bound-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("samplesize", help="samples needed for a bound to reach epsilon")
    _add_source(p, required=False)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--kj", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--ki", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--nmc", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_samplesize)

    p = sub.add_parser("capture", help="fraction of u_hat_i inside span(u_{i-ell}..u_{i+ell})")
    _add_source(p)
    p.add_argument("--i", type=_list(int), nargs="+", required=True)
    p.add_argument("--ell", type=_list(int), nargs="+", required=True)
    p.add_argument("--t", type=float, default=0.5, help="capture shortfall level for pc_bound (default 0.5)")
    p.add_argument("--rank", type=int, default=None, help="rank of the covariance (default n)")
    _add_run(p)
    p.add_argument("--nmc", type=int, default=200_000)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("kfactor", help="kurtosis factors k_j")
    _add_source(p)
    p.add_argument("--j", type=_list(int), nargs="+", required=True)
    p.add_argument("--method", choices=["closed", "mc", "dataset"], default="closed")
    p.add_argument("--nmc", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kfactor)

    p = sub.add_parser("rerun", help="re-execute the command recorded in a manifest.json")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, _Manifest(args, argv))
    except UsageError as exc:
        print(f"spectracon {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"spectracon {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
