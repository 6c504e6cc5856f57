"""Command-line entry point.

Exit codes: 0 all hard checks pass, 1 a hard check failed, 2 configuration
error, 3 inadmissible terminal time, 4 non-convergence, 5 any other library
error.  Set ``FRACTERM_LOG`` to ``quiet``, ``info`` or ``debug``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import analysis as an
from .config import BasisConfig, ExperimentConfig, load_config
from .errors import ConfigError, FractermError, HypothesisError, NonConvergence, TerminalTimeInadmissible
from .mittag_leffler import fit_bound_constants, ml_array, ml_with_error
from .runner import RunResult, build, build_basis, hypothesis_checks, run_experiment

log = logging.getLogger("fracterm")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_TERMINAL, EXIT_NONCONV, EXIT_OTHER = range(6)
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def constants_rows(built) -> list[tuple[str, float]]:
    rows = list(built.bundle.rows())
    seen = {n for n, _ in rows}
    rows += [(k, v) for k, v in sorted(built.extra.items()) if k not in seen]
    den = np.abs(built.setup.denominators)
    j = int(np.argmin(den))
    rows += [("worst_mode_amplification", float(1.0 / den[j])), ("worst_mode_index", j + 1)]
    return rows


def write_run(out: Path, res: RunResult) -> None:
    traj = res.trajectory
    norms = res.built.cfg.analysis.norms
    t = traj.times
    cols = [traj.norms(g) for g in norms]
    write_atomic(
        out / "trajectory.csv",
        csv_text(["n", "t"] + [f"norm_{fmt(g)}" for g in norms], ([n, t[n]] + [c[n] for c in cols] for n in range(t.size))),
    )
    write_atomic(out / "iterations.csv", csv_text(["k", "weighted_diff", "ratio"], ((r.k, r.weighted_diff, r.ratio) for r in traj.iterations)))
    write_atomic(out / "constants.csv", csv_text(["name", "value"], constants_rows(res.built)))
    write_report(out, res.report)


def write_report(out: Path, rows: Sequence[an.ReportRow]) -> None:
    write_atomic(
        out / "report.csv",
        csv_text(["estimate_id", "lhs_max", "rhs_envelope", "ratio", "pass"], ((r.estimate_id, r.lhs_max, r.rhs_envelope, r.ratio, r.passed) for r in rows)),
    )


def error_row(exc: FractermError) -> an.ReportRow:
    if isinstance(exc, TerminalTimeInadmissible):
        return an.ReportRow(f"error:{exc.code}:j={exc.j}", abs(exc.value), exc.eps_den, math.inf, False)
    return an.ReportRow(f"error:{getattr(exc, 'code', type(exc).__name__)}", math.nan, math.nan, math.nan, False)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, TerminalTimeInadmissible):
        return EXIT_TERMINAL
    if isinstance(exc, NonConvergence):
        return EXIT_NONCONV
    return EXIT_OTHER


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config", "this subcommand needs a configuration file")
    return load_config(args.config)


def _out_dir(args, cfg: ExperimentConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output:
        return Path(cfg.output)
    return Path("fracterm-out")


def cmd_ml_eval(args) -> int:
    for z in args.z:
        v = ml_with_error(args.alpha, args.beta, z)
        print(f"E_{{{fmt(args.alpha)},{fmt(args.beta)}}}({fmt(z)}) = {fmt(v.value)}  error <= {fmt(v.error)}  [{v.branch}]")
    return EXIT_OK


def cmd_ml_scan(args) -> int:
    bc = fit_bound_constants(args.alpha, args.beta, args.t_max, args.n)
    t = np.logspace(math.log10(args.t_min), math.log10(args.t_max), args.n)
    e = ml_array(args.alpha, args.beta, -t)
    lo, hi = bc.m_alpha / (1.0 + t), bc.M_alpha / (1.0 + t)
    a = np.abs(e)
    bad = (a > hi * (1 + 1e-12)) | (a < lo * (1 - 1e-12))
    text = csv_text(["t", "E_value", "lower_envelope", "upper_envelope", "violated_flag"], zip(t, e, lo, hi, bad))
    if args.out:
        write_atomic(Path(args.out) / "ml_scan.csv", text)
    else:
        sys.stdout.write(text)
    if bc.lower_bound_violated:
        log.warning("lower envelope degenerate on the scan (sign change or decay): m=%g", bc.m_alpha)
    return EXIT_OK


def cmd_basis_info(args) -> int:
    if args.config:
        bcfg = load_config(args.config).basis
    else:
        bcfg = BasisConfig(kind=args.kind, L=args.L, Lx=args.L, Ly=args.Ly if args.Ly else args.L, J=args.J, spectrum=args.spectrum)
        if bcfg.kind == "file" and not bcfg.spectrum:
            raise ConfigError("--spectrum", "required for kind 'file'")
    basis = build_basis(bcfg)
    sys.stdout.write(csv_text(["j", "lambda"], ((j + 1, lam) for j, lam in enumerate(basis.lambdas))))
    skip = basis.J // 4
    try:
        fit = an.fit_weyl(basis.lambdas, skip=skip)
        print(f"# weyl slope={fmt(fit.slope)} (2/d = {fmt(2.0 / basis.dim) if basis.dim else 'n/a'}) r2={fmt(fit.r_squared)}")
        if basis.dim:
            w = an.weyl_constant(basis.lambdas, basis.dim, skip=skip)
            print(f"# weyl c_L={fmt(w.c_L)} boundary={fmt(w.boundary)}")
    except FractermError as exc:
        print(f"# weyl fit unavailable: {exc}")
    return EXIT_OK


def cmd_constants(args) -> int:
    cfg = _config(args)
    b = build(cfg, seed=args.seed)
    rows = constants_rows(b)
    text = csv_text(["name", "value"], rows)
    if args.out:
        write_atomic(Path(args.out) / "constants.csv", text)
    sys.stdout.write(text)
    for n in b.bundle.notes:
        print(f"# {n}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    try:
        b = build(cfg, seed=args.seed)
    except HypothesisError as exc:
        # a constant that cannot be formed is itself a failed check
        print(f"FAIL  {exc.constraint}  {exc}")
        if args.out:
            write_report(Path(args.out), [an.ReportRow(exc.constraint, math.nan, math.nan, math.nan, False)])
        return EXIT_CHECK
    checks = hypothesis_checks(b)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.id}  {c.detail}")
    for n in b.bundle.notes:
        print(f"NOTE  {n}")
    if args.out:
        write_report(Path(args.out), [an.ReportRow(c.id, math.nan, math.nan, math.nan, c.ok) for c in checks])
    return EXIT_OK if all(c.ok for c in checks) else EXIT_CHECK


def _run(args, cfg: ExperimentConfig, suites=None) -> int:
    out = _out_dir(args, cfg)
    try:
        res = run_experiment(cfg, threads=args.threads, seed=args.seed, suites=suites)
    except ConfigError:
        raise
    except FractermError as exc:
        write_report(out, [error_row(exc)])
        traj = getattr(exc, "trajectory", None)
        if traj is not None:
            write_atomic(out / "iterations.csv", csv_text(["k", "weighted_diff", "ratio"], ((r.k, r.weighted_diff, r.ratio) for r in traj.iterations)))
        raise
    write_run(out, res)
    for r in res.report:
        log.info("%s %s lhs=%s rhs=%s", "pass" if r.passed else "FAIL", r.estimate_id, fmt(r.lhs_max), fmt(r.rhs_envelope))
    failed = [r.estimate_id for r in res.report if not r.passed]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_solve(args) -> int:
    return _run(args, _config(args))


def cmd_roundtrip(args) -> int:
    cfg = _config(args)
    return _run(args, replace(cfg, solver=replace(cfg.solver, mode="roundtrip")))


def cmd_regularity(args) -> int:
    cfg = _config(args)
    return _run(args, cfg, suites=("blowup", "holder"))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment JSON file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for kernel tables")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized fits")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracterm", description="Terminal value problems for time-fractional wave equations.")
    sub = ap.add_subparsers(dest="command", required=True)

    ml = sub.add_parser("ml", help="Mittag-Leffler function")
    mls = ml.add_subparsers(dest="ml_command", required=True)
    p = mls.add_parser("eval", help="evaluate E_{alpha,beta}(z) for real z <= 0")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--z", type=float, nargs="+", required=True, help="arguments; write --z=-1e4 for exponent forms")
    p.set_defaults(func=cmd_ml_eval)
    p = mls.add_parser("scan", help="scan E_{alpha,beta}(-t) against its fitted envelopes")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--t-min", type=float, default=1e-4)
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--n", type=int, default=200)
    _common(p)
    p.set_defaults(func=cmd_ml_scan)

    basis = sub.add_parser("basis", help="spectral basis")
    bs = basis.add_subparsers(dest="basis_command", required=True)
    p = bs.add_parser("info", help="eigenvalue table and Weyl fit")
    p.add_argument("--kind", default="dirichlet_1d", choices=("dirichlet_1d", "dirichlet_2d", "file"))
    p.add_argument("--L", type=float, default=math.pi)
    p.add_argument("--Ly", type=float, default=None)
    p.add_argument("--J", type=int, default=32)
    p.add_argument("--spectrum", default=None)
    _common(p)
    p.set_defaults(func=cmd_basis_info)

    for name, fn, text in (
        ("validate", cmd_validate, "dry run: print every hypothesis check"),
        ("solve", cmd_solve, "run the configured pipeline"),
        ("roundtrip", cmd_roundtrip, "terminal solve then forward march back to T"),
        ("regularity", cmd_regularity, "blow-up and Holder exponent fits"),
        ("constants", cmd_constants, "print the constants bundle"),
    ):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.set_defaults(func=fn)
    return ap


def _setup_logging() -> None:
    level = os.environ.get("FRACTERM_LOG", "quiet").strip().lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except FractermError as exc:
        print(f"error [{getattr(exc, 'code', type(exc).__name__)}]: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
