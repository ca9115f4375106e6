"""Command-line front end.

    tsnoether <command> [--problem FILE | --example NAME] [--scale SPEC]
              [--out PATH] [--format csv|json] [solver flags]

Exit codes: 0 every check passed, 1 usage / I-O / parse error, 2 a
mathematical check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import builtin
from .errors import NoConvergence, NotAnExtremal, NotInvariant, RegularityViolation, TimeScaleError
from .extremal import SweepOptions, forward_backward_sweep, verify_extremal
from .noether import (
    STATE_ONLY,
    conserved_quantity_state_only,
    conserved_quantity_time_state,
    check_invariance,
)
from .ocp import Extremal, cost, hamiltonian_series, simulate
from .problem_io import (
    SCHEMA,
    dump_problem,
    dumps,
    extremal_to_csv,
    extremal_to_dict,
    load_problem,
    read_trajectory,
    trajectory_to_extremal,
)

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2
EXTREMAL_TOL = 1e-9
INVARIANCE_TOL = 1e-10
COMMANDS = ("run-example", "solve", "verify", "check-invariance", "conserve")

log = logging.getLogger("tsnoether")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    problem_path: Optional[str] = None
    example_name: Optional[str] = None
    scale_override: Optional[str] = None
    output_path: Optional[str] = None
    format: str = "json"
    trajectory: Optional[str] = None
    family: Optional[str] = None
    options: SweepOptions = field(default_factory=SweepOptions)
    p_b: Optional[list] = None
    shooting: Optional[bool] = None
    lam: Optional[float] = None
    dump_problem: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if (self.problem_path is None) == (self.example_name is None):
            raise UsageError("give exactly one of --problem FILE or --example NAME")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tsnoether", description="Optimal control and Noether conservation laws on time scales.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("name", nargs="?", help="example name (shorthand for --example)")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--problem", metavar="FILE")
    src.add_argument("--example", metavar="NAME", choices=sorted(builtin.EXAMPLES))
    ap.add_argument("--scale", metavar="SPEC", help="uniform:a,b,h | qscale:q,nmin,nmax | explicit:p1,p2,...")
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--format", choices=("csv", "json"), default="json")
    ap.add_argument("--trajectory", metavar="CSV", help="extremal / trajectory CSV (t,x..,u..,p..,lambda)")
    ap.add_argument("--family", metavar="NAME", help="transformation family of a built-in example")
    ap.add_argument("--lambda", dest="lam", type=float, help="cost multiplier if the CSV has none")
    ap.add_argument("--theta", type=float)
    ap.add_argument("--max-iters", type=int)
    ap.add_argument("--tol-u", type=float)
    ap.add_argument("--tol-shoot", type=float)
    ap.add_argument("--p-b", type=_floats, metavar="V1,V2,...")
    ap.add_argument("--shooting", action=argparse.BooleanOptionalAction, default=None)
    ap.add_argument("--dump-problem", metavar="FILE", help="write the problem as an editable problem file")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> tuple[RunConfig, dict]:
    example = args.example
    if args.name is not None:
        if example is not None or args.problem is not None:
            raise UsageError("example given twice")
        if args.name not in builtin.EXAMPLES:
            raise UsageError(f"unknown example {args.name!r}; choose from {', '.join(builtin.EXAMPLES)}")
        example = args.name
    overrides = {
        k: v
        for k, v in (("theta", args.theta), ("max_iters", args.max_iters), ("tol_u", args.tol_u), ("tol_shoot", args.tol_shoot))
        if v is not None
    }
    return RunConfig(
        args.command, args.problem, example, args.scale, args.out, args.format, args.trajectory,
        args.family, SweepOptions(**overrides) if overrides else SweepOptions(), args.p_b,
        args.shooting, args.lam, args.dump_problem,
    ), overrides


@dataclass
class _Setup:
    name: str
    problem: object
    families: list
    options: SweepOptions
    p_b: Optional[list]
    shooting: bool
    example: Optional[builtin.BuiltinExample] = None


def _setup(cfg: RunConfig, overrides: dict) -> _Setup:
    if cfg.example_name:
        ex = builtin.get_example(cfg.example_name, cfg.scale_override)
        shooting = ex.shooting if cfg.shooting is None else cfg.shooting
        return _Setup(ex.name, ex.problem, ex.families, cfg.options, cfg.p_b or ex.p_b, shooting, ex)
    try:
        pf = load_problem(cfg.problem_path, cfg.scale_override)
    except OSError as exc:
        raise UsageError(f"cannot read problem file: {exc}") from None
    opts = replace(pf.options, **overrides) if overrides else pf.options
    shooting = pf.shooting if cfg.shooting is None else cfg.shooting
    fams = [pf.family] if pf.family is not None else []
    return _Setup(pf.problem.name or "problem", pf.problem, fams, opts, cfg.p_b or pf.p_b, shooting)


def _read_extremal(cfg: RunConfig, st: _Setup) -> Extremal:
    if cfg.trajectory:
        try:
            text = Path(cfg.trajectory).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read trajectory: {exc}") from None
        return trajectory_to_extremal(st.problem, read_trajectory(st.problem, text, cfg.trajectory), cfg.lam)
    if st.example is not None:
        return st.example.make_extremal()
    raise UsageError("extremal required: pass --trajectory CSV")


def _pick_family(cfg: RunConfig, st: _Setup):
    if not st.families:
        raise UsageError("no transformation family: add a [transformation] block to the problem file")
    if cfg.family is None:
        return st.families[0]
    for f in st.families:
        if f.name == cfg.family:
            return f
    raise UsageError(f"unknown family {cfg.family!r}; have {', '.join(f.name for f in st.families)}")


def _emit(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _conserve(prob, ext, fam):
    if fam.kind == STATE_ONLY:
        return conserved_quantity_state_only(prob, ext, fam)
    return conserved_quantity_time_state(prob, ext, fam)


def _admissible_sample(prob) -> tuple:
    """Deterministic pseudo-random admissible pair used when no trajectory is given."""
    rng = np.random.default_rng(0)
    us = rng.uniform(-1.0, 1.0, size=(len(prob.scale) - 1, prob.m))
    x_a = [0.0 if v is None else v for v in (prob.x_a or [0.0] * prob.n)]
    return simulate(prob, x_a, us), us


def cmd_solve(cfg, st) -> int:
    ext = forward_backward_sweep(st.problem, p_b=st.p_b, shooting=st.shooting, options=st.options)
    rep = verify_extremal(st.problem, ext)
    if cfg.format == "csv":
        _emit(extremal_to_csv(st.problem, ext), cfg.output_path)
    else:
        doc = extremal_to_dict(st.problem, ext)
        doc["report"] = rep.to_dict()
        _emit(dumps(doc) + "\n", cfg.output_path)
    return EXIT_OK if rep.ok(EXTREMAL_TOL) else EXIT_CHECK


def cmd_verify(cfg, st) -> int:
    ext = _read_extremal(cfg, st)
    rep = verify_extremal(st.problem, ext)
    doc = {"schema": SCHEMA, **rep.to_dict(), "lambda": ext.lam, "passed": rep.ok(EXTREMAL_TOL)}
    _emit(dumps(doc) + "\n", cfg.output_path)
    return EXIT_OK if doc["passed"] else EXIT_CHECK


def cmd_check_invariance(cfg, st) -> int:
    if cfg.trajectory:
        text = Path(cfg.trajectory).read_text(encoding="utf-8")
        traj = read_trajectory(st.problem, text, cfg.trajectory)
        xs, us = traj.x, traj.u
    elif st.example is not None:
        ext = st.example.make_extremal()
        xs, us = ext.x.values, ext.u.values
    else:
        xs, us = _admissible_sample(st.problem)
    fams = [_pick_family(cfg, st)] if cfg.family or not st.families else st.families
    rows = []
    for fam in fams:
        r = check_invariance(st.problem, fam, xs, us)
        rows.append({"family": fam.name, "kind": fam.kind, "residual": r, "passed": r <= INVARIANCE_TOL})
    ok = all(r["passed"] for r in rows)
    _emit(dumps({"schema": SCHEMA, "families": rows, "passed": ok}) + "\n", cfg.output_path)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_conserve(cfg, st) -> int:
    fam = _pick_family(cfg, st)
    ext = _read_extremal(cfg, st)
    rep = _conserve(st.problem, ext, fam)
    _emit(rep.to_csv() if cfg.format == "csv" else dumps(rep.to_dict()) + "\n", cfg.output_path)
    return EXIT_OK if rep.passed else EXIT_CHECK


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name).strip("_") or "family"


def run_example(cfg, st) -> int:
    prob = st.problem
    ext = _read_extremal(cfg, st)
    rep = verify_extremal(prob, ext)
    h = hamiltonian_series(prob, ext)
    summary = {
        "schema": SCHEMA,
        "example": st.name,
        "scale": {"a": prob.scale.a, "b": prob.scale.b, "points": len(prob.scale)},
        "lambda": ext.lam,
        "cost": cost(prob, ext.x, ext.u),
        "extremal": {**rep.to_dict(), "passed": rep.ok(EXTREMAL_TOL)},
        "hamiltonian": {"min": float(h.min()), "max": float(h.max())},
        "families": [],
    }
    outdir = Path(cfg.output_path) if cfg.output_path else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{st.name}_extremal.csv").write_text(extremal_to_csv(prob, ext), encoding="utf-8")
    ok = summary["extremal"]["passed"]
    for fam in st.families:
        inv = check_invariance(prob, fam, ext.x, ext.u)
        entry = {"name": fam.name, "kind": fam.kind, "invariance_residual": inv, "invariance_passed": inv <= INVARIANCE_TOL}
        ok &= entry["invariance_passed"]
        try:
            crep = _conserve(prob, ext, fam)
        except TimeScaleError as exc:
            entry["conservation"] = {"error": str(exc), "passed": False}
            ok = False
        else:
            entry["conservation"] = {
                "C_first": crep.reference,
                "max_deviation": crep.max_deviation,
                "tolerance": crep.tolerance,
                "passed": crep.passed,
            }
            ok &= crep.passed
            if outdir:
                stem = outdir / f"{st.name}_{_slug(fam.name)}_conservation"
                text = crep.to_csv() if cfg.format == "csv" else dumps(crep.to_dict()) + "\n"
                stem.with_suffix("." + cfg.format).write_text(text, encoding="utf-8")
        summary["families"].append(entry)
    if st.name == "quadratic" and st.example is not None and len(prob.scale) >= 3:
        corr = builtin.quadratic_corollary_residual(ext)
        summary["corollary_residual"] = corr
        ok &= corr <= 1e-10
    summary["passed"] = bool(ok)
    text = dumps(summary) + "\n"
    if outdir:
        (outdir / f"{st.name}_report.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if not ok:
        sys.stderr.write(f"{st.name}: a check failed; see the report above\n")
    return EXIT_OK if ok else EXIT_CHECK


HANDLERS = {
    "run-example": run_example,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "check-invariance": cmd_check_invariance,
    "conserve": cmd_conserve,
}


def pipeline(cfg: RunConfig, overrides: Optional[dict] = None) -> int:
    st = _setup(cfg, overrides or {})
    if cfg.dump_problem:
        fam = st.families[0] if st.families else None
        Path(cfg.dump_problem).write_text(
            dump_problem(st.problem, fam, st.options, st.p_b, st.shooting), encoding="utf-8"
        )
    return HANDLERS[cfg.command](cfg, st)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg, overrides = config_from_args(args)
        return pipeline(cfg, overrides)
    except (UsageError, OSError) as exc:
        sys.stderr.write(f"tsnoether: error: {exc}\n")
        return EXIT_USAGE
    except (NoConvergence, RegularityViolation) as exc:
        sys.stderr.write(f"tsnoether: check failed: {exc}\n")
        return EXIT_CHECK
    except TimeScaleError as exc:
        # NotAnExtremal / NotInvariant are mathematical failures, the rest are input errors
        code = EXIT_CHECK if isinstance(exc, (NotAnExtremal, NotInvariant)) else EXIT_USAGE
        sys.stderr.write(f"tsnoether: {'check failed' if code == EXIT_CHECK else 'error'}: {exc}\n")
        return code
    except KeyError as exc:
        sys.stderr.write(f"tsnoether: error: {exc.args[0] if exc.args else exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
