"""Problem files, trajectory CSVs and report serialisation.

A problem file is a TOML document::

    n = 1
    m = 1
    sense = "min"
    lagrangian = "u^2"
    dynamics = ["u"]
    scale = "uniform:0,1,0.25"
    x_a = [0.0]
    x_b = [1.0]            # use "free" for an unconstrained coordinate
    shooting = true         # optional solver keys: theta, max_iters, tol_u,
                            # tol_shoot, p_b, shooting

    [transformation]
    kind = "state"          # or "time_state"
    h_x = ["x + s*t"]
    u_s = ["u + s"]
    gauge = "s^2*t + 2*x*s"
    s_max = 0.1
    s_points = 11
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .calculus import GridFunction
from .errors import ProblemFileError, TimeScaleError
from .expr import check_variables, parse
from .extremal import SweepOptions
from .noether import TransformationFamily
from .ocp import ControlProblem, Extremal
from .timescale import format_scale, parse_scale

SCHEMA = 1
FLOAT_FORMAT = ".17g"


@dataclass
class ProblemFile:
    problem: ControlProblem
    family: Optional[TransformationFamily] = None
    options: SweepOptions = field(default_factory=SweepOptions)
    p_b: Optional[list] = None
    shooting: bool = False
    source: str = "<string>"


def _line_of(text: str, key: str) -> Optional[int]:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=", re.M)
    m = pat.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(source: str, text: str, key: Optional[str], msg: str):
    line = _line_of(text, key) if key else None
    where = f"{source}:{line}" if line else source
    raise ProblemFileError(f"{where}: {msg}")


def _boundary(raw, key, n, source, text):
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != n:
        _fail(source, text, key, f"'{key}' must be a list of {n} entries")
    out = []
    for v in raw:
        if isinstance(v, str) and v.strip().lower() == "free":
            out.append(None)
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            _fail(source, text, key, f"'{key}' entries must be numbers or \"free\", got {v!r}")
    return out


def parse_problem(text: str, source: str = "<string>", scale_override: Optional[str] = None) -> ProblemFile:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFileError(f"{source}: {exc}") from None

    def need(key, kind):
        if key not in doc:
            _fail(source, text, None, f"missing required key '{key}'")
        if not isinstance(doc[key], kind) or isinstance(doc[key], bool) and kind is not bool:
            _fail(source, text, key, f"'{key}' has the wrong type")
        return doc[key]

    n, m = need("n", int), need("m", int)
    key = None
    try:
        key = "scale"
        scale = parse_scale(scale_override or need("scale", str))
        key = "dynamics"
        dyn = tuple(parse(str(e)) for e in need("dynamics", list))
        aliases = {"x": "x1"} if n == 1 else {}
        if m == 1:
            aliases["u"] = "u1"
        allowed = ["t", *(f"x{i + 1}" for i in range(n)), *(f"u{j + 1}" for j in range(m))]
        for e in dyn:
            check_variables(e.rename(aliases), allowed)
        key = "lagrangian"
        lag = parse(need("lagrangian", str))
        check_variables(lag.rename(aliases), allowed)
        key = "x_a"
        prob = ControlProblem(
            n, m, lag, dyn, scale,
            _boundary(doc.get("x_a"), "x_a", n, source, text),
            _boundary(doc.get("x_b"), "x_b", n, source, text),
            doc.get("sense", "min"),
            doc.get("name", Path(source).stem),
        )
        key = "transformation"
        fam = None
        if "transformation" in doc:
            tr = doc["transformation"]
            fam = TransformationFamily(
                tr.get("kind", "state"),
                tuple(tr.get("h_x", [])),
                tuple(tr.get("u_s", [])),
                tr.get("h_t"),
                tr.get("gauge", "0"),
                float(tr.get("s_max", 0.1)),
                int(tr.get("s_points", 11)),
                tr.get("name", "transformation"),
            )
            fam.bound(prob)
        key = "theta"
        opts = SweepOptions(
            theta=float(doc.get("theta", 0.5)),
            max_iters=int(doc.get("max_iters", 500)),
            tol_u=float(doc.get("tol_u", 1e-10)),
            tol_shoot=float(doc.get("tol_shoot", 1e-9)),
        )
    except ProblemFileError:
        raise
    except (TimeScaleError, ValueError, TypeError) as exc:
        _fail(source, text, key, str(exc))
    p_b = doc.get("p_b")
    if p_b is not None and (not isinstance(p_b, list) or len(p_b) != n):
        _fail(source, text, "p_b", f"'p_b' must be a list of {n} numbers")
    return ProblemFile(prob, fam, opts, p_b, bool(doc.get("shooting", False)), source)


def load_problem(path, scale_override: Optional[str] = None) -> ProblemFile:
    p = Path(path)
    return parse_problem(p.read_text(encoding="utf-8"), str(p), scale_override)


def _toml_str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _toml_num(v) -> str:
    if v is None:
        return '"free"'
    return format(float(v), FLOAT_FORMAT) if not float(v).is_integer() else repr(float(v))


def dump_problem(
    prob: ControlProblem,
    family: Optional[TransformationFamily] = None,
    options: Optional[SweepOptions] = None,
    p_b=None,
    shooting: bool = False,
) -> str:
    opts = options or SweepOptions()
    lines = [
        f"name = {_toml_str(prob.name or 'problem')}",
        f"n = {prob.n}",
        f"m = {prob.m}",
        f"sense = {_toml_str(prob.sense)}",
        f"lagrangian = {_toml_str(prob.lagrangian.pretty())}",
        "dynamics = [" + ", ".join(_toml_str(e.pretty()) for e in prob.dynamics) + "]",
        f"scale = {_toml_str(format_scale(prob.scale))}",
    ]
    for key, vec in (("x_a", prob.x_a), ("x_b", prob.x_b)):
        if vec is not None:
            lines.append(f"{key} = [" + ", ".join(_toml_num(v) for v in vec) + "]")
    lines += [
        f"theta = {_toml_num(opts.theta)}",
        f"max_iters = {opts.max_iters}",
        f"tol_u = {_toml_num(opts.tol_u)}",
        f"tol_shoot = {_toml_num(opts.tol_shoot)}",
        f"shooting = {'true' if shooting else 'false'}",
    ]
    if p_b is not None:
        lines.append("p_b = [" + ", ".join(_toml_num(v) for v in p_b) + "]")
    if family is not None:
        lines += [
            "",
            "[transformation]",
            f"name = {_toml_str(family.name or 'transformation')}",
            f"kind = {_toml_str(family.kind)}",
            f"h_t = {_toml_str(family.h_t.pretty())}",
            "h_x = [" + ", ".join(_toml_str(e.pretty()) for e in family.h_x) + "]",
            "u_s = [" + ", ".join(_toml_str(e.pretty()) for e in family.u_s) + "]",
            f"gauge = {_toml_str(family.gauge.pretty())}",
            f"s_max = {_toml_num(family.s_max)}",
            f"s_points = {family.s_points}",
        ]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# trajectories


def _f(v: float) -> str:
    return format(float(v), FLOAT_FORMAT)


def extremal_to_csv(prob: ControlProblem, ext: Extremal) -> str:
    """Columns t, x1..xn, u1..um, p1..pn, lambda; the controls are blank at b."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *prob.state_names, *prob.control_names, *[f"p{i + 1}" for i in range(prob.n)], "lambda"])
    N = len(ext.scale)
    for i, t in enumerate(ext.scale.points):
        us = [_f(v) for v in ext.u.values[i]] if i < N - 1 else [""] * prob.m
        w.writerow([_f(t), *map(_f, ext.x.values[i]), *us, *map(_f, ext.p.values[i]), _f(ext.lam)])
    return buf.getvalue()


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    p: Optional[np.ndarray] = None
    lam: Optional[float] = None


def read_trajectory(prob: ControlProblem, text: str, source: str = "<trajectory>") -> Trajectory:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ProblemFileError(f"{source}: empty trajectory file")
    header = [h.strip() for h in rows[0]]
    col = {h: j for j, h in enumerate(header)}
    for name in ("t", *prob.state_names, *prob.control_names):
        if name not in col:
            raise ProblemFileError(f"{source}: missing column '{name}'")
    body = rows[1:]

    def grab(names, rows_):
        try:
            return np.array([[float(r[col[n]]) for n in names] for r in rows_])
        except (ValueError, IndexError) as exc:
            raise ProblemFileError(f"{source}: bad value ({exc})") from None

    t = grab(["t"], body)[:, 0]
    x = grab(prob.state_names, body)
    u = grab(prob.control_names, body[:-1])
    pnames = [f"p{i + 1}" for i in range(prob.n)]
    p = grab(pnames, body) if all(n in col for n in pnames) else None
    lam = float(body[0][col["lambda"]]) if "lambda" in col else None
    if not np.allclose(t, prob.scale.points, rtol=0, atol=1e-12 * max(1.0, abs(prob.scale.b))):
        raise ProblemFileError(f"{source}: time column does not match the problem scale")
    return Trajectory(t, x, u, p, lam)


def trajectory_to_extremal(prob: ControlProblem, traj: Trajectory, lam: Optional[float] = None) -> Extremal:
    if traj.p is None:
        raise ProblemFileError("trajectory has no costate columns p1..pn")
    lam = traj.lam if lam is None else lam
    return Extremal(
        GridFunction(prob.scale, traj.x),
        GridFunction(prob.scale.kappa(), traj.u),
        GridFunction(prob.scale, traj.p),
        1.0 if lam is None else lam,
    )


# --------------------------------------------------------------------------
# JSON with fixed 17-significant-digit floats


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, np.bool_):
        obj = bool(obj)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, FLOAT_FORMAT) if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def extremal_to_dict(prob: ControlProblem, ext: Extremal) -> dict:
    return {
        "schema": SCHEMA,
        "t": ext.scale.points.tolist(),
        "x": ext.x.values.tolist(),
        "u": ext.u.values.tolist(),
        "p": ext.p.values.tolist(),
        "lambda": ext.lam,
    }

