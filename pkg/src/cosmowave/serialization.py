"""CSV and JSON writers/readers for traces, sweeps, and reports.

All floating-point values are written with 17 significant digits so that
emitted files reproduce the in-memory doubles bit-faithfully.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .experiments import Engine, SweepPoint, SweepResult
from .pde_solver import Trace


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_trace_csv(trace, path):
    """One row per record: t,E0,E1,W,support_radius,max_abs_v,dt."""
    lines = [",".join(Trace.COLUMNS)]
    for i in range(len(trace)):
        lines.append(
            ",".join(
                fmt_float(getattr(trace, col)[i]) for col in Trace.COLUMNS
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path):
    raw = np.genfromtxt(path, delimiter=",", names=True)
    raw = np.atleast_1d(raw)
    kwargs = {col: np.asarray(raw[col], dtype=float) for col in Trace.COLUMNS}
    kwargs["forcing_budget"] = np.zeros(len(raw["t"]))
    return Trace(**kwargs)


def write_oracle_trace_csv(t, W, path):
    lines = ["t,W"]
    for ti, wi in zip(t, W):
        lines.append(f"{fmt_float(ti)},{fmt_float(wi)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep_csv(sweep, path):
    """Delimited sweep table: epsilon,T,engine,quality,censored."""
    lines = ["epsilon,T,engine,quality,censored"]
    for pt in sweep.points:
        lines.append(
            f"{fmt_float(pt.epsilon)},{fmt_float(pt.T)},{sweep.engine.value},"
            f"{fmt_float(pt.quality)},{'true' if pt.censored else 'false'}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep_dat(sweep, path):
    """gnuplot-ready companion: whitespace columns with a # header."""
    lines = ["# epsilon T quality censored"]
    for pt in sweep.points:
        lines.append(
            f"{fmt_float(pt.epsilon)} {fmt_float(pt.T)} "
            f"{fmt_float(pt.quality)} {1 if pt.censored else 0}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sweep_csv(path):
    """Rebuild a SweepResult from the delimited table.

    The CSV stores no problem echo; compare falls back to the JSON
    sidecar (same stem, .json) when it exists.
    """
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0].strip() != "epsilon,T,engine,quality,censored":
        raise ParseError(f"{path}: not a sweep CSV (bad header)")
    points = []
    engine = Engine.ODE
    for line_no, line in enumerate(text[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"{path}: malformed row", line=line_no)
        eps, T, eng, quality, censored = parts
        engine = Engine(eng)
        points.append(
            SweepPoint(
                epsilon=float(eps),
                T=float(T),
                quality=float(quality),
                censored=censored.strip().lower() == "true",
            )
        )
    echo = {}
    sidecar = Path(path).with_suffix(".json")
    if sidecar.exists():
        echo = json.loads(sidecar.read_text(encoding="utf-8")).get("spec_echo", {})
    return SweepResult(engine=engine, points=points, spec_echo=echo)


class _FloatEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def write_json(obj, path):
    Path(path).write_text(
        json.dumps(obj, indent=2, cls=_FloatEncoder) + "\n", encoding="utf-8"
    )


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}", line=exc.lineno, column=exc.colno) from exc


def sweep_to_dict(sweep):
    return {
        "engine": sweep.engine.value,
        "spec_echo": sweep.spec_echo,
        "points": [
            {
                "epsilon": pt.epsilon,
                "T": pt.T,
                "quality": pt.quality,
                "censored": pt.censored,
            }
            for pt in sweep.points
        ],
    }


def sweep_from_dict(d):
    return SweepResult(
        engine=Engine(d["engine"]),
        points=[
            SweepPoint(pt["epsilon"], pt["T"], pt["quality"], pt["censored"])
            for pt in d["points"]
        ],
        spec_echo=d.get("spec_echo", {}),
    )
