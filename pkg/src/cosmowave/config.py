"""Run configuration: TOML loading, validation, and round-trip writing.

One config file pins one experiment (a single simulation or one epsilon
sweep).  Unknown keys are rejected so that typos fail loudly instead of
silently falling back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

import numpy as np

from . import coefficients as coeff
from . import pde_solver
from .errors import ParseError, ValidationError

_SCHEMA = {
    "problem": {"n", "p", "nonlinearity", "epsilon"},
    "coefficients": {
        "family",
        "alpha",
        "mu",
        "H",
        "n",
        "a_table",
        "b_table",
        "sign",
        "tail_a",
        "tail_b",
    },
    "data": {"shape", "R", "amplitude_u0", "amplitude_u1"},
    "grid": {"dx", "cfl", "pad_cells"},
    "stop": {"t_max", "blowup_threshold", "wall_budget"},
    "sweep": {"epsilons", "engine", "t_cap", "rtol"},
    "output": {"directory", "stride"},
}

_NONLINEARITIES = {k.value for k in pde_solver.Nonlinearity}
_FAMILIES = {
    "flrw_expanding",
    "de_sitter",
    "anti_de_sitter",
    "flrw_contracting",
    "power_speed",
    "custom",
}


@dataclass
class RunConfig:
    n: int
    p: float
    nonlinearity: str
    epsilon: float
    profile: object
    R: float
    amplitude_u0: float
    amplitude_u1: float
    dx: float
    cfl: float
    pad_cells: int
    t_max: float
    blowup_threshold: float | None
    wall_budget: float | None
    epsilons: list[float]
    engine: str
    t_cap: float
    rtol: float
    out_dir: str
    stride: int
    coefficients_raw: dict = field(default_factory=dict)

    def problem_spec(self):
        data = pde_solver.InitialData(
            shape=pde_solver.SmoothBump(self.amplitude_u0, self.amplitude_u1),
            R=self.R,
        )
        return pde_solver.ProblemSpec(
            n=self.n,
            p=self.p,
            F_kind=pde_solver.Nonlinearity(self.nonlinearity),
            epsilon=self.epsilon,
            data=data,
            profile=self.profile,
        )

    def grid_config(self):
        return pde_solver.GridConfig(
            dx=self.dx, cfl=self.cfl, pad_cells=self.pad_cells
        )

    def stop_rule(self):
        return pde_solver.StopRule(
            t_max=self.t_max,
            blowup_threshold=self.blowup_threshold,
            wall_budget=self.wall_budget,
        )

    def to_dict(self):
        d = {
            "problem": {
                "n": self.n,
                "p": self.p,
                "nonlinearity": self.nonlinearity,
                "epsilon": self.epsilon,
            },
            "coefficients": dict(self.coefficients_raw),
            "data": {
                "shape": "smooth_bump",
                "R": self.R,
                "amplitude_u0": self.amplitude_u0,
                "amplitude_u1": self.amplitude_u1,
            },
            "grid": {"dx": self.dx, "cfl": self.cfl, "pad_cells": self.pad_cells},
            "stop": {
                "t_max": self.t_max,
                "blowup_threshold": self.blowup_threshold or 0.0,
            },
            "sweep": {
                "epsilons": self.epsilons,
                "engine": self.engine,
                "t_cap": self.t_cap,
                "rtol": self.rtol,
            },
            "output": {"directory": self.out_dir, "stride": self.stride},
        }
        if self.wall_budget is not None:
            d["stop"]["wall_budget"] = self.wall_budget
        return d


def _require(cond, key, message):
    if not cond:
        raise ValidationError(key, message)


def _get(section, sec_name, key, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ValidationError(f"{sec_name}.{key}", "required key is missing")
    return default


def _check_unknown(raw):
    for sec, keys in raw.items():
        if sec not in _SCHEMA:
            raise ValidationError(sec, "unknown section")
        if not isinstance(keys, dict):
            raise ValidationError(sec, "expected a table")
        for k in keys:
            if k not in _SCHEMA[sec]:
                raise ValidationError(f"{sec}.{k}", "unknown key")


def _build_profile(sec, base_dir):
    family = _get(sec, "coefficients", "family", required=True)
    _require(family in _FAMILIES, "coefficients.family", f"unknown family {family!r}")
    if family == "flrw_expanding":
        alpha = _get(sec, "coefficients", "alpha", required=True)
        mu = _get(sec, "coefficients", "mu", 0.0)
        _require(alpha > 0, "coefficients.alpha", "must be positive")
        _require(mu >= 0, "coefficients.mu", "must be non-negative")
        return coeff.FlrwExpanding(alpha_exp=float(alpha), mu=float(mu))
    if family == "de_sitter":
        H = _get(sec, "coefficients", "H", required=True)
        n = _get(sec, "coefficients", "n", required=True)
        _require(H > 0, "coefficients.H", "must be positive")
        _require(int(n) == n and n >= 1, "coefficients.n", "must be integer >= 1")
        return coeff.DeSitter(H=float(H), n=int(n))
    if family == "anti_de_sitter":
        H = _get(sec, "coefficients", "H", required=True)
        n = _get(sec, "coefficients", "n", required=True)
        _require(H > 0, "coefficients.H", "must be positive")
        _require(int(n) == n and n >= 1, "coefficients.n", "must be integer >= 1")
        return coeff.AntiDeSitter(H=float(H), n=int(n))
    if family == "flrw_contracting":
        alpha = _get(sec, "coefficients", "alpha", required=True)
        mu = _get(sec, "coefficients", "mu", 0.0)
        _require(alpha > 0, "coefficients.alpha", "must be positive")
        _require(mu >= 0, "coefficients.mu", "must be non-negative")
        return coeff.FlrwContracting(alpha_exp=float(alpha), mu=float(mu))
    if family == "power_speed":
        alpha = _get(sec, "coefficients", "alpha", required=True)
        return coeff.PowerSpeed(alpha_exp=float(alpha))
    # custom: tabulated from CSV files next to the config
    a_path = _get(sec, "coefficients", "a_table", required=True)
    b_path = _get(sec, "coefficients", "b_table", required=True)
    sign = _get(sec, "coefficients", "sign", required=True)
    _require(
        sign in ("damping", "antidamping"),
        "coefficients.sign",
        "must be 'damping' or 'antidamping'",
    )
    t_a, a_vals = coeff.load_table_csv(str(base_dir / a_path))
    t_b, b_vals = coeff.load_table_csv(str(base_dir / b_path))
    return coeff.Custom(
        t_a=t_a,
        a_values=a_vals,
        t_b=t_b,
        b_values=b_vals,
        sign_convention=coeff.SignConvention(sign),
        tail_a=coeff.TailClass(_get(sec, "coefficients", "tail_a", "constant")),
        tail_b=coeff.TailClass(_get(sec, "coefficients", "tail_b", "constant")),
    )


def load_config(path):
    """Parse and validate a TOML run configuration."""
    p = Path(path)
    try:
        raw = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except FileNotFoundError as exc:
        raise ParseError(f"{path}: file not found") from exc
    return config_from_dict(raw, base_dir=p.parent)


def config_from_dict(raw, base_dir=Path(".")):
    _check_unknown(raw)
    problem = raw.get("problem", {})
    coeffs = raw.get("coefficients", {})
    data = raw.get("data", {})
    grid = raw.get("grid", {})
    stop = raw.get("stop", {})
    sweep = raw.get("sweep", {})
    output = raw.get("output", {})

    n = _get(problem, "problem", "n", required=True)
    _require(int(n) == n and n >= 1, "problem.n", "must be an integer >= 1")
    p_exp = _get(problem, "problem", "p", required=True)
    _require(p_exp > 1, "problem.p", "must exceed 1")
    nonlin = _get(problem, "problem", "nonlinearity", "abs_ut_p")
    _require(
        nonlin in _NONLINEARITIES,
        "problem.nonlinearity",
        f"must be one of {sorted(_NONLINEARITIES)}",
    )
    epsilon = _get(problem, "problem", "epsilon", required=True)
    _require(epsilon > 0, "problem.epsilon", "must be positive")

    profile = _build_profile(coeffs, Path(base_dir))

    shape = _get(data, "data", "shape", "smooth_bump")
    _require(shape == "smooth_bump", "data.shape", "only 'smooth_bump' is supported")
    R = _get(data, "data", "R", 1.0)
    _require(R > 0, "data.R", "must be positive")
    amp0 = float(_get(data, "data", "amplitude_u0", 1.0))
    amp1 = float(_get(data, "data", "amplitude_u1", 1.0))

    dx = float(_get(grid, "grid", "dx", R / 64.0))
    _require(dx > 0, "grid.dx", "must be positive")
    cfl = float(_get(grid, "grid", "cfl", 0.5))
    _require(0 < cfl <= 1.0, "grid.cfl", "must lie in (0, 1]")
    pad = _get(grid, "grid", "pad_cells", 48)
    _require(int(pad) == pad and pad >= 8, "grid.pad_cells", "must be integer >= 8")

    t_max = float(_get(stop, "stop", "t_max", 10.0))
    _require(t_max > 0, "stop.t_max", "must be positive")
    thr = float(_get(stop, "stop", "blowup_threshold", 0.0))
    _require(thr >= 0, "stop.blowup_threshold", "must be non-negative (0 = auto)")
    wall = _get(stop, "stop", "wall_budget", None)
    if wall is not None:
        _require(wall > 0, "stop.wall_budget", "must be positive seconds")

    epsilons = list(_get(sweep, "sweep", "epsilons", []))
    for e in epsilons:
        _require(0 < e, "sweep.epsilons", "entries must be positive")
    engine = _get(sweep, "sweep", "engine", "ode")
    _require(engine in ("pde", "ode"), "sweep.engine", "must be 'pde' or 'ode'")
    t_cap = float(_get(sweep, "sweep", "t_cap", 1.0e6))
    _require(t_cap > 0, "sweep.t_cap", "must be positive")
    rtol = float(_get(sweep, "sweep", "rtol", 1.0e-10))
    _require(0 < rtol < 1e-2, "sweep.rtol", "must lie in (0, 1e-2)")

    out_dir = str(_get(output, "output", "directory", "out"))
    stride = _get(output, "output", "stride", 10)
    _require(int(stride) == stride and stride >= 1, "output.stride", "integer >= 1")

    return RunConfig(
        n=int(n),
        p=float(p_exp),
        nonlinearity=nonlin,
        epsilon=float(epsilon),
        profile=profile,
        R=float(R),
        amplitude_u0=amp0,
        amplitude_u1=amp1,
        dx=dx,
        cfl=cfl,
        pad_cells=int(pad),
        t_max=t_max,
        blowup_threshold=thr if thr > 0 else None,
        wall_budget=float(wall) if wall is not None else None,
        epsilons=[float(e) for e in epsilons],
        engine=engine,
        t_cap=t_cap,
        rtol=rtol,
        out_dir=out_dir,
        stride=int(stride),
        coefficients_raw=dict(coeffs),
    )


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isinf(x) or math.isnan(x):
            raise ValidationError("<serialize>", f"cannot serialize {x}")
        s = f"{x:.17g}"
        return s if any(c in s for c in ".eE") else s + ".0"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ValidationError("<serialize>", f"cannot serialize {type(v).__name__}")


def serialize_config(cfg):
    """Write a RunConfig back to TOML text (semantic round trip)."""
    lines = []
    for sec, entries in cfg.to_dict().items():
        if not entries:
            continue
        lines.append(f"[{sec}]")
        for key, val in entries.items():
            if val is None:
                continue
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    return "\n".join(lines)
