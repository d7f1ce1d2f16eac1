"""Scenario configuration: one JSON document per experiment.

Validation errors carry the dotted path of the offending field, e.g.
``s_grid.points: must be at least 1``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError, OmegaPutError
from .levy_model import ModelParams
from .montecarlo import MCConfig
from .omega_scale import KINDS, DiscountFunction
from .pricer import ALPHA_METHODS, AlphaSchedule, SolverSettings

_DISCOUNT_FIELDS = {
    "constant": ("q",),
    "linear": ("C",),
    "power": ("C", "n"),
    "arctan": ("C",),
    "sqrt_shift": ("C", "Z"),
}


@dataclass
class GridSpec:
    min: float
    max: float
    points: int


@dataclass
class SolverSpec:
    step: float = 0.05
    taylor_order: int = 16
    x_max: float = 20.0
    volterra_mesh: int = 2000
    c_tol: float = 1e-9


@dataclass
class MCSpec:
    enabled: bool = False
    n_paths: int = 100_000
    dt: float = 0.01
    seed: int = 12345
    t_max: float = 200.0
    s_over_u: list = field(default_factory=lambda: [1.2])


@dataclass
class OutputSpec:
    dir: Optional[str] = None
    emit_scale_functions: bool = False
    emit_ratio: bool = False
    emit_per_u: bool = True
    scale_x_max: float = 3.0


@dataclass
class ToleranceSpec:
    fit_residual: float = 1e-4
    pasting: float = 1e-6
    mc_rel: float = 0.02


@dataclass
class ScenarioConfig:
    name: str
    model: dict
    K: float
    discount: dict
    s_grid: GridSpec
    solver: SolverSpec = field(default_factory=SolverSpec)
    alpha_schedule: list = field(default_factory=lambda: [10.0, 20.0, 50.0, 150.0])
    alpha: Optional[float] = None
    alpha_panel: list = field(default_factory=list)
    alpha_method: str = "overshoot"
    s_ref: Optional[float] = None
    check_s: Optional[float] = None
    mc: MCSpec = field(default_factory=MCSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    tolerances: ToleranceSpec = field(default_factory=ToleranceSpec)

    def params(self) -> ModelParams:
        m = self.model
        return ModelParams(r=m["r"], sigma=m["sigma"], lam=m["lambda"], phi=m.get("phi", 1.0), K=self.K)

    def discount_fn(self) -> DiscountFunction:
        return DiscountFunction(**self.discount)

    def solver_settings(self) -> SolverSettings:
        s = self.solver
        return SolverSettings(step=s.step, taylor_order=s.taylor_order, c_tol=s.c_tol, x_cap=s.x_max)

    def schedule(self) -> AlphaSchedule:
        return AlphaSchedule(tuple(self.alpha_schedule))

    def mc_config(self) -> MCConfig:
        m = self.mc
        return MCConfig(n_paths=m.n_paths, dt=m.dt, seed=m.seed, t_max=m.t_max)

    def to_dict(self) -> dict:
        return asdict(self)


def _number(raw: dict, key: str, path: str, default: Any = ..., positive=False, nonneg=False, integer=False):
    if key not in raw:
        if default is ...:
            raise ConfigError(f"{path}{key}", "required field missing")
        return default
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {type(v).__name__}")
    if integer and not float(v).is_integer():
        raise ConfigError(f"{path}{key}", "expected an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{path}{key}", "must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{path}{key}", "must be positive")
    if nonneg and v < 0:
        raise ConfigError(f"{path}{key}", "must be nonnegative")
    return int(v) if integer else float(v)


def _section(raw: dict, key: str, required: bool = False) -> dict:
    sec = raw.get(key)
    if sec is None:
        if required:
            raise ConfigError(key, "required section missing")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(key, "expected an object")
    return sec


def _reject_unknown(sec: dict, allowed, path: str):
    for k in sec:
        if k not in allowed:
            raise ConfigError(f"{path}{k}", "unknown field")


def _bool(raw: dict, key: str, path: str, default: bool) -> bool:
    v = raw.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{path}{key}", "expected true or false")
    return v


def parse_config(raw: dict, name: str = "scenario") -> ScenarioConfig:
    """Validate a decoded JSON document and build a ScenarioConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    _reject_unknown(raw, {"name", "model", "K", "discount", "s_grid", "solver", "alpha_schedule", "alpha",
                          "alpha_panel", "alpha_method", "s_ref", "check_s", "mc", "outputs", "tolerances",
                          "variants", "description"}, "")

    m = _section(raw, "model", required=True)
    _reject_unknown(m, {"r", "sigma", "lambda", "phi"}, "model.")
    model = {
        "r": _number(m, "r", "model.", positive=True),
        "sigma": _number(m, "sigma", "model.", nonneg=True),
        "lambda": _number(m, "lambda", "model.", nonneg=True),
        "phi": _number(m, "phi", "model.", 1.0, positive=True),
    }
    if model["sigma"] == 0 and model["lambda"] == 0:
        raise ConfigError("model", "sigma and lambda cannot both be zero (no regime)")
    K = _number(raw, "K", "", positive=True)

    d = _section(raw, "discount", required=True)
    kind = d.get("kind")
    if kind not in KINDS:
        raise ConfigError("discount.kind", f"must be one of {', '.join(KINDS)}")
    need = _DISCOUNT_FIELDS[kind]
    _reject_unknown(d, ("kind",) + need, "discount.")
    discount = {"kind": kind}
    for f in need:
        discount[f] = _number(d, f, "discount.", nonneg=True)

    g = _section(raw, "s_grid", required=True)
    _reject_unknown(g, {"min", "max", "points"}, "s_grid.")
    grid = GridSpec(
        min=_number(g, "min", "s_grid.", positive=True),
        max=_number(g, "max", "s_grid.", positive=True),
        points=_number(g, "points", "s_grid.", integer=True),
    )
    if grid.points < 1:
        raise ConfigError("s_grid.points", "must be at least 1")
    if grid.points > 1 and not grid.max > grid.min:
        raise ConfigError("s_grid.max", "must exceed s_grid.min")

    sv = _section(raw, "solver")
    _reject_unknown(sv, {"step", "taylor_order", "x_max", "volterra_mesh", "c_tol"}, "solver.")
    solver = SolverSpec(
        step=_number(sv, "step", "solver.", 0.05, positive=True),
        taylor_order=_number(sv, "taylor_order", "solver.", 16, integer=True, positive=True),
        x_max=_number(sv, "x_max", "solver.", 20.0, positive=True),
        volterra_mesh=_number(sv, "volterra_mesh", "solver.", 2000, integer=True, positive=True),
        c_tol=_number(sv, "c_tol", "solver.", 1e-9, positive=True),
    )

    sched = raw.get("alpha_schedule", [10.0, 20.0, 50.0, 150.0])
    if not isinstance(sched, list) or not sched:
        raise ConfigError("alpha_schedule", "expected a nonempty list")
    for i, a in enumerate(sched):
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not a > 0:
            raise ConfigError(f"alpha_schedule[{i}]", "must be a positive number")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ConfigError("alpha_schedule", "must be strictly increasing")
    alpha = raw.get("alpha")
    if alpha is not None:
        alpha = _number(raw, "alpha", "", nonneg=True)

    panel = raw.get("alpha_panel", [])
    if not isinstance(panel, list):
        raise ConfigError("alpha_panel", "expected a list")
    for i, a in enumerate(panel):
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not a > 0:
            raise ConfigError(f"alpha_panel[{i}]", "must be a positive number")

    alpha_method = raw.get("alpha_method", "overshoot")
    if alpha_method not in ALPHA_METHODS:
        raise ConfigError("alpha_method", f"must be one of {', '.join(ALPHA_METHODS)}")

    mc_raw = _section(raw, "mc")
    _reject_unknown(mc_raw, {"enabled", "n_paths", "dt", "seed", "t_max", "s_over_u"}, "mc.")
    mc = MCSpec(
        enabled=_bool(mc_raw, "enabled", "mc.", False),
        n_paths=_number(mc_raw, "n_paths", "mc.", 100_000, integer=True),
        dt=_number(mc_raw, "dt", "mc.", 0.01, positive=True),
        seed=_number(mc_raw, "seed", "mc.", 12345, integer=True, nonneg=True),
        t_max=_number(mc_raw, "t_max", "mc.", 200.0, positive=True),
        s_over_u=list(mc_raw.get("s_over_u", [1.2])),
    )
    if mc.n_paths < 10_000:
        raise ConfigError("mc.n_paths", "must be at least 10000")
    for i, v in enumerate(mc.s_over_u):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 1:
            raise ConfigError(f"mc.s_over_u[{i}]", "must be a number above 1")

    o = _section(raw, "outputs")
    _reject_unknown(o, {"dir", "emit_scale_functions", "emit_ratio", "emit_per_u", "scale_x_max"}, "outputs.")
    if o.get("dir") is not None and not isinstance(o["dir"], str):
        raise ConfigError("outputs.dir", "expected a string")
    outputs = OutputSpec(
        dir=o.get("dir"),
        emit_scale_functions=_bool(o, "emit_scale_functions", "outputs.", False),
        emit_ratio=_bool(o, "emit_ratio", "outputs.", False),
        emit_per_u=_bool(o, "emit_per_u", "outputs.", True),
        scale_x_max=_number(o, "scale_x_max", "outputs.", 3.0, positive=True),
    )

    t = _section(raw, "tolerances")
    _reject_unknown(t, {"fit_residual", "pasting", "mc_rel"}, "tolerances.")
    tol = ToleranceSpec(
        fit_residual=_number(t, "fit_residual", "tolerances.", 1e-4, positive=True),
        pasting=_number(t, "pasting", "tolerances.", 1e-6, positive=True),
        mc_rel=_number(t, "mc_rel", "tolerances.", 0.02, positive=True),
    )

    name = raw.get("name", name)
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a nonempty string")

    cfg = ScenarioConfig(
        name=name,
        model=model,
        K=K,
        discount=discount,
        s_grid=grid,
        solver=solver,
        alpha_schedule=[float(a) for a in sched],
        alpha=alpha,
        alpha_panel=[float(a) for a in panel],
        alpha_method=alpha_method,
        s_ref=None if raw.get("s_ref") is None else _number(raw, "s_ref", "", positive=True),
        check_s=None if raw.get("check_s") is None else _number(raw, "check_s", "", positive=True),
        mc=mc,
        outputs=outputs,
        tolerances=tol,
    )
    # let the model objects apply their own checks, reported against the config
    for path, build in (("model", cfg.params), ("discount", cfg.discount_fn)):
        try:
            build()
        except OmegaPutError as exc:
            raise ConfigError(path, str(exc)) from exc
    return cfg


def deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def expand_variants(raw: dict) -> list[tuple[Optional[str], dict]]:
    """(label, document) pairs; a document without ``variants`` is its own single variant.

    Each variant is a partial document merged over the base.  A variant that
    sets ``discount`` replaces the base discount instead of merging, since the
    allowed fields depend on the kind.
    """
    variants = raw.get("variants")
    base = {k: v for k, v in raw.items() if k != "variants"}
    if variants is None:
        return [(None, base)]
    if not isinstance(variants, list) or not variants:
        raise ConfigError("variants", "expected a nonempty list")
    out = []
    seen = set()
    for i, var in enumerate(variants):
        if not isinstance(var, dict):
            raise ConfigError(f"variants[{i}]", "expected an object")
        label = var.get("label")
        if not isinstance(label, str) or not label or "/" in label:
            raise ConfigError(f"variants[{i}].label", "expected a nonempty string without '/'")
        if label in seen:
            raise ConfigError(f"variants[{i}].label", f"duplicate label {label!r}")
        seen.add(label)
        over = {k: v for k, v in var.items() if k != "label"}
        doc = deep_merge({k: v for k, v in base.items() if not ("discount" in over and k == "discount")}, over)
        out.append((label, doc))
    return out


def load_document(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def load_scenarios(path: str | Path) -> list[tuple[Optional[str], ScenarioConfig]]:
    """Parse a config file into its validated variants."""
    raw = load_document(path)
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    stem = Path(path).stem
    out = []
    for label, doc in expand_variants(raw):
        try:
            cfg = parse_config(doc, name=stem)
        except ConfigError as exc:
            if label is None:
                raise
            raise ConfigError(f"variants[{label}].{exc.path}", str(exc).split(": ", 1)[-1]) from exc
        out.append((label, cfg))
    return out
