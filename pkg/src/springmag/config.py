"""Experiment configuration: flat `key = value` text with typed validation.

A config file is plain text, one `key = value` per line, `#` comments,
keys as listed in SCHEMA.  Every key has a default (the standard
hard/soft bilayer, g = 0.5) except `kind` and the keys its experiment
requires.  Angles are degrees here and in all output files; the library
underneath works in radians.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields as dataclass_fields

from .equilibrium import RelaxCriteria
from .integrator import StepParams
from .model import FE, INTERFACE_A, SM_CO, FOUR_PI, Material, MaterialStack, build_stack

KINDS = ("relax", "sweep", "critical-angle", "critical-fields",
         "torque-curve", "angle-curve")

INIT_MODES = ("saturated", "uniform", "random")


class ConfigError(ValueError):
    """Bad config text: message names the key and the violated constraint."""


def _positive(name, v):
    if v <= 0:
        raise ConfigError(f"{name}: must be > 0, got {v}")


def _non_negative(name, v):
    if v < 0:
        raise ConfigError(f"{name}: must be >= 0, got {v}")


def _at_least_one(name, v):
    if v < 1:
        raise ConfigError(f"{name}: must be >= 1, got {v}")


def _kind(name, v):
    if v not in KINDS:
        raise ConfigError(f"{name}: unknown experiment kind {v!r}, expected one of {KINDS}")


def _direction(name, v):
    if v not in ("increasing", "decreasing"):
        raise ConfigError(f"{name}: expected 'increasing' or 'decreasing', got {v!r}")


def _init_mode(name, v):
    if v not in INIT_MODES and not v.startswith("snapshot:"):
        raise ConfigError(
            f"{name}: expected one of {INIT_MODES} or 'snapshot:<path>', got {v!r}")


# key -> (python type, default, validator or None)
SCHEMA = {
    "kind": (str, None, _kind),
    # stack
    "n_hard": (int, 115, _at_least_one),
    "n_soft": (int, 100, _at_least_one),
    "d": (float, 2.0e-8, _positive),
    "A_hard": (float, SM_CO.A, _positive),
    "K_hard": (float, SM_CO.K, _non_negative),
    "M_hard": (float, SM_CO.M, _positive),
    "A_soft": (float, FE.A, _positive),
    "K_soft": (float, FE.K, _non_negative),
    "M_soft": (float, FE.M, _positive),
    "A_interface": (float, INTERFACE_A, _positive),
    "demag_coeff": (float, FOUR_PI, _non_negative),
    # dynamics
    "g": (float, 0.5, _non_negative),
    "steps_per_period": (int, 64, lambda n, v: _at_least_one(n, v - 3)),
    "dt_max": (float, 1e-2, _positive),
    "stability_phase": (float, 0.6, _positive),
    # relaxation criteria
    "torque_tol": (float, 1e-8, _positive),
    "H_floor": (float, 1.0, _positive),
    "max_steps": (int, 10_000_000, _at_least_one),
    # experiment
    "H_a": (float, None, _non_negative),
    "theta_a_deg": (float, 0.0, None),
    "theta_start_deg": (float, 0.0, None),
    "theta_end_deg": (float, 360.0, None),
    "coarse_step_deg": (float, 1.0, _positive),
    "refine_step_deg": (float, 0.1, _positive),
    "direction": (str, "increasing", _direction),
    "bracket_lo_deg": (float, 180.0, _non_negative),
    "bracket_hi_deg": (float, 360.0, _positive),
    "angle_tol_deg": (float, 0.05, _positive),
    "walk_step_deg": (float, 1.0, _positive),
    "H_min": (float, None, _non_negative),
    "H_max": (float, None, _positive),
    "H_tol": (float, 100.0, _positive),
    "scan_points": (int, 9, lambda n, v: _at_least_one(n, v - 1)),
    "chirality_threshold": (float, 1e-3, _positive),
    "layer": (int, 0, _non_negative),  # 0 = default (interface) where applicable
    "seed": (int, 0, _non_negative),
    "init": (str, "saturated", _init_mode),
    "init_theta_deg": (float, 0.0, None),
    "init_phi_deg": (float, 0.0, None),
}

# keys with default None that a given kind requires
REQUIRED = {
    "relax": ("kind", "H_a"),
    "sweep": ("kind", "H_a"),
    "critical-angle": ("kind", "H_a"),
    "torque-curve": ("kind", "H_a"),
    "angle-curve": ("kind", "H_a"),
    "critical-fields": ("kind", "H_min", "H_max"),
}

_FIELD_TYPES = {str: str, int: int, float: float}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; one attribute per SCHEMA key."""

    kind: str
    n_hard: int
    n_soft: int
    d: float
    A_hard: float
    K_hard: float
    M_hard: float
    A_soft: float
    K_soft: float
    M_soft: float
    A_interface: float
    demag_coeff: float
    g: float
    steps_per_period: int
    dt_max: float
    stability_phase: float
    torque_tol: float
    H_floor: float
    max_steps: int
    H_a: float | None
    theta_a_deg: float
    theta_start_deg: float
    theta_end_deg: float
    coarse_step_deg: float
    refine_step_deg: float
    direction: str
    bracket_lo_deg: float
    bracket_hi_deg: float
    angle_tol_deg: float
    walk_step_deg: float
    H_min: float | None
    H_max: float | None
    H_tol: float
    scan_points: int
    chirality_threshold: float
    layer: int
    seed: int
    init: str
    init_theta_deg: float
    init_phi_deg: float

    def stack(self) -> MaterialStack:
        return build_stack(
            self.n_hard, self.n_soft, self.d,
            hard=Material(A=self.A_hard, K=self.K_hard, M=self.M_hard),
            soft=Material(A=self.A_soft, K=self.K_soft, M=self.M_soft),
            interface_A=self.A_interface, demag_coeff=self.demag_coeff)

    def step_params(self) -> StepParams:
        return StepParams(g=self.g, steps_per_period=self.steps_per_period,
                          dt_max=self.dt_max, stability_phase=self.stability_phase)

    def criteria(self) -> RelaxCriteria:
        return RelaxCriteria(torque_tol=self.torque_tol, H_floor=self.H_floor,
                             max_steps=self.max_steps)

    def to_text(self) -> str:
        """Canonical echo, parseable by parse_config and stable across runs."""
        lines = []
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, float):
                lines.append(f"{f.name} = {v!r}")
            else:
                lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]


def _convert(key: str, raw: str):
    typ, _, check = SCHEMA[key]
    raw = raw.strip()
    try:
        if typ is int:
            value = int(raw)
        elif typ is float:
            value = float(raw)
        else:
            value = raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None
    if check is not None:
        check(key, value)
    return value


def parse_config(text: str, overrides: dict[str, str] | None = None,
                 kind: str | None = None) -> ExperimentConfig:
    """Parse `key = value` config text, apply overrides, validate, fill defaults.

    Unknown keys, unparseable values, and out-of-range values raise
    ConfigError naming the key.  `kind` (from a CLI subcommand) supplies
    or must agree with the config's own kind.
    """
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        values[key] = _convert(key, raw)

    for key, raw in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"{key}: unknown key (override)")
        values[key] = _convert(key, str(raw))

    if kind is not None:
        _kind("kind", kind)
        if "kind" in values and values["kind"] != kind:
            raise ConfigError(
                f"kind: config says {values['kind']!r} but the subcommand is {kind!r}")
        values["kind"] = kind

    if "kind" not in values:
        raise ConfigError("kind: required key missing; give one of "
                          + ", ".join(KINDS))
    missing = [k for k in REQUIRED[values["kind"]]
               if values.get(k, SCHEMA[k][1]) is None]
    if missing:
        raise ConfigError(
            f"missing required keys for kind={values['kind']}: {', '.join(missing)}")

    full = {key: values.get(key, default) for key, (_, default, _) in SCHEMA.items()}
    cfg = ExperimentConfig(**full)

    if cfg.refine_step_deg > cfg.coarse_step_deg:
        raise ConfigError(
            f"refine_step_deg: must be <= coarse_step_deg, got {cfg.refine_step_deg}")
    if cfg.kind == "critical-angle" and cfg.bracket_hi_deg <= cfg.bracket_lo_deg:
        raise ConfigError("bracket_hi_deg: must exceed bracket_lo_deg")
    if cfg.kind == "critical-fields" and cfg.H_max <= cfg.H_min:
        raise ConfigError("H_max: must exceed H_min")
    if cfg.layer > cfg.n_hard + cfg.n_soft:
        raise ConfigError(f"layer: must be <= {cfg.n_hard + cfg.n_soft}, got {cfg.layer}")
    return cfg


def radians(deg: float) -> float:
    return math.radians(deg)
