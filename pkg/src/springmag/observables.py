"""Measurable aggregates of equilibrium configurations.

Torque density (erg/cm^2, same per-area convention as total_energy):

    T = H_a d sum_i M_i sin(theta_a - theta_i)

Magnetization angle (radians):

    alpha = atan2( sum_i M_i sin(theta_i), sum_i M_i cos(theta_i) )

branch-lifted against the previous sweep point, since the arctangent
alone is ambiguous by 2*pi across a rotating-field experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AngleProfile, AngleUndefinedError, AppliedField, MaterialStack, ValidationError


@dataclass(frozen=True, eq=False)
class TorqueCurve:
    theta_a: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        if np.shape(self.theta_a) != np.shape(self.T):
            raise ValidationError("theta_a/T: lengths differ")


@dataclass(frozen=True, eq=False)
class AngleCurve:
    theta_a: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        if np.shape(self.theta_a) != np.shape(self.alpha):
            raise ValidationError("theta_a/alpha: lengths differ")


def _check_profile(stack: MaterialStack, profile: AngleProfile):
    if profile.n_layers != stack.n_layers:
        raise ValidationError(
            f"profile: expected {stack.n_layers} layers, got {profile.n_layers}")


def torque_density(stack: MaterialStack, profile: AngleProfile,
                   applied: AppliedField) -> float:
    """Torque per unit film area exerted by the applied field, erg/cm^2."""
    _check_profile(stack, profile)
    return float(applied.magnitude * stack.d
                 * np.sum(stack.M * np.sin(applied.angle - profile.theta)))


def magnetization_angle(stack: MaterialStack, profile: AngleProfile,
                        reference: float | None = None) -> float:
    """In-plane angle of the net magnetic moment, radians.

    With a reference (the previous sweep point's angle) the result is
    lifted by the multiple of 2*pi closest to it.
    """
    _check_profile(stack, profile)
    s = float(np.sum(stack.M * np.sin(profile.theta)))
    c = float(np.sum(stack.M * np.cos(profile.theta)))
    r = math.hypot(s, c)
    if r < 1e-12 * float(np.sum(stack.M)):
        raise AngleUndefinedError("net moment vanishes, magnetization angle undefined")
    alpha = math.atan2(s, c)
    if reference is not None:
        alpha += 2.0 * math.pi * round((reference - alpha) / (2.0 * math.pi))
    return alpha


def layer_hysteresis(inc, dec, layer: int):
    """Extract one layer's theta_i(theta_a) branch pair from paired sweeps.

    layer is 1-based (figure convention).  Returns (theta_a, theta_inc,
    theta_dec) on the grid common to both branches.  Import-light: takes
    the SweepRecord lists produced by sweep.rotational_sweep.
    """
    from .sweep import _common_grid  # local import: avoids module cycle

    if not inc or not dec:
        raise ValidationError("inc/dec: need at least one record per branch")
    n = inc[0].profile.n_layers
    if not 1 <= layer <= n:
        raise ValidationError(f"layer: must be in 1..{n}, got {layer}")
    grid, inc_at, dec_at = _common_grid(inc, dec)
    k = layer - 1
    return (grid,
            np.array([inc_at[t].profile.theta[k] for t in grid]),
            np.array([dec_at[t].profile.theta[k] for t in grid]))
