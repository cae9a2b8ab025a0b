"""Relaxation of a chain under a fixed applied field to an equilibrium.

Equilibrium is declared when every spin is colinear with its effective
field: the residual max_i |m_i x H_i| / max(|H_i|, H_floor) is the sine
of the worst misalignment angle, scale-invariant across the 1e0-1e4 Oe
field range of the experiments.  The floor only guards the division for
layers whose field vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import FieldSet, effective_field, total_energy
from .integrator import StepParams, _advance_raw, select_dt, stiffness_frequency_bound
from .model import AppliedField, ChainState, MaterialStack, ValidationError

try:
    from ._kernel import relax_loop as _relax_loop
except ImportError:  # pragma: no cover - numba missing or broken
    _relax_loop = None


@dataclass(frozen=True)
class RelaxCriteria:
    """Convergence policy for relax().

    max_steps defaults high because equilibration slows by orders of
    magnitude near critical field angles and must not be truncated there.

    H_floor is 1 Oe, the bottom of the field range the experiments care
    about.  It cannot be made "negligibly small": where applied and
    anisotropy fields cancel (deep hard layers with the field at 90 deg
    to the easy axis), |H_i| falls smoothly through every scale and the
    unfloored ratio would demand aligning spins to a micro-oersted field
    whose direction is physically meaningless, which converges only
    algebraically.  Below the floor the criterion degrades gracefully to
    an absolute torque bound of torque_tol * H_floor.
    """

    torque_tol: float = 1e-8
    H_floor: float = 1.0
    max_steps: int = 10_000_000
    record_energy: bool = False

    def __post_init__(self):
        if self.torque_tol <= 0:
            raise ValueError(f"torque_tol: must be > 0, got {self.torque_tol}")
        if self.H_floor <= 0:
            raise ValueError(f"H_floor: must be > 0, got {self.H_floor}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps: must be >= 1, got {self.max_steps}")


@dataclass(frozen=True, eq=False)
class RelaxResult:
    state: ChainState
    equilibration_time: float
    steps: int
    converged: bool
    final_residual: float
    energies: np.ndarray | None = None


def residual(state: ChainState, fields: FieldSet, H_floor: float = 1.0) -> float:
    """Normalized transverse field: max_i |m_i x H_i| / max(|H_i|, H_floor)."""
    if fields.H.shape != state.spins.shape:
        raise ValidationError(
            f"fields: expected shape {state.spins.shape}, got {fields.H.shape}")
    torque = np.linalg.norm(np.cross(state.spins, fields.H), axis=1)
    scale = np.maximum(np.linalg.norm(fields.H, axis=1), H_floor)
    return float(np.max(torque / scale))


TraceFn = Callable[[int, float, float, float], None]


def relax(stack: MaterialStack, initial: ChainState, applied: AppliedField,
          criteria: RelaxCriteria = RelaxCriteria(),
          step: StepParams = StepParams(),
          trace: TraceFn | None = None) -> RelaxResult:
    """Integrate the chain until the torque residual reaches criteria.torque_tol.

    The loop repeats {evaluate all fields, check residual, pick dt from
    the fastest precession, advance every spin}.  Hitting max_steps is
    reported via converged=False, not raised.  A trace callable, if
    given, receives (step, time, residual, energy) at every field
    evaluation; tracing (and record_energy) selects the plain-numpy path,
    otherwise the compiled loop runs.
    """
    if initial.n_layers != stack.n_layers:
        raise ValidationError(
            f"initial: expected {stack.n_layers} layers, got {initial.n_layers}")

    dt_cap = step.stability_phase / stiffness_frequency_bound(stack, applied)

    use_kernel = _relax_loop is not None and trace is None and not criteria.record_energy
    if use_kernel:
        m = initial.spins.copy()
        ha = applied.vector
        steps, elapsed, resid, converged = _relax_loop(
            m, stack.M, stack.K, stack.J, stack.demag_coeff,
            ha[0], ha[1], ha[2], step.g,
            2.0 * np.pi / step.steps_per_period, dt_cap, step.dt_max,
            criteria.torque_tol, criteria.H_floor, criteria.max_steps)
        final = ChainState(spins=m, time=initial.time + elapsed)
        return RelaxResult(state=final, equilibration_time=elapsed, steps=steps,
                           converged=bool(converged), final_residual=float(resid))

    state = initial
    energies = [] if criteria.record_energy else None
    steps = 0
    while True:
        fields = effective_field(stack, state, applied)
        r = residual(state, fields, criteria.H_floor)
        energy = np.nan
        if criteria.record_energy or trace is not None:
            energy = total_energy(stack, state, applied)
            if energies is not None:
                energies.append(energy)
        if trace is not None:
            trace(steps, state.time, r, energy)
        if r <= criteria.torque_tol:
            converged = True
            break
        if steps >= criteria.max_steps:
            converged = False
            break
        dt = select_dt(fields, step)
        if fields.max_magnitude > 0.0:
            dt = min(dt, dt_cap)
        spins = _advance_raw(state.spins, fields.H, step.g, dt)
        spins /= np.linalg.norm(spins, axis=1, keepdims=True)
        state = ChainState(spins=spins, time=state.time + dt)
        steps += 1

    return RelaxResult(
        state=state, equilibration_time=state.time - initial.time, steps=steps,
        converged=converged, final_residual=r,
        energies=None if energies is None else np.asarray(energies))
