"""Rotating-field experiments on the spin chain.

A rotational sweep relaxes the chain at a sequence of field directions
theta_a, warm-starting every relaxation from the previous equilibrium.
This continuation is what exposes hysteresis: a cold start would always
find the same branch, while the warm-started chain follows its branch
until the branch disappears and the configuration jumps.  Detected
jumps (chirality flips or large per-layer moves) are re-walked on a
finer grid so their locations are resolved to refine_step.

Built on top of the sweeps are the bisection searches for the critical
angle theta_c (where the chirality of the soft-region winding flips)
and for the three critical field strengths: onset of hysteresis, the
discontinuous narrowing of the loop, and the onset of full-length
transitions that move the deepest hard layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .equilibrium import RelaxCriteria, relax
from .integrator import StepParams
from .model import (
    AngleProfile,
    AppliedField,
    ChainState,
    MaterialStack,
    ValidationError,
    angle_profile,
    chirality,
    uniform_state,
)
from .observables import magnetization_angle, torque_density

TWO_PI = 2.0 * math.pi


class CriticalAngleNotFound(RuntimeError):
    """No chirality flip exists in the requested bracket."""


@dataclass(frozen=True)
class SweepSchedule:
    """Field magnitude and the theta_a grid of one sweep (radians).

    The walk runs from theta_start to theta_end at coarse_step; segments
    containing a detected jump are re-walked at refine_step.  theta_end
    may exceed 2*pi (continued rotations).  refine_step == coarse_step
    disables refinement.
    """

    H_a: float
    theta_start: float = 0.0
    theta_end: float = TWO_PI
    coarse_step: float = math.radians(1.0)
    refine_step: float = math.radians(0.1)

    def __post_init__(self):
        if self.H_a < 0:
            raise ValidationError(f"H_a: must be >= 0, got {self.H_a}")
        if self.theta_end == self.theta_start:
            raise ValidationError("theta_end: must differ from theta_start")
        if self.coarse_step <= 0:
            raise ValidationError(f"coarse_step: must be > 0, got {self.coarse_step}")
        if not 0 < self.refine_step <= self.coarse_step:
            raise ValidationError(
                f"refine_step: must be in (0, coarse_step], got {self.refine_step}")

    @property
    def direction(self) -> str:
        return "increasing" if self.theta_end > self.theta_start else "decreasing"

    def grid(self) -> np.ndarray:
        """Coarse theta_a values, endpoints included."""
        span = self.theta_end - self.theta_start
        n = max(1, round(abs(span) / self.coarse_step))
        signed = math.copysign(self.coarse_step, span)
        pts = self.theta_start + signed * np.arange(n + 1)
        if abs(pts[-1] - self.theta_end) > 1e-12:
            if (pts[-1] - self.theta_end) * math.copysign(1.0, span) > 0:
                pts = pts[:-1]
            if abs(pts[-1] - self.theta_end) > 1e-12:
                pts = np.append(pts, self.theta_end)
        return pts


@dataclass(frozen=True, eq=False)
class SweepRecord:
    """Equilibrium summary at one theta_a of a sweep."""

    theta_a: float
    state: ChainState
    profile: AngleProfile
    torque: float
    mag_angle: float
    chirality: int
    equilibration_time: float
    steps: int
    converged: bool


def _key(theta: float) -> int:
    # grid lookups tolerate ~1e-9 rad of float drift
    return round(theta * 1e9)


def _common_grid(inc, dec):
    """Common theta_a values of two sweeps plus per-branch lookup maps."""
    inc_at = {_key(r.theta_a): r for r in inc}
    dec_at = {_key(r.theta_a): r for r in dec}
    keys = sorted(set(inc_at) & set(dec_at))
    if len(keys) < 2:
        raise ValidationError("inc/dec sweeps share fewer than two theta_a grid points")
    grid = np.array([k * 1e-9 for k in keys])
    return grid, {k * 1e-9: inc_at[k] for k in keys}, {k * 1e-9: dec_at[k] for k in keys}


def _jumped(prev: SweepRecord, cur: SweepRecord, threshold: float) -> bool:
    if prev.chirality != 0 and cur.chirality == -prev.chirality:
        return True
    return bool(np.max(np.abs(cur.profile.theta - prev.profile.theta)) > threshold)


def rotational_sweep(stack: MaterialStack, schedule: SweepSchedule,
                     criteria: RelaxCriteria = RelaxCriteria(),
                     step: StepParams = StepParams(),
                     chirality_threshold: float = 1e-3,
                     jump_threshold: float | None = None,
                     on_record: Callable[[SweepRecord], None] | None = None) -> list[SweepRecord]:
    """Run one warm-started rotational sweep; returns records in walk order.

    The first point starts from the chain saturated along the easy axis.
    Non-converged relaxations are flagged on their record and the sweep
    continues from whatever state was reached.  on_record, if given, is
    called with each record as it is produced.
    """
    if jump_threshold is None:
        jump_threshold = 10.0 * schedule.coarse_step

    records: list[SweepRecord] = []

    def _emit(rec: SweepRecord):
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    def _point(theta_a: float, start: ChainState, prev: SweepRecord | None) -> SweepRecord:
        applied = AppliedField(schedule.H_a, theta_a)
        res = relax(stack, start, applied, criteria, step)
        ref = prev.profile if prev is not None else None
        prof = angle_profile(res.state, reference=ref)
        alpha_ref = prev.mag_angle if prev is not None else None
        return SweepRecord(
            theta_a=theta_a, state=res.state, profile=prof,
            torque=torque_density(stack, prof, applied),
            mag_angle=magnetization_angle(stack, prof, reference=alpha_ref),
            chirality=chirality(prof, stack, chirality_threshold),
            equilibration_time=res.equilibration_time, steps=res.steps,
            converged=res.converged)

    grid = schedule.grid()
    prev = _point(float(grid[0]), uniform_state(stack), None)
    _emit(prev)
    refine = schedule.refine_step < schedule.coarse_step
    for theta_a in grid[1:]:
        theta_a = float(theta_a)
        cur = _point(theta_a, prev.state, prev)
        if refine and _jumped(prev, cur, jump_threshold):
            n_sub = max(2, round(abs(theta_a - prev.theta_a) / schedule.refine_step))
            base = prev.theta_a
            span = theta_a - base
            for j in range(1, n_sub):
                mid = _point(base + span * (j / n_sub), prev.state, prev)
                _emit(mid)
                prev = mid
            cur = _point(theta_a, prev.state, prev)
        _emit(cur)
        prev = cur
    return records


def _soft_winding(profile: AngleProfile, stack: MaterialStack) -> float:
    return float(profile.theta[-1] - profile.theta[stack.interface])


def find_critical_angle(stack: MaterialStack, H_a: float,
                        bracket: tuple[float, float],
                        tol: float = math.radians(0.05),
                        criteria: RelaxCriteria = RelaxCriteria(),
                        step: StepParams = StepParams(),
                        walk_step: float = math.radians(1.0),
                        chirality_threshold: float = 1e-3,
                        winding_jump_min: float = 0.1) -> float:
    """Field direction at which the soft-region chirality flips, radians.

    The chain is walked quasi-statically from theta_a = 0 (saturated
    start) so that it rides the branch reached by continuous rotation; a
    flip inside the bracket is then bisected to tol.  A flip is a
    chirality sign reversal accompanied by a winding jump larger than
    winding_jump_min, which separates genuine discontinuities from the
    smooth sign change a reversible chain shows opposite the easy axis.
    """
    lo, hi = bracket
    if not 0.0 <= lo < hi:
        raise ValidationError(f"bracket: need 0 <= lo < hi, got ({lo}, {hi})")
    if tol <= 0:
        raise ValidationError(f"tol: must be > 0, got {tol}")

    def _relax_at(theta_a: float, start: ChainState, ref: AngleProfile | None):
        res = relax(stack, start, AppliedField(H_a, theta_a), criteria, step)
        if not res.converged:
            raise RuntimeError(
                f"relaxation did not converge at theta_a = {math.degrees(theta_a):.3f} deg "
                f"(residual {res.final_residual:.3e})")
        return res.state, angle_profile(res.state, reference=ref)

    state, prof = _relax_at(0.0, uniform_state(stack), None)
    theta_prev = 0.0
    c_ref = 0
    n = math.ceil(hi / walk_step - 1e-12)
    for k in range(1, n + 1):
        theta = min(k * walk_step, hi)
        new_state, new_prof = _relax_at(theta, state, prof)
        c_prev = chirality(prof, stack, chirality_threshold)
        c_cur = chirality(new_prof, stack, chirality_threshold)
        inside = theta_prev >= lo - 1e-12
        if inside and c_ref == 0 and c_prev != 0:
            c_ref = c_prev
        if (inside and c_ref != 0 and c_cur == -c_ref
                and abs(_soft_winding(new_prof, stack) - _soft_winding(prof, stack))
                > winding_jump_min):
            a, b = theta_prev, theta
            state_a, prof_a = state, prof
            while b - a > tol:
                mid = 0.5 * (a + b)
                mid_state, mid_prof = _relax_at(mid, state_a, prof_a)
                if chirality(mid_prof, stack, chirality_threshold) == c_ref:
                    a, state_a, prof_a = mid, mid_state, mid_prof
                else:
                    b = mid
            return 0.5 * (a + b)
        state, prof, theta_prev = new_state, new_prof, theta
    raise CriticalAngleNotFound(
        f"no chirality flip in ({math.degrees(lo):.2f}, {math.degrees(hi):.2f}) deg "
        f"at H_a = {H_a:g} Oe")


def loop_width(inc: list[SweepRecord], dec: list[SweepRecord],
               stack: MaterialStack | None = None, layer: int | None = None,
               diff_tol: float = 1e-4) -> float:
    """Total theta_a measure over which the two branches disagree, radians.

    Measured on one layer's theta_i(theta_a) curve (1-based layer index;
    default is the interface layer, which requires stack).  The branches
    are compared on their common theta_a grid; the edges of each
    disagreeing region are sharpened using whichever branch carries
    refined records around the jump.
    """
    if layer is None:
        if stack is None:
            raise ValidationError("layer: give a layer index or a stack for the default")
        layer = stack.n_hard
    n = inc[0].profile.n_layers if inc else 0
    if not 1 <= layer <= n:
        raise ValidationError(f"layer: must be in 1..{n}, got {layer}")
    k = layer - 1

    grid, inc_at, dec_at = _common_grid(inc, dec)
    diff = np.array([abs(inc_at[t].profile.theta[k] - dec_at[t].profile.theta[k])
                     for t in grid])
    mask = diff > diff_tol
    if not np.any(mask):
        return 0.0

    def _edge(i_out: int, i_in: int) -> float:
        lo, hi = sorted((grid[i_out], grid[i_in]))
        found = _best_edge(inc, dec, k, lo, hi)
        return found if found is not None else 0.5 * (lo + hi)

    width = 0.0
    i = 0
    m = len(grid)
    while i < m:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < m and mask[j + 1]:
            j += 1
        left = grid[i] if i == 0 else _edge(i - 1, i)
        right = grid[j] if j == m - 1 else _edge(j + 1, j)
        width += right - left
        i = j + 1
    return float(width)


def _best_edge(inc, dec, layer0: int, lo: float, hi: float):
    """Sharpest jump location of either branch inside (lo, hi), or None."""
    best = None
    best_size = 0.0
    for records in (inc, dec):
        for prev, cur in zip(records, records[1:]):
            a, b = sorted((prev.theta_a, cur.theta_a))
            if a < lo - 1e-12 or b > hi + 1e-12:
                continue
            size = abs(cur.profile.theta[layer0] - prev.profile.theta[layer0])
            if size > best_size:
                best_size = size
                best = 0.5 * (prev.theta_a + cur.theta_a)
    return best


@dataclass(frozen=True, eq=False)
class CriticalReport:
    """Critical fields plus the per-H_a scan data behind them.

    theta_c entries are nan where no flip exists; H_c values are None
    when the corresponding transition was not detected in the range.
    """

    H_samples: np.ndarray
    theta_c: np.ndarray
    loop_widths: np.ndarray
    H_c1: float | None
    H_c2: float | None
    H_c3: float | None

    def __post_init__(self):
        vals = [v for v in (self.H_c1, self.H_c2, self.H_c3) if v is not None]
        if vals != sorted(vals):
            raise ValidationError(
                f"critical fields out of order: H_c1={self.H_c1}, "
                f"H_c2={self.H_c2}, H_c3={self.H_c3}")


def find_critical_fields(stack: MaterialStack, H_range: tuple[float, float],
                         tol: float = 100.0,
                         scan_points: int = 9,
                         coarse_step: float = math.radians(1.0),
                         refine_step: float = math.radians(0.1),
                         criteria: RelaxCriteria = RelaxCriteria(),
                         step: StepParams = StepParams(),
                         width_drop_fraction: float = 0.25,
                         hard_layer_threshold: float = math.radians(10.0),
                         diff_tol: float = 1e-4) -> CriticalReport:
    """Locate the three critical field strengths inside H_range (oersted).

    H_c1: smallest field whose rotational sweep is irreversible (loop
    width becomes nonzero).  H_c2: location of a relative loop-width drop
    exceeding width_drop_fraction between neighboring fields.  H_c3:
    onset of full-length transitions, i.e. the deepest hard layer leaving
    the easy axis by more than hard_layer_threshold somewhere in the
    sweep.  Each probe costs a full increasing/decreasing sweep pair;
    results are resolved to tol by bisection.  Undetected transitions
    are reported as None.
    """
    lo, hi = H_range
    if not 0 <= lo < hi:
        raise ValidationError(f"H_range: need 0 <= lo < hi, got {H_range}")
    if scan_points < 2:
        raise ValidationError(f"scan_points: must be >= 2, got {scan_points}")
    if tol <= 0:
        raise ValidationError(f"tol: must be > 0, got {tol}")

    cache: dict[float, tuple[list[SweepRecord], list[SweepRecord]]] = {}

    def _pair(H_a: float):
        if H_a not in cache:
            inc = rotational_sweep(stack, SweepSchedule(
                H_a=H_a, theta_start=0.0, theta_end=TWO_PI,
                coarse_step=coarse_step, refine_step=refine_step), criteria, step)
            dec = rotational_sweep(stack, SweepSchedule(
                H_a=H_a, theta_start=TWO_PI, theta_end=0.0,
                coarse_step=coarse_step, refine_step=refine_step), criteria, step)
            cache[H_a] = (inc, dec)
        return cache[H_a]

    def _width(H_a: float) -> float:
        inc, dec = _pair(H_a)
        return loop_width(inc, dec, stack, diff_tol=diff_tol)

    def _theta_c(H_a: float) -> float:
        inc, _ = _pair(H_a)
        flips = [0.5 * (p.theta_a + c.theta_a) for p, c in zip(inc, inc[1:])
                 if p.chirality != 0 and c.chirality == -p.chirality]
        return flips[0] if flips else math.nan

    def _hard_moves(H_a: float) -> bool:
        inc, _ = _pair(H_a)
        return max(abs(r.profile.theta[0]) for r in inc) > hard_layer_threshold

    H_samples = np.linspace(lo, hi, scan_points)
    widths = np.array([_width(h) for h in H_samples])
    thetas = np.array([_theta_c(h) for h in H_samples])

    def _bisect(a: float, b: float, in_upper) -> float:
        while b - a > tol:
            mid = 0.5 * (a + b)
            if in_upper(mid):
                b = mid
            else:
                a = mid
        return 0.5 * (a + b)

    H_c1 = None
    nz = np.nonzero(widths > 0.0)[0]
    if nz.size and nz[0] > 0:
        k = nz[0]
        H_c1 = _bisect(float(H_samples[k - 1]), float(H_samples[k]),
                       lambda h: _width(h) > 0.0)
    elif nz.size:
        H_c1 = float(H_samples[0])  # already irreversible at the range start

    H_c2 = None
    for k in range(len(H_samples) - 1):
        w0, w1 = widths[k], widths[k + 1]
        if w0 > 0.0 and w1 > 0.0 and (w0 - w1) > width_drop_fraction * w0:
            split = 0.5 * (w0 + w1)
            H_c2 = _bisect(float(H_samples[k]), float(H_samples[k + 1]),
                           lambda h: _width(h) < split)
            break

    H_c3 = None
    moved = [_hard_moves(h) for h in H_samples]
    for k in range(len(H_samples) - 1):
        if not moved[k] and moved[k + 1]:
            H_c3 = _bisect(float(H_samples[k]), float(H_samples[k + 1]), _hard_moves)
            break

    return CriticalReport(H_samples=H_samples, theta_c=thetas, loop_widths=widths,
                          H_c1=H_c1, H_c2=H_c2, H_c3=H_c3)
