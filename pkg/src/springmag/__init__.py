"""springmag: magnetization reversal in layered hard/soft spring magnets.

A 1-D chain of unit spins (one per atomic layer) evolves under damped
precessional dynamics in its local effective field.  The package provides
the exact norm-preserving single-spin propagator, whole-chain relaxation
to equilibrium, rotational-field sweep experiments with hysteresis-loop
assembly, critical-angle and critical-field searches, and measurable
aggregates (torque density, magnetization angle).
"""

from .model import (
    FE,
    SM_CO,
    INTERFACE_A,
    AngleProfile,
    AngleUndefinedError,
    AppliedField,
    ChainState,
    Material,
    MaterialStack,
    ValidationError,
    angle_profile,
    build_stack,
    chirality,
    random_state,
    reference_bilayer,
    uniform_state,
)
from .fields import FieldSet, effective_field, field_split, total_energy
from .integrator import (
    NonUnitSpinError,
    StepParams,
    chain_step,
    llg_step_exact,
    llg_step_rk4,
    select_dt,
)
from .equilibrium import RelaxCriteria, RelaxResult, relax, residual
from .sweep import (
    CriticalAngleNotFound,
    CriticalReport,
    SweepRecord,
    SweepSchedule,
    find_critical_angle,
    find_critical_fields,
    loop_width,
    rotational_sweep,
)
from .observables import (
    AngleCurve,
    TorqueCurve,
    layer_hysteresis,
    magnetization_angle,
    torque_density,
)

__version__ = "0.1.0"
