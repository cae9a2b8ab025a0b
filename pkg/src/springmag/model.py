"""Domain types for the layered hard/soft stack and the spin-chain state.

Conventions (CGS):
    M  saturation magnetization      emu/cm^3
    K  uniaxial anisotropy density   erg/cm^3
    A  exchange constant             erg/cm
    J  interlayer coupling A/d^2     erg/cm^3
    d  atomic layer thickness        cm

The easy axis of the hard material is e_x; e_z is the film normal.
Layers are indexed 0..N-1 internally (hard layers first); file formats
and figure-style labels use 1-based indices.  All angles are radians
internally, degrees only at CLI boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FOUR_PI = 4.0 * math.pi

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])


class ValidationError(ValueError):
    """A constructor argument violates its constraint; message names the field."""


class AngleUndefinedError(ValueError):
    """An in-plane or aggregate angle is requested for a configuration without one."""


@dataclass(frozen=True)
class Material:
    """Bulk parameters of one magnetic material."""

    A: float  # exchange constant, erg/cm
    K: float  # uniaxial anisotropy, erg/cm^3
    M: float  # saturation magnetization, emu/cm^3


# Standard bilayer materials (Fe on Sm-Co) used throughout the experiments.
FE = Material(A=2.8e-6, K=1.0e3, M=1700.0)
SM_CO = Material(A=1.2e-6, K=5.0e7, M=550.0)
INTERFACE_A = 1.8e-6  # hard/soft interface exchange constant, erg/cm


@dataclass(frozen=True, eq=False)
class MaterialStack:
    """Per-layer material data for a chain of N = n_hard + n_soft layers.

    M and K have length N; J has length N-1 (one entry per nearest-neighbor
    bond, bond b couples layers b and b+1).  demag_coeff is the single
    non-zero element D_zz of the thin-film demagnetization tensor.
    """

    n_hard: int
    n_soft: int
    d: float
    M: np.ndarray
    K: np.ndarray
    J: np.ndarray
    demag_coeff: float = FOUR_PI

    def __post_init__(self):
        n = self.n_hard + self.n_soft
        if n < 1:
            raise ValidationError("n_hard + n_soft: need at least one layer")
        if self.d <= 0:
            raise ValidationError(f"d: must be > 0, got {self.d}")
        for name, arr, length in (("M", self.M, n), ("K", self.K, n), ("J", self.J, n - 1)):
            a = np.asarray(arr, dtype=float)
            if a.shape != (length,):
                raise ValidationError(f"{name}: expected shape ({length},), got {a.shape}")
            object.__setattr__(self, name, a)
        if np.any(self.M <= 0):
            raise ValidationError("M: all entries must be > 0")
        if np.any(self.K < 0):
            raise ValidationError("K: all entries must be >= 0")
        if np.any(self.J < 0):
            raise ValidationError("J: all entries must be >= 0")

    @property
    def n_layers(self) -> int:
        return self.n_hard + self.n_soft

    @property
    def interface(self) -> int:
        """0-based index of the top hard layer (layer N_h in 1-based labels)."""
        return self.n_hard - 1


def build_stack(
    n_hard: int,
    n_soft: int,
    d: float,
    hard: Material = SM_CO,
    soft: Material = FE,
    interface_A: float = INTERFACE_A,
    demag_coeff: float = FOUR_PI,
) -> MaterialStack:
    """Assemble a hard/soft bilayer stack with J = A/d^2 per bond.

    Bonds inside each material use that material's A; the single bond
    spanning the interface uses interface_A.
    """
    if n_hard < 1:
        raise ValidationError(f"n_hard: must be >= 1, got {n_hard}")
    if n_soft < 1:
        raise ValidationError(f"n_soft: must be >= 1, got {n_soft}")
    if d <= 0:
        raise ValidationError(f"d: must be > 0, got {d}")
    for label, mat in (("hard", hard), ("soft", soft)):
        if mat.A <= 0:
            raise ValidationError(f"{label}.A: must be > 0, got {mat.A}")
        if mat.M <= 0:
            raise ValidationError(f"{label}.M: must be > 0, got {mat.M}")
        if mat.K < 0:
            raise ValidationError(f"{label}.K: must be >= 0, got {mat.K}")
    if interface_A <= 0:
        raise ValidationError(f"interface_A: must be > 0, got {interface_A}")

    n = n_hard + n_soft
    M = np.where(np.arange(n) < n_hard, hard.M, soft.M).astype(float)
    K = np.where(np.arange(n) < n_hard, hard.K, soft.K).astype(float)
    bond_A = np.where(np.arange(n - 1) < n_hard - 1, hard.A, soft.A).astype(float)
    bond_A[n_hard - 1] = interface_A
    J = bond_A / d**2
    return MaterialStack(n_hard=n_hard, n_soft=n_soft, d=d, M=M, K=K, J=J,
                         demag_coeff=demag_coeff)


def reference_bilayer(n_hard: int = 115, n_soft: int = 100, d: float = 2.0e-8) -> MaterialStack:
    """The standard Sm-Co/Fe test stack (115 hard + 100 soft layers, d = 2 A)."""
    return build_stack(n_hard, n_soft, d)


@dataclass(frozen=True, eq=False)
class ChainState:
    """Spin chain at one instant: spins is (N, 3) with unit rows, time in reduced units.

    Treated as immutable: operations return new states and never modify spins.
    """

    spins: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.spins, dtype=float)
        if s.ndim != 2 or s.shape[1] != 3:
            raise ValidationError(f"spins: expected (N, 3) array, got {s.shape}")
        norms = np.linalg.norm(s, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise ValidationError(
                f"spins: row {worst} has norm {norms[worst]!r}, expected 1 within 1e-9")
        object.__setattr__(self, "spins", s)

    @property
    def n_layers(self) -> int:
        return self.spins.shape[0]


@dataclass(frozen=True)
class AppliedField:
    """Uniform in-plane applied field: magnitude in oersted, angle from e_x in radians."""

    magnitude: float
    angle: float = 0.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValidationError(f"magnitude: must be >= 0, got {self.magnitude}")

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle), 0.0])

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * self.direction


@dataclass(frozen=True, eq=False)
class AngleProfile:
    """Unwrapped in-plane angles theta and out-of-plane angles phi, one per layer.

    theta is lifted to a continuous branch along the chain: consecutive
    entries never differ by pi or more.
    """

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        p = np.asarray(self.phi, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ValidationError(f"theta/phi: expected matching 1-D arrays, got {t.shape}, {p.shape}")
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "phi", p)

    @property
    def n_layers(self) -> int:
        return self.theta.shape[0]


def uniform_state(stack: MaterialStack, theta: float = 0.0, phi: float = 0.0) -> ChainState:
    """All spins at in-plane angle theta, out-of-plane angle phi; time = 0."""
    m = np.array([math.cos(phi) * math.cos(theta),
                  math.cos(phi) * math.sin(theta),
                  math.sin(phi)])
    return ChainState(spins=np.tile(m, (stack.n_layers, 1)), time=0.0)


def random_state(stack: MaterialStack, rng: np.random.Generator) -> ChainState:
    """Independent uniformly random unit spins; time = 0."""
    v = rng.normal(size=(stack.n_layers, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return ChainState(spins=v, time=0.0)


def angle_profile(state: ChainState, reference: AngleProfile | None = None) -> AngleProfile:
    """Extract per-layer angles, unwrapped along the chain from layer 0.

    With a reference profile (the previous point of a sweep) the whole
    chain is shifted by the single multiple of 2*pi that best matches the
    reference, so theta_i(theta_a) curves stay continuous across the
    atan2 branch cut.  A per-layer branch choice would break the
    along-chain continuity guarantee whenever part of the chain jumps, so
    one global shift is used instead.
    """
    m = state.spins
    in_plane = np.hypot(m[:, 0], m[:, 1])
    if np.any(in_plane < 1e-15):
        bad = int(np.argmin(in_plane))
        raise AngleUndefinedError(
            f"layer {bad}: spin is parallel to e_z, in-plane angle undefined")
    theta = np.unwrap(np.arctan2(m[:, 1], m[:, 0]))
    phi = np.arcsin(np.clip(m[:, 2], -1.0, 1.0))
    if reference is not None:
        if reference.n_layers != theta.shape[0]:
            raise ValidationError(
                f"reference: expected {theta.shape[0]} layers, got {reference.n_layers}")
        shift = np.round(np.median(reference.theta - theta) / (2.0 * math.pi))
        theta = theta + 2.0 * math.pi * shift
    return AngleProfile(theta=theta, phi=phi)


def chirality(profile: AngleProfile, stack: MaterialStack, threshold: float = 1e-3) -> int:
    """Sign of the net in-plane winding across the soft region.

    Winding is theta[top layer] - theta[top hard layer] on the unwrapped
    profile; windings smaller than threshold (radians) count as achiral (0).
    """
    if profile.n_layers != stack.n_layers:
        raise ValidationError(
            f"profile: expected {stack.n_layers} layers, got {profile.n_layers}")
    w = profile.theta[-1] - profile.theta[stack.interface]
    if abs(w) < threshold:
        return 0
    return 1 if w > 0 else -1
