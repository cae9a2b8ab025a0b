"""Effective magnetic field per layer and total energy of a chain state.

The effective field in layer i (oersted) is

    H_i = H_a + (1/M_i) [J_{i,i+1} (m_{i+1} - m_i) - J_{i,i-1} (m_i - m_{i-1})]
          - (2 K_i / M_i) e_x x (m_i x e_x)
          - D_zz M_i (m_i . e_z) e_z

with free ends realized by mirroring (m_0 = m_1, m_{N+1} = m_N), which
simply drops the missing bond terms.  The total energy per unit film
area (erg/cm^2) is the exact antiderivative of this field up to terms
parallel to m_i, plus the Zeeman term:

    E = d [ sum_b J_b (1 - m_b . m_{b+1})
          + sum_i K_i |m_i x e_x|^2
          + sum_i (D_zz/2) M_i^2 (m_i . e_z)^2
          - sum_i M_i (m_i . H_a) ]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AppliedField, ChainState, MaterialStack, ValidationError


@dataclass(frozen=True, eq=False)
class FieldSet:
    """Effective field H (N, 3) in oersted and its largest per-layer magnitude."""

    H: np.ndarray
    max_magnitude: float


def _check_sizes(stack: MaterialStack, state: ChainState):
    if state.n_layers != stack.n_layers:
        raise ValidationError(
            f"state: expected {stack.n_layers} layers, got {state.n_layers}")


def effective_field(stack: MaterialStack, state: ChainState,
                    applied: AppliedField) -> FieldSet:
    """Evaluate the effective field in every layer for one chain state."""
    _check_sizes(stack, state)
    m = state.spins
    H = np.tile(applied.vector, (stack.n_layers, 1))

    if stack.n_layers > 1:
        bond = stack.J[:, None] * (m[1:] - m[:-1])  # (N-1, 3)
        H[:-1] += bond / stack.M[:-1, None]
        H[1:] -= bond / stack.M[1:, None]

    # e_x x (m x e_x) = m - m_x e_x, the transverse part w.r.t. the easy axis
    transverse = m.copy()
    transverse[:, 0] = 0.0
    H -= (2.0 * stack.K / stack.M)[:, None] * transverse

    H[:, 2] -= stack.demag_coeff * stack.M * m[:, 2]

    return FieldSet(H=H, max_magnitude=float(np.max(np.linalg.norm(H, axis=1))))


def field_split(fields: FieldSet) -> tuple[np.ndarray, np.ndarray]:
    """Split each H_i into its in-plane vector and out-of-plane scalar parts."""
    in_plane = fields.H.copy()
    out_of_plane = in_plane[:, 2].copy()
    in_plane[:, 2] = 0.0
    return in_plane, out_of_plane


def total_energy(stack: MaterialStack, state: ChainState,
                 applied: AppliedField) -> float:
    """Total energy per unit film area, erg/cm^2 (exchange + anisotropy
    + demagnetization + Zeeman)."""
    _check_sizes(stack, state)
    m = state.spins
    exchange = 0.0
    if stack.n_layers > 1:
        exchange = np.sum(stack.J * (1.0 - np.sum(m[:-1] * m[1:], axis=1)))
    anisotropy = np.sum(stack.K * (1.0 - m[:, 0] ** 2))
    demag = 0.5 * stack.demag_coeff * np.sum(stack.M**2 * m[:, 2] ** 2)
    zeeman = -np.sum(stack.M * (m @ applied.vector))
    return float(stack.d * (exchange + anisotropy + demag + zeeman))
