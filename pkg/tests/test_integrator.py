import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from springmag import (
    AppliedField,
    ChainState,
    MaterialStack,
    NonUnitSpinError,
    StepParams,
    build_stack,
    chain_step,
    effective_field,
    llg_step_exact,
    llg_step_rk4,
    reference_bilayer,
    select_dt,
    total_energy,
    uniform_state,
)
from springmag.fields import FieldSet
from springmag.integrator import _advance_raw, stiffness_frequency_bound

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])


def random_unit(rng, n=None):
    v = rng.normal(size=(n, 3) if n else 3)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class TestExactStep:
    def test_zero_field_is_identity(self):
        m = np.array([0.6, 0.8, 0.0])
        out = llg_step_exact(m, np.zeros(3), g=0.5, dt=1.0)
        assert np.array_equal(out, m)

    def test_fixed_points_preserved(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            h = random_unit(rng)
            H = h * rng.uniform(0.1, 1e5)
            g = rng.uniform(0.0, 1.0)
            dt = rng.uniform(1e-6, 10.0)
            for sign in (1.0, -1.0):
                out = llg_step_exact(sign * h, H, g, dt)
                assert np.max(np.abs(out - sign * h)) < 1e-15

    def test_pure_precession_quarter_turn(self):
        out = llg_step_exact(EX, EZ, g=0.0, dt=math.pi / 2)
        assert out == pytest.approx(EY, abs=1e-15)

    def test_precession_sense_matches_derivative(self):
        # m' = -(m x H): at m = e_x, H = e_z the motion starts toward +e_y
        out = llg_step_exact(EX, EZ, g=0.0, dt=1e-6)
        assert out[1] > 0

    def test_matches_rk4_oracle(self):
        m = EX.copy()
        H = EZ * 1.0
        exact = llg_step_exact(m, H, g=0.5, dt=0.3)
        oracle = llg_step_rk4(m, H, g=0.5, dt=0.3, substeps=30000)
        assert exact == pytest.approx(oracle, abs=1e-8)

    def test_norm_preserved_before_renormalization(self):
        rng = np.random.default_rng(1)
        n = 50_000
        m = random_unit(rng, n)
        h = random_unit(rng, n)
        Hdt = rng.uniform(0.0, 10.0, size=n)
        for g in (0.0, 0.37, 1.0):
            raw = _advance_raw(m, h * Hdt[:, None], g, 1.0)
            err = np.abs(np.linalg.norm(raw, axis=1) - 1.0)
            assert err.max() <= 1e-12

    def test_unconditional_stability_huge_steps(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            m = random_unit(rng)
            h = random_unit(rng)
            H = rng.uniform(1e-3, 1e4)
            dt = 1e3 / H
            out = llg_step_exact(m, h * H, g=rng.uniform(0, 1), dt=dt)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-12
            assert -1.0 <= float(out @ h) <= 1.0

    def test_semigroup_property(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m = random_unit(rng)
            H = random_unit(rng) * rng.uniform(0.1, 50.0)
            g = rng.uniform(0.0, 1.0)
            a, b = rng.uniform(0.01, 0.5, size=2)
            one = llg_step_exact(m, H, g, a + b)
            two = llg_step_exact(llg_step_exact(m, H, g, a), H, g, b)
            assert np.max(np.abs(one - two)) < 1e-12

    @settings(max_examples=150, deadline=None)
    @given(u0=st.floats(-0.999, 0.999), g=st.floats(0.01, 1.0),
           hdt=st.floats(0.001, 5.0))
    def test_alignment_increases_monotonically(self, u0, g, hdt):
        h = EZ
        m = np.array([math.sqrt(1 - u0**2), 0.0, u0])
        out = llg_step_exact(m, h * hdt, g, 1.0)
        assert float(out @ h) >= u0 - 1e-14

    def test_non_unit_input_rejected(self):
        with pytest.raises(NonUnitSpinError):
            llg_step_exact(np.array([1.0, 1.0, 0.0]), EZ, 0.5, 0.1)


class TestRK4Oracle:
    def test_zero_field_is_identity(self):
        m = np.array([0.0, 0.6, 0.8])
        assert np.array_equal(llg_step_rk4(m, np.zeros(3), 0.5, 1.0, 10), m)

    def test_fourth_order_convergence(self):
        m = EX.copy()
        H = np.array([0.3, -0.5, 0.9])
        g, dt = 0.5, 1.0
        exact = llg_step_exact(m, H, g, dt)
        substeps = np.array([10, 20, 40, 80, 160])
        errs = np.array([np.max(np.abs(llg_step_rk4(m, H, g, dt, int(n)) - exact))
                         for n in substeps])
        slope = np.polyfit(np.log(substeps), np.log(errs), 1)[0]
        assert slope == pytest.approx(-4.0, abs=0.2)

    def test_precession_high_resolution(self):
        out = llg_step_rk4(EX, EZ, g=0.0, dt=math.pi / 2, substeps=1000)
        assert out == pytest.approx(EY, abs=1e-10)


class TestSelectDt:
    def test_definition(self):
        f = FieldSet(H=np.array([[0.0, 0.0, 2 * math.pi]]), max_magnitude=2 * math.pi)
        assert select_dt(f, StepParams(steps_per_period=64)) == pytest.approx(1 / 64)

    def test_zero_fields_give_dt_max(self):
        f = FieldSet(H=np.zeros((3, 3)), max_magnitude=0.0)
        assert select_dt(f, StepParams(dt_max=0.25)) == 0.25

    def test_saturated_bilayer_bound_is_hard_layer_scale(self):
        # saturated along the field at 90 deg: anisotropy dominates in hard layers
        stack = reference_bilayer()
        state = uniform_state(stack, math.pi / 2)
        f = effective_field(stack, state, AppliedField(4800.0, math.pi / 2))
        norms = np.linalg.norm(f.H, axis=1)
        assert np.argmax(norms) < stack.n_hard
        assert f.max_magnitude == pytest.approx(2 * 5e7 / 550.0 - 4800.0, rel=1e-12)
        assert select_dt(f, StepParams()) == pytest.approx(
            (2 * math.pi / 64) / f.max_magnitude)


class TestChainStep:
    def test_zero_field_only_advances_time(self):
        stack = reference_bilayer(n_hard=3, n_soft=3)
        state = uniform_state(stack)
        out = chain_step(stack, state, AppliedField(0.0), StepParams(dt_max=0.5))
        assert np.array_equal(out.spins, state.spins)
        assert out.time == pytest.approx(0.5)

    def test_single_spin_reduces_to_exact_step(self):
        stack = MaterialStack(n_hard=1, n_soft=0, d=2e-8, M=np.array([550.0]),
                              K=np.array([5e7]), J=np.zeros(0))
        m = np.array([[0.0, 1.0, 0.0]])
        state = ChainState(spins=m)
        applied = AppliedField(300.0, 0.0)
        f = effective_field(stack, state, applied)
        params = StepParams()
        dt = 1e-7
        out = chain_step(stack, state, applied, params, dt=dt)
        expect = llg_step_exact(m[0], f.H[0], params.g, dt)
        assert out.spins[0] == pytest.approx(expect, abs=1e-15)

    def test_two_soft_spins_align_under_exchange(self):
        stack = MaterialStack(n_hard=0, n_soft=2, d=2e-8,
                              M=np.full(2, 1700.0), K=np.zeros(2),
                              J=np.array([7e9]), demag_coeff=0.0)
        # antiparallel is an (unstable) equilibrium; perturb slightly
        eps = 1e-3
        spins = np.array([[1.0, 0.0, 0.0],
                          [-math.cos(eps), math.sin(eps), 0.0]])
        state = ChainState(spins=spins)
        applied = AppliedField(0.0)
        params = StepParams()
        for _ in range(3000):
            state = chain_step(stack, state, applied, params)
        dot = float(state.spins[0] @ state.spins[1])
        assert dot > 0.999999

    def test_energy_descent_from_random_states(self):
        stack = reference_bilayer(n_hard=6, n_soft=5)
        applied = AppliedField(4800.0, 1.0)
        params = StepParams(steps_per_period=32)
        rng = np.random.default_rng(9)
        for _ in range(3):
            ang = rng.uniform(-math.pi, math.pi, size=stack.n_layers)
            spins = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=1)
            state = ChainState(spins=spins)
            E = total_energy(stack, state, applied)
            for _ in range(2000):
                state = chain_step(stack, state, applied, params)
                E_new = total_energy(stack, state, applied)
                assert E_new <= E + 1e-9
                E = E_new

    def test_jacobi_update_frozen_field(self):
        # both spins must advance against the *input* state's fields
        stack = MaterialStack(n_hard=0, n_soft=2, d=2e-8,
                              M=np.full(2, 1700.0), K=np.zeros(2),
                              J=np.array([7e9]), demag_coeff=0.0)
        spins = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        state = ChainState(spins=spins)
        applied = AppliedField(0.0)
        params = StepParams()
        f = effective_field(stack, state, applied)
        dt = 1e-9
        out = chain_step(stack, state, applied, params, dt=dt)
        for i in range(2):
            expect = llg_step_exact(spins[i], f.H[i], params.g, dt)
            assert out.spins[i] == pytest.approx(expect, abs=1e-15)


class TestStiffnessBound:
    def test_dominated_by_interface_hard_layer(self):
        stack = reference_bilayer()
        bound = stiffness_frequency_bound(stack, AppliedField(4800.0))
        by_hand = 2 * (3.0e9 + 4.5e9) / 550.0 + 2 * 5e7 / 550.0 \
            + 4 * math.pi * 550.0 + 4800.0
        assert bound == pytest.approx(by_hand)

    def test_caps_chain_step_dt(self):
        stack = reference_bilayer()
        applied = AppliedField(4800.0, math.radians(5))
        state = uniform_state(stack)
        params = StepParams()
        out = chain_step(stack, state, applied, params)
        cap = params.stability_phase / stiffness_frequency_bound(stack, applied)
        assert out.time == pytest.approx(cap)
