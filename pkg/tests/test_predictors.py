import numpy as np
import pytest

from conftest import random_mc, random_stack
from smsrecon.errors import (
    CalibrationError,
    ConfigError,
    DegenerateInputError,
    NearZeroAlphaError,
)
from smsrecon.operators import CaipiScheme, Stage, apply_mask, degradation_m, degradation_u
from smsrecon.predictors import (
    GrappaKernel,
    TruthContext,
    estimator_to_degradation,
    grappa_calibrate,
    identity_kernel,
    low_frequency_anchor,
    oracle_predict,
    slice_grappa_apply,
)
from smsrecon.simulation import standard_scheme, uniform_mask
from smsrecon.trajectory import TrajectoryState, forward_state, linear_schedule, run_reverse_chain


def planted_setup(seed=0, coils=2, rows=16, cols=16, window=3):
    """Collapsed grid plus target generated by a known random kernel."""
    rng = np.random.default_rng(seed)
    collapsed = rng.standard_normal((coils, rows, cols)) + 1j * rng.standard_normal(
        (coils, rows, cols)
    )
    k0 = GrappaKernel(
        target_slice=0,
        weights=rng.standard_normal((coils, coils, window, window))
        + 1j * rng.standard_normal((coils, coils, window, window)),
        ridge=0.0,
        residual=0.0,
    )
    target = slice_grappa_apply(collapsed, k0)
    return collapsed, target, k0


class TestOraclePredict:
    def test_stage_m_single_slice_zero(self):
        stack = random_stack(0, b=1)
        sch = standard_scheme(1, 12, 12)
        mask = uniform_mask(12, 12, 1, 0)
        truth = TruthContext(stack, sch, mask, 0)
        d = oracle_predict(TrajectoryState(stack[0], 1, Stage.M), truth)
        assert np.max(np.abs(d.data)) <= 1e-12

    def test_stage_u_full_mask_zero(self):
        stack = random_stack(1, b=2)
        sch = standard_scheme(2, 12, 12)
        mask = uniform_mask(12, 12, 1, 0)
        truth = TruthContext(stack, sch, mask, 1)
        d = oracle_predict(TrajectoryState(stack[1], 1, Stage.U), truth)
        assert np.all(d.data == 0)

    def test_stage_m_delegates_bit_for_bit(self):
        stack = random_stack(2, b=3)
        sch = standard_scheme(3, 12, 12)
        mask = uniform_mask(12, 12, 1, 0)  # full sampling: no masking of truth
        truth = TruthContext(stack, sch, mask, 2)
        d = oracle_predict(TrajectoryState(stack[2], 1, Stage.M), truth)
        expected = degradation_m(stack, sch, 2)
        assert np.array_equal(d.data, expected.data)

    def test_stage_m_uses_masked_truth_when_undersampled(self):
        stack = random_stack(3, b=3)
        sch = standard_scheme(3, 12, 12)
        mask = uniform_mask(12, 12, 2, 4)
        truth = TruthContext(stack, sch, mask, 0)
        d = oracle_predict(TrajectoryState(stack[0], 1, Stage.M), truth)
        masked = np.stack([apply_mask(s, mask) for s in stack])
        assert np.array_equal(d.data, degradation_m(masked, sch, 0).data)

    def test_invalid_slice_is_config_error(self):
        stack = random_stack(4, b=2)
        sch = standard_scheme(2, 12, 12)
        truth = TruthContext(stack, sch, uniform_mask(12, 12, 1, 0), 5)
        with pytest.raises(ConfigError):
            oracle_predict(TrajectoryState(stack[0], 1, Stage.M), truth)


class TestCalibration:
    def test_planted_kernel_recovery(self):
        collapsed, target, k0 = planted_setup()
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        kernels = grappa_calibrate(
            collapsed, target[None], scheme, (0, 16), window=3, ridge=0.0
        )
        err = np.max(np.abs(kernels[0].weights - k0.weights))
        assert err <= 1e-8 * np.max(np.abs(k0.weights))
        assert kernels[0].residual >= 0.0

    def test_identity_setting(self):
        grid = random_mc(5, coils=2, rows=20, cols=20)
        scheme = CaipiScheme(shifts=(0.0,), rows=20, cols=20)
        kernels = grappa_calibrate(grid, grid[None], scheme, (0, 20), window=3, ridge=0.0)
        w = kernels[0].weights
        expected = identity_kernel(2, window=3).weights
        assert np.max(np.abs(w - expected)) <= 1e-8

    def test_ridge_shrinks_tap_norms(self):
        collapsed, target, _ = planted_setup(seed=3)
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        norms = []
        for ridge in (0.0, 1.0, 10.0):
            k = grappa_calibrate(
                collapsed, target[None], scheme, (0, 16), window=3, ridge=ridge
            )[0]
            norms.append(np.linalg.norm(k.weights))
        assert norms[0] > norms[1] > norms[2]

    def test_underdetermined_acs_raises(self):
        collapsed, target, _ = planted_setup()
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        with pytest.raises(CalibrationError):
            grappa_calibrate(collapsed, target[None], scheme, (6, 10), window=5)

    def test_recalibration_fixed_point(self):
        collapsed, target, k0 = planted_setup(seed=8)
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        first = grappa_calibrate(collapsed, target[None], scheme, (0, 16), window=3, ridge=0.0)[0]
        replay = slice_grappa_apply(collapsed, first)
        second = grappa_calibrate(collapsed, replay[None], scheme, (0, 16), window=3, ridge=0.0)[0]
        assert np.max(np.abs(second.weights - first.weights)) <= 1e-8


class TestKernelApply:
    def test_identity_kernel(self):
        k = random_mc(0, coils=3)
        assert np.allclose(slice_grappa_apply(k, identity_kernel(3)), k, atol=1e-14)

    def test_zero_kernel(self):
        k = random_mc(1, coils=2)
        zero = GrappaKernel(0, np.zeros((2, 2, 5, 5), dtype=complex), 0.0, 0.0)
        assert np.all(slice_grappa_apply(k, zero) == 0)

    def test_planted_data_exact(self):
        collapsed, target, k0 = planted_setup(seed=4)
        out = slice_grappa_apply(collapsed, k0)
        assert np.max(np.abs(out - target)) <= 1e-8


class TestEstimatorAdapter:
    def test_exact_estimator_inverts_forward(self):
        k = random_mc(0, rows=8, cols=8)
        mask = uniform_mask(8, 8, 2, 2)
        d = degradation_u(k, mask)
        sched = linear_schedule(4)
        state = forward_state(k, d, sched, 3)
        out = estimator_to_degradation(state, k, sched)
        assert np.max(np.abs(out.data - d.data)) <= 1e-10

    def test_state_estimate_gives_zero(self):
        k = random_mc(1)
        sched = linear_schedule(2)
        state = TrajectoryState(x=k, t=2, stage=Stage.U)
        assert np.all(estimator_to_degradation(state, k, sched).data == 0)

    def test_scalar_division(self):
        sched = linear_schedule(2)
        x = np.full((1, 4, 4), 3.0 + 0j)
        k_est = np.full((1, 4, 4), 1.0 + 0j)
        state = TrajectoryState(x=x, t=1, stage=Stage.M)  # alpha = 0.5
        out = estimator_to_degradation(state, k_est, sched)
        assert np.allclose(out.data, 4.0)

    def test_near_zero_alpha_rejected(self):
        sched = linear_schedule(4)
        state = TrajectoryState(x=np.zeros((1, 4, 4), complex), t=0, stage=Stage.U)
        with pytest.raises(NearZeroAlphaError):
            estimator_to_degradation(state, np.zeros((1, 4, 4), complex), sched)

    def test_perfect_estimator_chain_reproduces_target(self):
        k = random_mc(2, rows=8, cols=8)
        mask = uniform_mask(8, 8, 2, 2)
        d = degradation_u(k, mask)
        sched = linear_schedule(9)

        def predictor(x, t_norm, stage):
            t = int(round(t_norm * sched.T))
            return estimator_to_degradation(TrajectoryState(x, t, stage), k, sched)

        out = run_reverse_chain(k + d.data, Stage.U, sched, predictor)
        assert np.max(np.abs(out - k)) <= 1e-9 * np.max(np.abs(k))


class TestLowFrequencyAnchor:
    def test_identity_kernel_full_mask(self):
        y = random_mc(0, coils=2, rows=16, cols=16)
        mask = uniform_mask(16, 16, 1, 6)
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        kernel = identity_kernel(2)
        anchors = low_frequency_anchor(y, mask, scheme, [kernel])
        assert np.array_equal(
            anchors[0][:, :, mask.acs_lo:mask.acs_hi], y[:, :, mask.acs_lo:mask.acs_hi]
        )
        outside = np.ones(16, dtype=bool)
        outside[mask.acs_lo:mask.acs_hi] = False
        assert np.all(anchors[0][:, :, outside] == 0)

    def test_empty_acs_rejected(self):
        y = random_mc(1, coils=2, rows=16, cols=16)
        mask = uniform_mask(16, 16, 2, 0)
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        with pytest.raises(DegenerateInputError):
            low_frequency_anchor(y, mask, scheme, [identity_kernel(2)])

    def test_missing_kernels_rejected(self):
        y = random_mc(2, coils=2, rows=16, cols=16)
        mask = uniform_mask(16, 16, 2, 6)
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        with pytest.raises(ConfigError):
            low_frequency_anchor(y, mask, scheme, [])

    def test_planted_kernel_anchor(self):
        collapsed, target, k0 = planted_setup(seed=6)
        mask = uniform_mask(16, 16, 1, 6)
        scheme = CaipiScheme(shifts=(0.0,), rows=16, cols=16)
        anchors = low_frequency_anchor(collapsed, mask, scheme, [k0])
        band = slice(mask.acs_lo, mask.acs_hi)
        assert np.max(np.abs(anchors[0][:, :, band] - target[:, :, band])) <= 1e-8
