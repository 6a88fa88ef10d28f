import numpy as np
import pytest

from conftest import random_mc
from smsrecon.baselines import (
    SENS_THRESHOLD,
    estimate_sensitivities,
    sense_reconstruct,
    slice_grappa_reconstruct,
    zero_fill_reconstruct,
)
from smsrecon.errors import (
    ArgumentError,
    DegenerateInputError,
    SolverError,
    UnsupportedMaskError,
)
from smsrecon.kspace import fft2c, rss_combine
from smsrecon.metrics import nmse
from smsrecon.operators import CaipiScheme, SamplingMask, measure, target_aligned_collapse
from smsrecon.predictors import identity_kernel
from smsrecon.simulation import standard_scheme, uniform_mask


def synthetic_sense_setup(seed, b=2, coils=3, rows=8, cols=16):
    """Random slice images under random unit-RSS coil maps."""
    rng = np.random.default_rng(seed)
    imgs = rng.standard_normal((b, rows, cols)) + 1j * rng.standard_normal((b, rows, cols))
    sens = rng.standard_normal((b, coils, rows, cols)) + 1j * rng.standard_normal(
        (b, coils, rows, cols)
    )
    sens /= np.sqrt(np.sum(np.abs(sens) ** 2, axis=1, keepdims=True))
    stack = np.stack([fft2c(sens[s] * imgs[s][None]) for s in range(b)])
    scheme = standard_scheme(b, rows, cols)
    return stack, sens, scheme


class TestZeroFill:
    def test_full_sampling_is_aligned_collapse(self, small_case):
        case = small_case
        full = uniform_mask(32, 36, 1, 0)
        y = measure(case.stack, case.scheme, full, 0.0)
        for s in range(3):
            out = zero_fill_reconstruct(y, case.scheme, s)
            expected = target_aligned_collapse(case.stack, case.scheme, s)
            assert np.max(np.abs(out - expected)) <= 1e-11

    def test_single_slice_full_mask_exact(self):
        stack, _, scheme = synthetic_sense_setup(0, b=1)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        assert np.array_equal(zero_fill_reconstruct(y, scheme, 0), stack[0])


class TestSliceGrappaReconstruct:
    def test_identity_kernels_reproduce_alignment(self, small_case):
        from dataclasses import replace

        case = small_case
        kernels = [replace(identity_kernel(2), target_slice=s) for s in range(3)]
        out = slice_grappa_reconstruct(case.measurement, case.scheme, kernels)
        assert out.shape == (3, 2, 32, 36)
        for s in range(3):
            expected = zero_fill_reconstruct(case.measurement, case.scheme, s)
            assert np.max(np.abs(out[s] - expected)) <= 1e-12

    def test_calibrated_beats_zero_fill(self, standard_case, standard_kernels):
        case = standard_case
        out = slice_grappa_reconstruct(case.measurement, case.scheme, standard_kernels)
        for s in range(3):
            err = nmse(rss_combine(out[s]), rss_combine(case.stack[s]))
            zf = nmse(
                rss_combine(zero_fill_reconstruct(case.measurement, case.scheme, s)),
                rss_combine(case.stack[s]),
            )
            assert err < zf


class TestEstimateSensitivities:
    def test_single_coil_unit_magnitude(self, small_case):
        case = small_case
        acs = case.stack[:, :1]
        maps = estimate_sensitivities(acs, (case.mask.acs_lo, case.mask.acs_hi))
        mags = np.abs(maps[:, 0])
        nz = mags > 0
        assert np.allclose(mags[nz], 1.0, atol=1e-12)

    def test_rss_of_maps_is_binary(self, small_case):
        case = small_case
        maps = estimate_sensitivities(case.stack, (case.mask.acs_lo, case.mask.acs_hi))
        rss = np.sqrt(np.sum(np.abs(maps) ** 2, axis=1))
        on = rss > 0
        assert np.allclose(rss[on], 1.0, atol=1e-12)

    def test_matches_true_maps_in_object(self, standard_case):
        case = standard_case
        est = estimate_sensitivities(case.stack, (case.mask.acs_lo, case.mask.acs_hi))
        for s in range(3):
            strong = rss_combine(case.stack[s]) > 0.3 * rss_combine(case.stack[s]).max()
            ratio = np.abs(est[s][:, strong]) / np.maximum(np.abs(case.sens[s][:, strong]), 1e-12)
            good = np.abs(case.sens[s][:, strong]) > SENS_THRESHOLD
            assert np.median(np.abs(ratio[good] - 1.0)) <= 0.05

    def test_empty_band_rejected(self, small_case):
        with pytest.raises(DegenerateInputError):
            estimate_sensitivities(small_case.stack, (5, 5))


class TestSense:
    def test_single_slice_full_sampling_exact(self):
        stack, sens, scheme = synthetic_sense_setup(1, b=1)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        out = sense_reconstruct(y, scheme, mask, sens)
        assert nmse(out[0], stack[0]) <= 1e-16

    def test_mb2_full_sampling_exact(self):
        stack, sens, scheme = synthetic_sense_setup(2, b=2, coils=3)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        out = sense_reconstruct(y, scheme, mask, sens)
        for s in range(2):
            assert nmse(out[s], stack[s]) <= 1e-16

    def test_mb2_r2_exact_with_enough_coils(self):
        stack, sens, scheme = synthetic_sense_setup(3, b=2, coils=5)
        mask = uniform_mask(8, 16, 2, 0)
        y = measure(stack, scheme, mask, 0.0)
        out = sense_reconstruct(y, scheme, mask, sens)
        for s in range(2):
            assert nmse(out[s], stack[s]) <= 1e-14

    def test_acs_lines_do_not_enter_lattice_solve(self):
        stack, sens, scheme = synthetic_sense_setup(4, b=2, coils=5)
        bare = uniform_mask(8, 16, 2, 0)
        with_acs = uniform_mask(8, 16, 2, 4)
        out_bare = sense_reconstruct(measure(stack, scheme, bare, 0.0), scheme, bare, sens)
        out_acs = sense_reconstruct(measure(stack, scheme, with_acs, 0.0), scheme, with_acs, sens)
        assert np.max(np.abs(out_bare - out_acs)) <= 1e-12

    def test_phantom_beats_zero_fill(self, standard_case):
        case = standard_case
        sens = estimate_sensitivities(case.stack, (case.mask.acs_lo, case.mask.acs_hi))
        out = sense_reconstruct(case.measurement, case.scheme, case.mask, sens, tikhonov=1e-6)
        for s in range(3):
            err = nmse(rss_combine(out[s]), rss_combine(case.stack[s]))
            zf = nmse(
                rss_combine(zero_fill_reconstruct(case.measurement, case.scheme, s)),
                rss_combine(case.stack[s]),
            )
            assert err < zf

    def test_tikhonov_shrinks_solution(self):
        stack, sens, scheme = synthetic_sense_setup(5, b=2, coils=3)
        mask = uniform_mask(8, 16, 2, 0)
        y = measure(stack, scheme, mask, 0.0)
        small = sense_reconstruct(y, scheme, mask, sens, tikhonov=1e-9)
        heavy = sense_reconstruct(y, scheme, mask, sens, tikhonov=1e3)
        assert np.linalg.norm(heavy) < np.linalg.norm(small)

    def test_zero_maps_singular(self):
        stack, sens, scheme = synthetic_sense_setup(6, b=2, coils=3)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        with pytest.raises(SolverError):
            sense_reconstruct(y, scheme, mask, np.zeros_like(sens))

    def test_negative_tikhonov_rejected(self):
        stack, sens, scheme = synthetic_sense_setup(7, b=1)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        with pytest.raises(ArgumentError):
            sense_reconstruct(y, scheme, mask, sens, tikhonov=-1.0)

    def test_irregular_mask_rejected(self):
        stack, sens, scheme = synthetic_sense_setup(8, b=1)
        kept = np.ones((8, 16))
        kept[:, 3] = 0.0
        kept[:, 11] = 0.0
        mask = SamplingMask(kept=kept, acs_lo=6, acs_hi=10)
        y = stack[0] * kept[None]
        with pytest.raises(UnsupportedMaskError):
            sense_reconstruct(y, scheme, mask, sens)

    def test_non_integer_shift_rejected(self):
        stack, sens, _ = synthetic_sense_setup(9, b=2, coils=3)
        scheme = CaipiScheme(shifts=(0.0, 1.0 / 3.0), rows=8, cols=16)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        with pytest.raises(UnsupportedMaskError):
            sense_reconstruct(y, scheme, mask, sens)

    def test_wrong_sens_shape_rejected(self):
        stack, sens, scheme = synthetic_sense_setup(10, b=2, coils=3)
        mask = uniform_mask(8, 16, 1, 0)
        y = measure(stack, scheme, mask, 0.0)
        with pytest.raises(ArgumentError):
            sense_reconstruct(y, scheme, mask, sens[:1])
