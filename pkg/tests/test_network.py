"""Model construction, threshold activation, forward pass and loss."""

import math

import numpy as np
import pytest

from wavelearn.errors import ConfigError, InvalidDepthError, InvalidSignalError
from wavelearn.network import (
    SharingMode,
    ThresholdPair,
    build_model,
    ht_activation,
    ht_gate_derivatives,
    loss,
    model_forward,
    parameter_count,
)
from wavelearn.wavelet import (
    CoefficientPyramid,
    DB4_SCALING,
    db4_filterbank,
    fdwt,
    ifdwt,
)

S = math.sqrt(0.5)

# sigmoid(-15) + sigmoid(5), evaluated directly from the defining formula
HT_ONE_HALF_HALF = 0.9933074549779422


class TestHtActivation:
    def test_zero_thresholds_exact_identity(self):
        grid = np.linspace(-50.0, 50.0, 10_000)
        out = ht_activation(grid, ThresholdPair(0.0, 0.0))
        assert np.array_equal(out, grid)

    def test_zero_input_maps_to_zero(self):
        for pair in (ThresholdPair(0.0, 0.0), ThresholdPair(0.5, 0.2),
                     ThresholdPair(-0.1, 3.0)):
            assert ht_activation(0.0, pair) == 0.0

    def test_scalar_value_against_formula(self):
        got = ht_activation(1.0, ThresholdPair(0.5, 0.5))
        assert abs(got - HT_ONE_HALF_HALF) <= 1e-6

    def test_odd_symmetry_with_swapped_thresholds(self):
        rng = np.random.default_rng(4)
        x = rng.normal(scale=2.0, size=500)
        for bp, bm in ((0.3, 0.7), (1.5, 0.0), (0.0, 0.4), (2.0, 2.0)):
            left = ht_activation(-x, ThresholdPair(bp, bm))
            right = -ht_activation(x, ThresholdPair(bm, bp))
            np.testing.assert_allclose(left, right, rtol=0, atol=1e-12)

    def test_huge_thresholds_annihilate(self):
        x = np.linspace(-5, 5, 101)
        out = ht_activation(x, ThresholdPair(1e6, 1e6))
        assert np.array_equal(out, np.zeros_like(x))

    def test_differentiable_everywhere(self):
        # analytic derivative matches a central difference at every probe
        pair = ThresholdPair(0.6, 0.25)
        xs = np.array([-3.0, -0.6, -0.25, 0.0, 0.25, 0.6, 1e-9, 3.0])
        dy_dx, _, _ = ht_gate_derivatives(xs, pair)
        eps = 1e-6
        fd = (ht_activation(xs + eps, pair) - ht_activation(xs - eps, pair)) / (2 * eps)
        assert np.all(np.isfinite(dy_dx))
        np.testing.assert_allclose(dy_dx, fd, rtol=0, atol=1e-8)


class TestBuildModel:
    def test_initial_forward_reproduces_fixed_transform(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=1024)
        fresh = build_model(10, 8, SharingMode.PER_LEVEL_CQF_HT)
        fixed = build_model(10, 8, SharingMode.DB4_FIXED)
        rec_a = model_forward(x, fresh)
        rec_b = model_forward(x, fixed)
        assert np.array_equal(rec_a.reconstruction, rec_b.reconstruction)
        for da, db in zip(rec_a.pyramid.details, rec_b.pyramid.details):
            assert np.array_equal(da, db)
        assert np.array_equal(rec_a.pyramid.approx, rec_b.pyramid.approx)

    def test_same_seed_identical_model(self):
        m1 = build_model(5, 8, SharingMode.FREE_HT, seed=9)
        m2 = build_model(5, 8, SharingMode.FREE_HT, seed=9)
        assert m1.params.keys() == m2.params.keys()
        for key in m1.params:
            assert np.array_equal(m1.params[key], m2.params[key])

    def test_two_tap_model_is_haar(self):
        m = build_model(3, 2, SharingMode.PER_LEVEL_CQF)
        np.testing.assert_allclose(m.params["h.0"], [S, S], rtol=0, atol=0)
        x = np.random.default_rng(0).normal(size=16)
        rec = model_forward(x, m)
        np.testing.assert_allclose(rec.reconstruction, x, rtol=0, atol=1e-10)

    def test_invalid_dimensions_rejected(self):
        with pytest.raises(ConfigError):
            build_model(0, 8, SharingMode.PER_LEVEL_CQF_HT)
        with pytest.raises(ConfigError):
            build_model(3, 7, SharingMode.PER_LEVEL_CQF_HT)

    def test_mode_names_roundtrip(self):
        for mode in SharingMode:
            assert SharingMode.from_name(mode.value) is mode
        with pytest.raises(ConfigError):
            SharingMode.from_name("bogus")


class TestParameterCount:
    @pytest.mark.parametrize("mode,expected", [
        (SharingMode.DB4_FIXED, 0),
        (SharingMode.DB4_FIXED_HT, 2 * 17),
        (SharingMode.SHARED_CQF, 8),
        (SharingMode.SHARED_CQF_HT, 8 + 2 * 17),
        (SharingMode.PER_LEVEL_CQF, 8 * 17),
        (SharingMode.PER_LEVEL_CQF_HT, (8 + 2) * 17),
        (SharingMode.PER_LEVEL_TWO_KERNEL_HT, (2 * 8 + 2) * 17),
        (SharingMode.FREE_HT, (4 * 8 + 2) * 17),
    ])
    def test_count_formula(self, mode, expected):
        model = build_model(17, 8, mode)
        assert parameter_count(model) == expected

    def test_reference_configuration(self):
        # kernel size 8 with 17 levels: ten trainables per level
        model = build_model(17, 8, SharingMode.PER_LEVEL_CQF_HT)
        assert parameter_count(model) == 170

    def test_flat_vector_roundtrip(self):
        for mode in SharingMode:
            model = build_model(4, 8, mode, seed=1)
            vec = model.get_parameters()
            assert vec.size == parameter_count(model)
            bumped = vec + 0.25
            model.set_parameters(bumped)
            assert np.array_equal(model.get_parameters(), bumped)


class TestModelForward:
    def test_fixed_mode_reduces_to_plain_transform(self):
        rng = np.random.default_rng(2)
        bank = db4_filterbank()
        model = build_model(5, 8, SharingMode.DB4_FIXED)
        for n in (64, 625, 1024):
            x = rng.normal(size=n)
            rec = model_forward(x, model)
            pyramid = fdwt(x, bank, 5)
            assert np.abs(rec.reconstruction - x).max() <= 1e-8
            for da, db in zip(rec.pyramid.details, pyramid.details):
                np.testing.assert_allclose(da, db, rtol=0, atol=1e-12)
            np.testing.assert_allclose(rec.pyramid.approx, pyramid.approx,
                                       rtol=0, atol=1e-12)
            assert rec.reconstruction.size == rec.input_length == n

    def test_saturated_thresholds_keep_only_approximation(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=256)
        model = build_model(4, 8, SharingMode.PER_LEVEL_CQF_HT)
        model.params["b_plus"][:] = 1e6
        model.params["b_minus"][:] = 1e6
        rec = model_forward(x, model)
        for d in rec.pyramid.details:
            assert np.array_equal(d, np.zeros_like(d))
        expected = ifdwt(
            CoefficientPyramid(
                details=[np.zeros_like(d) for d in rec.pyramid.details],
                approx=rec.pyramid.approx,
                level_lengths=rec.pyramid.level_lengths,
            ),
            db4_filterbank(),
        )
        np.testing.assert_allclose(rec.reconstruction, expected, rtol=0, atol=1e-12)

    def test_constraint_maintained_after_any_assignment(self):
        rng = np.random.default_rng(8)
        for mode in (SharingMode.SHARED_CQF_HT, SharingMode.PER_LEVEL_CQF_HT):
            model = build_model(4, 8, mode)
            model.set_parameters(rng.normal(size=model.parameter_count()))
            for level in range(model.levels):
                bank = model.bank_for_level(level)
                n = np.arange(8)
                assert np.array_equal(bank.g, (-1.0) ** n * bank.h[::-1])
                assert np.array_equal(bank.h_bar, bank.h[::-1])
                assert np.array_equal(bank.g_bar, (-1.0) ** (n + 1) * bank.h)
        model = build_model(4, 8, SharingMode.PER_LEVEL_TWO_KERNEL_HT)
        model.set_parameters(rng.normal(size=model.parameter_count()))
        for level in range(model.levels):
            bank = model.bank_for_level(level)
            assert np.array_equal(bank.h_bar, bank.h[::-1])
            assert np.array_equal(bank.g_bar, bank.g[::-1])

    def test_depth_and_signal_validation(self):
        model = build_model(8, 8, SharingMode.DB4_FIXED)
        with pytest.raises(InvalidDepthError):
            model_forward(np.zeros(100), model)  # max depth 7
        with pytest.raises(InvalidSignalError):
            model_forward(np.zeros(1), model)


class TestLoss:
    def test_perfect_zero_case(self):
        x = np.zeros(8)
        model = build_model(2, 8, SharingMode.DB4_FIXED)
        rec = model_forward(x, model)
        assert loss(rec, x, 1.0) == (0.0, 0.0, 0.0)

    def test_mean_absolute_residual(self):
        rec = _record(details=[np.zeros(2)], approx=np.zeros(2),
                      lengths=[4], recon=np.zeros(4))
        total, recon, spars = loss(rec, np.ones(4), 0.0)
        assert recon == 1.0 and total == 1.0 and spars == 0.0

    def test_hand_computed_sparsity(self):
        signal = np.array([1.0, 2.0, 3.0, 4.0])
        rec = _record(details=[np.array([1.0, -1.0]), np.array([0.0])],
                      approx=np.array([2.0]), lengths=[4, 2], recon=signal.copy())
        total, recon, spars = loss(rec, signal, 1.0)
        assert recon == 0.0
        assert spars == pytest.approx(1.0, abs=0)
        assert total == pytest.approx(1.0, abs=0)

    def test_non_negativity(self):
        rng = np.random.default_rng(5)
        model = build_model(5, 8, SharingMode.PER_LEVEL_CQF_HT, seed=0)
        model.set_parameters(
            model.get_parameters() + rng.normal(0, 0.1, model.parameter_count()))
        for _ in range(10):
            x = rng.normal(size=128)
            total, recon, spars = loss(model_forward(x, model), x, 0.7)
            assert total >= 0 and recon >= 0 and spars >= 0
            assert total == pytest.approx(recon + 0.7 * spars, rel=1e-15)

    def test_length_mismatch_rejected(self):
        model = build_model(2, 8, SharingMode.DB4_FIXED)
        rec = model_forward(np.ones(16), model)
        with pytest.raises(InvalidSignalError):
            loss(rec, np.ones(17), 1.0)


def _record(details, approx, lengths, recon):
    from wavelearn.network import ForwardRecord

    return ForwardRecord(
        pyramid=CoefficientPyramid(details=details, approx=approx,
                                   level_lengths=lengths),
        reconstruction=recon,
        input_length=recon.size,
    )
