"""Path-loss fits, standing-wave search and the K-factor estimator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thzchan.channel import (
    FREE_SPACE,
    LosParams,
    RicianParams,
    StandingWaveParams,
    h_los,
    h_rician,
    integrated_pl_db,
    path_loss_los_db,
)
from thzchan.errors import DataError, DomainError, IdentifiabilityError
from thzchan.estimation import (
    Dataset,
    MeasurementRecord,
    default_period_grid,
    estimate_k_factor,
    fit_alpha_beta,
    fit_standing_wave,
    fspl_reference,
    k_factor_from_residuals,
    rmse_db,
)
from thzchan.sounder import preset_large_scale, preset_small_scale
from thzchan.wideband import BandSpec

LAMBDA_208 = 1.44131e-3
LOW, HIGH = BandSpec(178e9, 208e9), BandSpec(208e9, 238e9)


def two_carrier(p, sigma=0.0, rng=None, carriers=(193e9, 223e9)):
    d = preset_large_scale().distances()
    out = []
    for fc, band in zip(carriers, (LOW, HIGH)):
        pl = np.asarray(path_loss_los_db(fc, d, p))
        if sigma:
            pl = pl + sigma * rng.standard_normal(d.size)
        out.append(Dataset.from_arrays(d, pl, band, carrier=fc))
    return out


def sw_dataset(sw, los=FREE_SPACE, sigma=0.0, rng=None):
    d = preset_small_scale().distances()
    pl = np.asarray(integrated_pl_db(d, 208e9, los, sw))
    if sigma:
        pl = pl + sigma * rng.standard_normal(d.size)
    return Dataset.from_arrays(d, pl, BandSpec.double_sideband(208e9, 15e9))


def ssr(datasets, p, intercept=0.0):
    return sum(float(np.sum((np.asarray(path_loss_los_db(ds.carrier, ds.distances, p)) + intercept
                             - ds.path_loss) ** 2)) for ds in datasets)


class TestRmse:
    def test_examples(self):
        assert rmse_db([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
        assert rmse_db(np.arange(5.0) + 3.0, np.arange(5.0)) == pytest.approx(3.0, abs=1e-15)
        assert rmse_db([3.0, -3.0], [0.0, 0.0]) == 3.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            rmse_db([1.0, 2.0], [1.0])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=40),
           st.randoms(use_true_random=False))
    def test_reorder_invariance(self, pairs, rnd):
        shuffled = pairs[:]
        rnd.shuffle(shuffled)
        a = rmse_db([m for m, _ in pairs], [x for _, x in pairs])
        b = rmse_db([m for m, _ in shuffled], [x for _, x in shuffled])
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)

    def test_fit_result_rmse_invariant(self):
        fit = fit_alpha_beta(two_carrier(LosParams(1.1, 1.9), 1.0, np.random.default_rng(3)))
        assert fit.rmse_db == pytest.approx(math.sqrt(np.mean(fit.residuals_db**2)), abs=1e-12)


class TestDataset:
    def test_invariants(self):
        band = BandSpec(1e9, 2e9)
        with pytest.raises(DataError):
            Dataset((), 1.5e9)
        recs = (MeasurementRecord(0.2, band, 1.0), MeasurementRecord(0.1, band, 1.0))
        with pytest.raises(DataError):
            Dataset(recs, 1.5e9)
        with pytest.raises(DataError):
            Dataset((MeasurementRecord(0.1, band, 1.0), MeasurementRecord(0.2, BandSpec(1e9, 3e9), 1.0)), 2e9)
        with pytest.raises(DataError):
            MeasurementRecord(0.1, band, math.nan)
        ds = Dataset.from_arrays([0.3, 0.1, 0.2], [3.0, 1.0, 2.0], band)
        assert list(ds.distances) == [0.1, 0.2, 0.3]
        assert list(ds.path_loss) == [1.0, 2.0, 3.0]
        assert ds.carrier == band.center


class TestAlphaBeta:
    def test_noiseless_joint_recovery(self):
        fit = fit_alpha_beta(two_carrier(LosParams(1.0, 2.0)))
        assert fit.los.alpha == pytest.approx(1.0, abs=1e-9)
        assert fit.los.beta == pytest.approx(2.0, abs=1e-9)
        assert fit.rmse_db < 1e-9

    def test_beta_only_mode(self):
        d = preset_large_scale().distances()
        ds = Dataset.from_arrays(d, path_loss_los_db(208e9, d, FREE_SPACE), BandSpec(193e9, 223e9))
        fit = fit_alpha_beta(ds, alpha=1.0)
        assert fit.los.beta == pytest.approx(1.0, abs=1e-9)
        assert fit.calibration_db == pytest.approx(0.0, abs=1e-8)

    def test_single_carrier_joint_refused(self):
        d = preset_large_scale().distances()
        ds = Dataset.from_arrays(d, path_loss_los_db(208e9, d, FREE_SPACE), BandSpec(193e9, 223e9))
        with pytest.raises(IdentifiabilityError) as info:
            fit_alpha_beta(ds)
        assert info.value.parameter == "alpha"

    def test_single_distance_refused(self):
        band = BandSpec(193e9, 223e9)
        ds = Dataset((MeasurementRecord(0.3, band, 60.0), MeasurementRecord(0.3, band, 61.0)), band.center)
        with pytest.raises(IdentifiabilityError) as info:
            fit_alpha_beta(ds, alpha=1.0)
        assert info.value.parameter == "beta"

    def test_noise_monte_carlo(self):
        truth = LosParams(1.0, 2.0)
        hits = 0
        for seed in range(100):
            fit = fit_alpha_beta(two_carrier(truth, 1.0, np.random.default_rng(seed)))
            hits += abs(fit.los.alpha - 1.0) <= 0.05 and abs(fit.los.beta - 2.0) <= 0.05
        assert hits >= 95

    @pytest.mark.parametrize("seed", range(5))
    def test_first_order_optimality(self, seed):
        data = two_carrier(LosParams(1.3, 1.7), 1.0, np.random.default_rng(seed))
        fit = fit_alpha_beta(data)
        base = ssr(data, fit.los)
        for da, db in ((1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)):
            assert ssr(data, LosParams(fit.los.alpha + da, fit.los.beta + db)) >= base

        fixed = fit_alpha_beta(data[0], alpha=1.0)
        base = ssr(data[:1], fixed.los, fixed.calibration_db)
        for db, dc in ((1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)):
            p = LosParams(1.0, fixed.los.beta + db)
            assert ssr(data[:1], p, fixed.calibration_db + dc) >= base

    def test_distance_unit_reparameterisation(self):
        rng = np.random.default_rng(11)
        d = preset_large_scale().distances()
        pl = np.asarray(path_loss_los_db(208e9, d, LosParams(1.0, 1.6))) + rng.standard_normal(d.size)
        band = BandSpec(193e9, 223e9)
        metres = fit_alpha_beta(Dataset.from_arrays(d, pl, band), alpha=1.0)
        millimetres = fit_alpha_beta(Dataset.from_arrays(d * 1000.0, pl, band), alpha=1.0)
        assert millimetres.rmse_db == pytest.approx(metres.rmse_db, rel=1e-9)
        assert millimetres.los.beta == pytest.approx(metres.los.beta, rel=1e-9)
        pred_m = metres.predict(d, 208e9)
        pred_mm = millimetres.predict(d * 1000.0, 208e9)
        assert np.allclose(pred_mm, pred_m, rtol=0, atol=1e-9)

    def test_fspl_reference(self):
        d = preset_large_scale().distances()
        ds = Dataset.from_arrays(d, path_loss_los_db(208e9, d, FREE_SPACE) + 2.0, BandSpec(193e9, 223e9))
        ref = fspl_reference(ds)
        assert ref.rmse_db == pytest.approx(2.0, abs=1e-12)
        assert np.allclose(ref.residuals_db, -2.0)


class TestStandingWave:
    def test_noiseless_recovery(self):
        truth = StandingWaveParams(3.0, 0.7, 0.0, LAMBDA_208)
        fit = fit_standing_wave(sw_dataset(truth), FREE_SPACE, 208e9)
        sw = fit.sw
        grid_step = float(np.diff(default_period_grid(208e9))[0])
        assert sw.amplitude_db == pytest.approx(3.0, rel=0.01)
        assert sw.phase_rad == pytest.approx(0.7, rel=0.01)
        assert abs(sw.calibration_db) <= 0.03
        assert abs(sw.period_m - LAMBDA_208) <= grid_step
        assert fit.rmse_db < 1e-6

    def test_no_modulation(self):
        fit = fit_standing_wave(sw_dataset(StandingWaveParams(0.0, 0.0, 0.0, LAMBDA_208)), FREE_SPACE)
        assert fit.sw.amplitude_db < 1e-9
        assert abs(fit.sw.calibration_db) < 1e-9

    def test_joint_beta(self):
        truth = StandingWaveParams(1.5, 2.0, 0.7, LAMBDA_208 / 2)
        ds = sw_dataset(truth, los=LosParams(1.0, 1.4))
        fit = fit_standing_wave(ds, FREE_SPACE, 208e9, period_grid=default_period_grid(208e9, 0.3, 0.8),
                                fit_beta=True)
        assert fit.los.beta == pytest.approx(1.4, abs=1e-4)
        assert fit.sw.amplitude_db == pytest.approx(1.5, rel=1e-3)
        assert fit.rmse_db < 1e-6

    def test_noise_monte_carlo(self):
        truth = StandingWaveParams(3.0, 0.7, 0.0, LAMBDA_208)
        hits = 0
        for seed in range(100):
            ds = sw_dataset(truth, sigma=0.3, rng=np.random.default_rng(seed))
            hits += abs(fit_standing_wave(ds, FREE_SPACE).sw.amplitude_db - 3.0) <= 0.3
        assert hits >= 95

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.0, 4.0), st.floats(0.0, 2 * math.pi), st.floats(-5.0, 5.0),
           st.floats(0.3, 1.2), st.integers(0, 2**32 - 1))
    def test_never_worse_than_los(self, amp, phase, cal, period_factor, seed):
        truth = StandingWaveParams(amp, phase, cal, LAMBDA_208 * period_factor)
        ds = sw_dataset(truth, sigma=0.5, rng=np.random.default_rng(seed))
        los_only = fit_alpha_beta(ds, alpha=1.0)
        fixed_beta = rmse_db(np.asarray(path_loss_los_db(208e9, ds.distances, FREE_SPACE)), ds)
        sw = fit_standing_wave(ds, FREE_SPACE)
        assert sw.rmse_db <= fixed_beta + 1e-12
        sw_beta = fit_standing_wave(ds, FREE_SPACE, fit_beta=True)
        assert sw_beta.rmse_db <= los_only.rmse_db + 1e-12

    def test_grid_tie_goes_to_smallest_period(self):
        ds = sw_dataset(StandingWaveParams(0.0, 0.0, 1.0, LAMBDA_208))
        grid = default_period_grid(208e9)
        fit = fit_standing_wave(ds, FREE_SPACE, period_grid=grid[::-1], refine=False)
        assert fit.sw.period_m == grid[0]

    def test_errors(self):
        ds = sw_dataset(StandingWaveParams(1.0, 0.0, 0.0, LAMBDA_208))
        with pytest.raises(DomainError):
            fit_standing_wave(ds, FREE_SPACE, period_grid=[])
        with pytest.raises(DomainError):
            fit_standing_wave(ds, FREE_SPACE, period_grid=[-1e-3, 1e-3])
        with pytest.raises(DataError):
            fit_standing_wave(ds, FREE_SPACE, period_grid=[2e-3, 3e-3])


class TestKFactor:
    def test_constant_is_pure_los(self):
        assert estimate_k_factor(np.full(100, 3.7)).is_pure_los

    def test_rayleigh(self):
        # K_hat ~ sqrt(1 - gamma_hat) near K = 0, so a 4 sigma dip of gamma_hat
        # (sigma ~ 0.0065 at 1e5 samples) maps to K_hat ~ 0.16.
        for seed in range(20):
            p = np.random.default_rng(seed).exponential(1.0, 100_000)
            assert estimate_k_factor(p).k_factor <= 0.2

    def test_k5(self):
        rng = np.random.default_rng(2025)
        n = 100_000
        w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        hl = h_los(208e9, 0.45) / abs(h_los(208e9, 0.45))
        p = np.abs(h_rician(RicianParams(5.0), hl, w)) ** 2
        assert 4.5 <= estimate_k_factor(p).k_factor <= 5.5

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2.0, 0.5, 4.0, 1024.0, 2.0**-20]))
    def test_scale_invariance(self, seed, scale):
        p = np.random.default_rng(seed).gamma(3.0, 1.0, 200)
        assert estimate_k_factor(p * scale).k_factor == estimate_k_factor(p).k_factor

    def test_errors(self):
        with pytest.raises(DataError):
            estimate_k_factor(np.ones(29))
        with pytest.raises(DataError):
            estimate_k_factor(np.r_[np.ones(40), 0.0])

    def test_residual_diagnostic(self):
        assert k_factor_from_residuals(np.zeros(50)).is_pure_los
