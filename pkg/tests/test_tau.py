"""Tests for the global-scale estimators."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hsuq.credible import excessive_bias_diagnostic
from hsuq.kernels import SparsityRate, log_marginal_lik
from hsuq.tau import TauMethod, fixed_tau, mmle, score_sum, simple_estimator

from _oracles import grid_mmle


class TestScoreSum:
    def test_negative_for_null_data(self):
        Y = np.zeros(50)
        for tau in [0.01, 0.1, 0.5, 1.0]:
            assert score_sum(Y, tau) < 0.0

    def test_matches_finite_difference(self):
        rng = np.random.default_rng(8)
        Y = rng.normal(0, 2, size=60)
        tau, h = 0.1, 1e-6
        fd = (log_marginal_lik(Y, tau + h) - log_marginal_lik(Y, tau - h)) / (2 * h)
        assert_allclose(score_sum(Y, tau), fd, rtol=1e-4)

    def test_additive_under_concatenation(self):
        Y = np.array([0.3, -1.2, 4.0])
        both = np.concatenate([Y, Y])
        assert_allclose(score_sum(both, 0.2), 2.0 * score_sum(Y, 0.2), rtol=1e-12)


class TestMmle:
    def test_null_data_hits_left_endpoint(self):
        est = mmle(np.zeros(100))
        assert est.tau == 1.0 / 100
        assert est.method is TauMethod.MMLE

    def test_agrees_with_grid_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            theta = np.zeros(200)
            theta[:10] = 4.0
            Y = theta + rng.standard_normal(200)
            est = mmle(Y)
            oracle_tau, grid = grid_mmle(Y, n_grid=2000)
            spacing = oracle_tau * (grid[1] / grid[0] - 1.0)
            assert abs(est.tau - oracle_tau) <= 2.0 * spacing
            # the refined optimum can only improve on the grid scan
            assert log_marginal_lik(Y, est.tau) >= log_marginal_lik(Y, oracle_tau) - 1e-9

    def test_large_signal_scenario_lands_in_band(self):
        rng = np.random.default_rng(1)
        theta = np.concatenate([np.full(5, 7.0), np.full(5, 1.5), np.zeros(190)])
        est = mmle(theta + rng.standard_normal(200))
        assert 0.03 <= est.tau <= 0.3

    def test_diagnostics_shape(self):
        est = mmle(np.random.default_rng(2).normal(0, 3, 80))
        d = est.diagnostics
        assert len(d["grid"]) == len(d["objective"]) == 200
        assert all(lo < hi for lo, hi in d["sign_changes"])
        assert 1.0 / 80 in d["candidates"] and 1.0 in d["candidates"]

    def test_rejects_tiny_samples(self):
        with pytest.raises(ValueError):
            mmle(np.array([1.0]))


class TestSimpleEstimator:
    def test_five_exceedances(self):
        n = 400
        Y = np.zeros(n)
        Y[:5] = 2.0 * math.sqrt(2 * math.log(n))
        est = simple_estimator(Y, c1=2.0, c2=1.0)
        assert est.tau == 5.0 / 800.0
        assert est.method is TauMethod.SIMPLE
        assert est.diagnostics["count"] == 5

    def test_null_data_clamps_to_floor(self):
        est = simple_estimator(np.zeros(400), c1=2.0)
        # one phantom exceedance over 800 falls below 1/400, so it clamps
        assert est.tau == 1.0 / 400

    def test_saturated_count(self):
        Y = np.full(400, 50.0)
        assert simple_estimator(Y, c1=2.0).tau == 0.5

    def test_threshold_constant_reachable(self):
        # c2 scales the threshold inside the square root
        n = 400
        Y = np.zeros(n)
        Y[:7] = 1.2 * math.sqrt(2 * math.log(n))
        loose = simple_estimator(Y, c1=2.0, c2=1.0)
        tight = simple_estimator(Y, c1=2.0, c2=2.0)
        assert loose.diagnostics["count"] == 7
        assert tight.diagnostics["count"] == 0

    def test_parameter_validation(self):
        Y = np.zeros(10)
        with pytest.raises(ValueError):
            simple_estimator(Y, c1=0.5)
        with pytest.raises(ValueError):
            simple_estimator(Y, c2=0.0)


class TestFixedTau:
    def test_wraps_value(self):
        est = fixed_tau(0.25)
        assert est.tau == 0.25
        assert est.method is TauMethod.FIXED


class TestSparseCalibration:
    """Monte Carlo checks that the MMLE tracks the sparsity level."""

    def test_mmle_scales_with_sparsity(self):
        n, p = 400, 20
        rate = SparsityRate(n=n, p=p)
        signal = 5.0 * math.sqrt(2 * math.log(n))
        hits_c1, hits_c5 = 0, 0
        reps = 50
        for rep in range(reps):
            rng = np.random.default_rng([97, rep])
            theta = np.zeros(n)
            theta[:p] = signal
            Y = theta + rng.standard_normal(n)
            est = mmle(Y)
            assert est.tau >= 1.0 / n
            if est.tau <= 5.0 * rate.tau_n:
                hits_c1 += 1
            report = excessive_bias_diagnostic(theta)
            p_eff = max(report.p_tilde, 1)
            tn_eff = SparsityRate(n=n, p=p_eff).tau_n
            if tn_eff / 10.0 <= est.tau <= 10.0 * tn_eff:
                hits_c5 += 1
        assert hits_c1 >= int(0.95 * reps)
        assert hits_c5 >= int(0.90 * reps)
