"""White-noise ensemble tests: exact enumeration identities, the known
optimal configurations, and the minimax optimizer."""

import numpy as np
import pytest

from qrandcert.quantum import DensityMatrix
from qrandcert.tomographic import DecompositionProblem, guessing_probability_multi
from qrandcert.white_noise import (
    MeasurementEnsemble,
    SignString,
    check_uncertainty_saturation,
    guessing_white_noise,
    hemisphere_limit_estimate,
    max_bloch_norm,
    optimize_gN,
)

ROOT2 = float(np.sqrt(2.0))


def random_ensemble(rng, n):
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    w = rng.dirichlet(np.ones(n))
    return MeasurementEnsemble(dirs, w)


def planar_four_setting(q):
    plane = [
        [np.sin(2 * np.pi * k / 3), np.cos(2 * np.pi * k / 3), 0.0]
        for k in range(3)
    ]
    dirs = [[0.0, 0.0, 1.0], plane[0], plane[1],
            [-plane[2][0], -plane[2][1], 0.0]]
    return MeasurementEnsemble(dirs, [1 - 3 * q, q, q, q])


class TestEnumeration:
    def test_single_direction_is_deterministic(self):
        v, s = max_bloch_norm(MeasurementEnsemble([[0.0, 0.0, 1.0]]))
        assert v == pytest.approx(1.0, abs=1e-15)
        assert s.values == (-1,)

    def test_orthogonal_pair(self):
        v, _ = max_bloch_norm(MeasurementEnsemble([[0, 0, 1], [1, 0, 0]]))
        assert v == pytest.approx(1 / ROOT2, abs=1e-12)

    def test_antiparallel_pair_collapses(self):
        v, s = max_bloch_norm(MeasurementEnsemble([[0, 0, 1], [0, 0, -1]]))
        assert v == pytest.approx(1.0, abs=1e-15)
        # lexicographically smallest maximizer: flip the first sign
        assert s.values == (-1, 1)

    def test_orthogonal_triple(self):
        v, _ = max_bloch_norm(MeasurementEnsemble(np.eye(3)))
        assert v == pytest.approx(1 / np.sqrt(3), abs=1e-12)

    def test_four_setting_split_configuration(self):
        v, _ = max_bloch_norm(planar_four_setting(3.0 / 13.0))
        assert v == pytest.approx(np.sqrt(4.0 / 13.0), abs=1e-12)

    def test_enumeration_cap(self):
        dirs = np.tile([0.0, 0.0, 1.0], (25, 1))
        with pytest.raises(ValueError, match="cap"):
            max_bloch_norm(MeasurementEnsemble(dirs))

    def test_sign_string_validation(self):
        with pytest.raises(ValueError):
            SignString((1, 0, -1))

    def test_ensemble_validation(self):
        with pytest.raises(ValueError, match="unit"):
            MeasurementEnsemble([[0, 0, 2]])
        with pytest.raises(ValueError, match="simplex"):
            MeasurementEnsemble([[0, 0, 1], [1, 0, 0]], [0.7, 0.7])


class TestIdentities:
    def test_squared_norms_sum_to_weight_power(self):
        # cross terms cancel over the full sign-string sum, leaving
        # sum_C |n_C|^2 = 2^N sum_k q_k^2
        rng = np.random.default_rng(21)
        import itertools
        for _ in range(50):
            n = int(rng.integers(1, 7))
            ens = random_ensemble(rng, n)
            total = 0.0
            for signs in itertools.product((-1.0, 1.0), repeat=n):
                vec = (np.array(signs) * ens.weights) @ ens.directions
                total += float(vec @ vec)
            expect = 2.0 ** n * float(ens.weights @ ens.weights)
            assert total == pytest.approx(expect, abs=1e-9)

    def test_max_norm_dominates_weight_power(self):
        rng = np.random.default_rng(22)
        for _ in range(1000):
            ens = random_ensemble(rng, int(rng.integers(1, 7)))
            v, _ = max_bloch_norm(ens)
            assert v ** 2 >= float(ens.weights @ ens.weights) - 1e-12

    def test_agrees_with_decomposition_sdp(self):
        # independent path: exact enumeration vs the tomographic SDP
        rng = np.random.default_rng(23)
        rho = DensityMatrix.maximally_mixed(2)
        for _ in range(5):
            ens = random_ensemble(rng, int(rng.integers(2, 5)))
            analytic = guessing_white_noise(ens)
            sdp = guessing_probability_multi(
                DecompositionProblem(rho, ens.as_settings()))
            assert sdp == pytest.approx(analytic, abs=1e-6)


class TestOptimizer:
    def test_two_settings(self):
        g, ens = optimize_gN(2, restarts=8, seed=1)
        assert g == pytest.approx(1 / ROOT2, abs=1e-6)
        assert abs(float(ens.directions[0] @ ens.directions[1])) < 1e-4

    def test_three_settings(self):
        g, _ = optimize_gN(3, restarts=8, seed=1)
        assert g == pytest.approx(1 / np.sqrt(3), abs=1e-6)

    def test_four_settings_needs_uneven_weights(self):
        g, ens = optimize_gN(4, restarts=12, seed=1)
        assert g == pytest.approx(np.sqrt(4.0 / 13.0), abs=1e-3)
        assert np.ptp(ens.weights) > 1e-3

    def test_never_beats_weight_power_bound(self):
        g, ens = optimize_gN(3, restarts=4, seed=2)
        assert g ** 2 >= float(ens.weights @ ens.weights) - 1e-9

    def test_setting_count_validation(self):
        with pytest.raises(ValueError):
            optimize_gN(1)
        with pytest.raises(ValueError):
            optimize_gN(13)


class TestHemisphere:
    def test_uniform_spread_upper_bounds_the_optimum(self):
        assert hemisphere_limit_estimate(6) >= 0.527 - 1e-6

    def test_large_n_bracketing(self):
        v = hemisphere_limit_estimate(200)
        assert 0.5 < v < 0.527 + 0.05

    def test_trend_toward_half(self):
        seq = [hemisphere_limit_estimate(n) for n in (50, 100, 200)]
        assert seq[0] >= seq[1] - 0.01 >= seq[2] - 0.02
        assert seq[-1] < 0.51

    def test_cap(self):
        with pytest.raises(ValueError):
            hemisphere_limit_estimate(2001)


class TestUncertaintySaturation:
    def test_report(self):
        r = check_uncertainty_saturation()
        assert r.g2 == pytest.approx(1 / ROOT2, abs=1e-12)
        assert r.sum_bits == pytest.approx(
            -2 * np.log2((1 + 1 / ROOT2) / 2), abs=1e-12)
        assert r.sum_bits == pytest.approx(0.4570, abs=1e-3)
        assert r.saturated
        axis = r.optimal_bloch_directions[0]
        assert np.allclose(np.abs(axis), [1 / ROOT2, 0.0, 1 / ROOT2], atol=1e-12)
        assert np.allclose(r.optimal_bloch_directions[1], -axis)
        for bits in r.per_setting_bits:
            assert bits == pytest.approx(-np.log2((1 + 1 / ROOT2) / 2), abs=1e-12)
