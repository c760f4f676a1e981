import json
import math
import os
import tempfile
from fractions import Fraction
from io import StringIO
from pathlib import Path
from unittest.mock import patch

import factory
import numpy as np
import pytest
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
from rest_framework import serializers

from Chsh.coin import (
    FaultSpec, camera_joint, coin_s, coin_trial_log, counter_correlations, counter_joint, simulate_coin,
    wing_two_signal,
)
from Chsh.core import (
    CorrelationSet, JointDistribution, Outcome, SettingPair, SettingsQuad, chsh, correlation,
)
from Chsh.exceptions import (
    ConstraintViolation, InvalidArgument, InvalidCorrelation, NegativeProbability, NonNormalized, NoViolation,
)
from Chsh.loopholes import (
    DeltaQuad, OverlapSpec, SampleSpec, equilibrate_sampling_exact, equilibrate_sampling_log_prob,
    hypergeometric_balanced_exact, hypergeometric_balanced_log_prob, mismatched_sample_s, overlap_exact,
    overlap_limit_scan, overlap_log_prob, s_delta, s_delta_range,
)
from Chsh.models import (
    HiddenVariable, LambdaDensity, ModelKind, QmPairModel, ideal_correlations, lhv_joint, optimal_qm_settings,
    qm_joint, reference_lhv_correlation, reference_lhv_model, tally_outcomes,
)
from Chsh.montecarlo import RunConfig, expected_selection_correlation, run, run_with_selection
from Chsh.noise import (
    ErasureRates, NoiseQuad, bsc_joint, bsc_marginal, bsc_matrix, critical_epsilon, joint_detection_prob,
    noisy_correlation, noise_scan, s_epsilon,
)
from Chsh.reports import decode_csv, decode_json, flatten, format_float
from Chsh.rng import shard_bounds, trial_uniforms
from Chsh.serializers import SettingsSerializer, SimulateSerializer

GOLDEN_DIR = Path(__file__).resolve().parent / 'golden'
ROOT_TWO = math.sqrt(2.0)
OPTIMAL_CORRELATIONS = CorrelationSet(ROOT_TWO / 2, -ROOT_TWO / 2, ROOT_TWO / 2, ROOT_TWO / 2)

probabilities = st.floats(min_value=0.0, max_value=1.0)
half_probabilities = st.floats(min_value=0.0, max_value=0.5)
angles = st.floats(min_value=0.0, max_value=2.0 * math.pi, exclude_max=True)
# either 0 or at least 0.001 in magnitude
correlation_values = st.floats(min_value=-1.0, max_value=1.0).map(lambda value: round(value, 3))
joints = st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=4, max_size=4).map(
    lambda weights: JointDistribution(*(weight / math.fsum(weights) for weight in weights))
)


class RunConfigFactory(factory.Factory):
    class Meta:
        model = RunConfig

    trials = 5000
    seed = factory.Faker('pyint', min_value=0, max_value=2 ** 32)
    settings = factory.LazyFunction(optimal_qm_settings)
    model = ModelKind.QM
    shards = 1


def run_command(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


def run_json(*args):
    return json.loads(run_command(*args))


class BaseTestCase(SimpleTestCase):
    def assertWithinSigma(self, estimate, expected, standard_error, sigmas=4.0):
        self.assertLess(abs(estimate - expected), sigmas * standard_error)

    def assertCommandFails(self, returncode, *args):
        with self.assertRaises(CommandError) as raised:
            run_command(*args)
        self.assertEqual(raised.exception.returncode, returncode)
        return raised.exception


class CoreTests(BaseTestCase):
    def test_correlation_of_perfectly_correlated_joint(self):
        """Test E = 1 for (1/2, 0, 0, 1/2)"""
        self.assertEqual(correlation(JointDistribution(0.5, 0.0, 0.0, 0.5)), 1.0)

    def test_correlation_of_anticorrelated_and_uniform_joints(self):
        self.assertEqual(correlation(JointDistribution(0.0, 0.5, 0.5, 0.0)), -1.0)
        self.assertEqual(correlation(JointDistribution(0.25, 0.25, 0.25, 0.25)), 0.0)

    def test_chsh_examples(self):
        """Test the CHSH statistic on the algebraic maximum and the QM optimum"""
        self.assertEqual(chsh(CorrelationSet(1.0, -1.0, 1.0, 1.0)), 4.0)
        self.assertAlmostEqual(chsh(OPTIMAL_CORRELATIONS), 2.0 * ROOT_TWO, places=12)
        self.assertEqual(chsh(CorrelationSet(0.0, 0.0, 0.0, 0.0)), 0.0)

    def test_negative_probability_rejected(self):
        with self.assertRaises(NegativeProbability):
            correlation(JointDistribution(0.5, 0.5, 0.5, -0.5))

    def test_non_normalized_rejected(self):
        with self.assertRaises(NonNormalized):
            correlation(JointDistribution(0.5, 0.5, 0.5, 0.0))

    def test_normalization_tolerance(self):
        """Test sums within 1e-12 of 1 are accepted"""
        self.assertAlmostEqual(correlation(JointDistribution(0.5, 0.0, 0.0, 0.5 + 1e-13)), 1.0, places=12)

    def test_correlation_out_of_range_rejected(self):
        with self.assertRaises(InvalidCorrelation):
            CorrelationSet(1.5, 0.0, 0.0, 0.0)

    def test_settings_reduced_modulo_two_pi(self):
        quad = SettingsQuad(2.0 * math.pi + 0.25, -0.25, 0.0, math.pi)
        self.assertAlmostEqual(quad.a, 0.25, places=12)
        self.assertAlmostEqual(quad.b, 2.0 * math.pi - 0.25, places=12)
        self.assertEqual(quad.d, math.pi)

    def test_non_finite_angle_rejected(self):
        with self.assertRaises(InvalidArgument):
            SettingsQuad(float('nan'), 0.0, 0.0, 0.0)

    def test_settings_from_degrees(self):
        quad = SettingsQuad.from_degrees(0.0, 22.5, 45.0, 67.5)
        for name, expected in optimal_qm_settings().as_dict().items():
            self.assertAlmostEqual(getattr(quad, name), expected, places=12)

    def test_setting_pair_labels(self):
        self.assertEqual([pair.label for pair in SettingPair], ['ab', 'ad', 'cb', 'cd'])
        self.assertIs(SettingPair.from_label('cd'), SettingPair.CD)

    def test_joint_from_counts(self):
        joint = JointDistribution.from_counts(3, 1, 0, 4)
        self.assertEqual(joint.as_tuple(), (0.375, 0.125, 0.0, 0.5))

    def test_outcome_negation_is_an_involution(self):
        self.assertIs(-Outcome.PLUS, Outcome.MINUS)
        for outcome in Outcome:
            self.assertIs(-(-outcome), outcome)

    @given(joints, joints, probabilities)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_correlation_is_linear_under_mixing(self, first, second, weight):
        expected = weight * correlation(first) + (1.0 - weight) * correlation(second)
        self.assertAlmostEqual(correlation(first.mix(second, weight)), expected, places=12)

    @given(joints)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_correlation_is_bounded(self, joint):
        self.assertLessEqual(abs(correlation(joint)), 1.0 + 1e-12)

    @given(st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=4, max_size=4))
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_chsh_unchanged_by_global_sign_flip(self, values):
        corr = CorrelationSet(*values)
        self.assertEqual(chsh(corr.negated()), chsh(corr))
        self.assertLessEqual(chsh(corr), 4.0)


class ModelTests(BaseTestCase):
    def test_qm_optimal_settings_reach_tsirelson_bound(self):
        """Test the optimal QM settings give S = 2 sqrt 2"""
        quad = optimal_qm_settings()
        self.assertEqual(quad.as_dict(), {'a': 0.0, 'b': math.pi / 8, 'c': math.pi / 4, 'd': 3 * math.pi / 8})
        s = chsh(ideal_correlations(ModelKind.QM, quad))
        self.assertAlmostEqual(s, 2.0 * ROOT_TWO, places=12)

    def test_qm_joint_examples(self):
        self.assertEqual(qm_joint(0.0, 0.0).as_tuple(), (0.5, 0.0, 0.0, 0.5))
        joint = qm_joint(0.0, math.pi / 2)
        self.assertAlmostEqual(correlation(joint), -1.0, places=12)
        self.assertAlmostEqual(correlation(qm_joint(0.0, math.pi / 4)), 0.0, places=12)

    def test_reference_lhv_at_equal_settings(self):
        """Test the reference model is perfectly anticorrelated at equal settings"""
        model = reference_lhv_model()
        joint = lhv_joint(model, 0.3, 0.3, resolution=1000)
        self.assertAlmostEqual(correlation(joint), -1.0, places=12)

    def test_reference_lhv_optimal_settings_saturate_bound(self):
        s = chsh(ideal_correlations(ModelKind.LHV_REFERENCE, optimal_qm_settings(), resolution=100_000))
        self.assertLessEqual(s, 2.0 + 1e-9)
        self.assertAlmostEqual(s, 2.0, places=4)

    def test_quadrature_matches_closed_form(self):
        model = reference_lhv_model()
        for a, b in [(0.0, 0.3927), (0.1, 1.2), (2.0, 0.5), (0.0, math.pi / 2)]:
            quadrature = correlation(lhv_joint(model, a, b, resolution=100_000))
            self.assertAlmostEqual(quadrature, reference_lhv_correlation(a, b), places=3)

    def test_lhv_bound_on_settings_grid(self):
        """Test S <= 2 over a 10^4-point settings grid (closed-form correlations)"""
        grid = [i * (math.pi / 2) / 10 for i in range(10)]
        worst = 0.0
        for a in grid:
            for b in grid:
                for c in grid:
                    for d in grid:
                        corr = CorrelationSet(
                            reference_lhv_correlation(a, b), reference_lhv_correlation(a, d),
                            reference_lhv_correlation(c, b), reference_lhv_correlation(c, d),
                        )
                        worst = max(worst, chsh(corr))
        self.assertLessEqual(worst, 2.0 + 1e-9)

    def test_lhv_bound_with_quadrature(self):
        grid = [0.0, 0.4, 1.1]
        for a in grid:
            for b in grid:
                for c in grid:
                    for d in grid:
                        s = chsh(ideal_correlations(ModelKind.LHV_REFERENCE, SettingsQuad(a, b, c, d), 10_000))
                        self.assertLessEqual(s, 2.0 + 1e-9)

    def test_lhv_bound_on_quadrature_grid(self):
        """Test S <= 2 on a 20^4 grid over [0, pi/2) with quadrature at resolution 10^5"""
        model = reference_lhv_model()
        grid = [i * (math.pi / 2) / 20 for i in range(20)]
        table = {
            (a, b): correlation(lhv_joint(model, a, b, resolution=100_000)) for a in grid for b in grid
        }
        worst = 0.0
        for a in grid:
            for c in grid:
                for b in grid:
                    for d in grid:
                        corr = CorrelationSet(table[a, b], table[a, d], table[c, b], table[c, d])
                        worst = max(worst, chsh(corr))
        self.assertLessEqual(worst, 2.0 + 1e-9)

    @given(angles, angles, st.floats(min_value=-math.pi, max_value=math.pi))
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_qm_joint_symmetry(self, a, b, shift):
        """Test the QM joint is unchanged by swapping wings and depends on a - b only"""
        model = QmPairModel()
        joint = model.joint(a, b)
        np.testing.assert_allclose(model.joint(b, a).as_tuple(), joint.as_tuple(), rtol=0, atol=1e-15)
        np.testing.assert_allclose(
            model.joint(a + shift, b + shift).as_tuple(), joint.as_tuple(), rtol=0, atol=1e-12,
        )

    @given(angles, angles, angles)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_reference_model_factorizes_at_fixed_lambda(self, a, b, lam):
        model = reference_lhv_model()
        outcome_a, outcome_b = model.outcomes(a, b, np.array([lam]))
        matrix = JointDistribution.from_counts(*tally_outcomes(outcome_a, outcome_b)).as_matrix()
        np.testing.assert_array_equal(matrix, np.outer(matrix.sum(axis=1), matrix.sum(axis=0)))
        self.assertEqual(np.count_nonzero(matrix), 1)
        pair = model.outcome_pair(a, b, HiddenVariable(lam))
        self.assertEqual((int(pair[0]), int(pair[1])), (int(outcome_a[0]), int(outcome_b[0])))

    @given(angles, angles, angles, angles)
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_qm_never_exceeds_tsirelson(self, a, b, c, d):
        s = chsh(ideal_correlations(ModelKind.QM, SettingsQuad(a, b, c, d)))
        self.assertLessEqual(s, 2.0 * ROOT_TWO + 1e-12)

    @given(angles, angles, angles, angles)
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_reference_lhv_closed_form_respects_bound(self, a, b, c, d):
        corr = CorrelationSet(
            reference_lhv_correlation(a, b), reference_lhv_correlation(a, d),
            reference_lhv_correlation(c, b), reference_lhv_correlation(c, d),
        )
        self.assertLessEqual(chsh(corr), 2.0 + 1e-9)

    def test_zero_resolution_rejected(self):
        with self.assertRaises(InvalidArgument):
            lhv_joint(reference_lhv_model(), 0.0, 0.0, resolution=0)

    def test_hidden_variable_range(self):
        with self.assertRaises(InvalidArgument):
            HiddenVariable(2.0 * math.pi)
        outcome_a, outcome_b = reference_lhv_model().outcome_pair(0.0, 0.0, HiddenVariable(0.0))
        self.assertEqual((int(outcome_a), int(outcome_b)), (1, -1))

    def test_discrete_density_points(self):
        points = LambdaDensity.discrete(4).points()
        np.testing.assert_allclose(points, [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
        with self.assertRaises(InvalidArgument):
            LambdaDensity().points()


class NoiseTests(BaseTestCase):
    def test_bsc_marginal_examples(self):
        self.assertEqual(bsc_marginal(1.0, 0.0), 1.0)
        self.assertAlmostEqual(bsc_marginal(0.5, 0.3), 0.5, places=12)
        self.assertAlmostEqual(bsc_marginal(1.0, 0.1), 0.9, places=12)

    def test_noisy_correlation_brute_force_example(self):
        """Test (1/2,0,0,1/2) with eps_a = 0.1, eps_b = 0.2 gives E = 0.48"""
        joint = bsc_joint(JointDistribution(0.5, 0.0, 0.0, 0.5), 0.1, 0.2)
        self.assertAlmostEqual(correlation(joint), 0.48, places=12)
        self.assertAlmostEqual(noisy_correlation(1.0, 0.1, 0.2), 0.48, places=12)

    def test_half_noise_erases_correlation(self):
        self.assertEqual(noisy_correlation(0.7, 0.5, 0.0), 0.0)

    def test_s_epsilon_examples(self):
        self.assertEqual(s_epsilon(CorrelationSet(1.0, -1.0, 1.0, 1.0), NoiseQuad()), 4.0)
        self.assertAlmostEqual(
            s_epsilon(OPTIMAL_CORRELATIONS, NoiseQuad.uniform(0.05)), 0.81 * 2.0 * ROOT_TWO, places=12,
        )

    @given(st.lists(correlation_values, min_size=4, max_size=4), probabilities)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_equal_noise_scales_chsh(self, values, eps):
        """Test s_epsilon with four equal rates is (1 - 2eps)^2 chsh(corr)"""
        corr = CorrelationSet(*values)
        expected = (1.0 - 2.0 * eps) ** 2 * chsh(corr)
        self.assertAlmostEqual(s_epsilon(corr, NoiseQuad.uniform(eps)), expected, places=12)

    def test_extremal_correlations_fall_below_two_at_threshold_noise(self):
        value = s_epsilon(CorrelationSet(1.0, -1.0, 1.0, 1.0), NoiseQuad.uniform(0.15))
        self.assertAlmostEqual(value, 1.96, places=12)
        self.assertLess(value, 2.0)

    def test_critical_epsilon(self):
        self.assertAlmostEqual(critical_epsilon(4.0), (1.0 - 1.0 / ROOT_TWO) / 2.0, places=12)
        self.assertAlmostEqual(critical_epsilon(2.0 * ROOT_TWO), 0.07955, places=5)
        self.assertLess(critical_epsilon(4.0), 0.15)

    def test_critical_epsilon_without_violation(self):
        with self.assertRaises(NoViolation):
            critical_epsilon(2.0)
        with self.assertRaises(InvalidArgument):
            critical_epsilon(4.5)

    def test_noise_scan(self):
        values = noise_scan(CorrelationSet(1.0, -1.0, 1.0, 1.0), [0.0, 0.15, 0.5])
        self.assertEqual(values[0], 4.0)
        self.assertAlmostEqual(values[1], 1.96, places=12)
        self.assertEqual(values[2], 0.0)

    def test_noise_rates_per_pair(self):
        noise = NoiseQuad(0.1, 0.2, 0.3, 0.4)
        self.assertEqual(noise.rates(SettingPair.AB), (0.1, 0.2))
        self.assertEqual(noise.rates(SettingPair.CD), (0.3, 0.4))

    def test_invalid_rates_rejected(self):
        with self.assertRaises(InvalidArgument):
            NoiseQuad(eps1=1.5)
        with self.assertRaises(InvalidArgument):
            ErasureRates(delta_a=-0.1)
        with self.assertRaises(InvalidArgument):
            bsc_matrix(1.5)
        with self.assertRaises(InvalidArgument):
            bsc_marginal(0.5, -0.01)

    def test_joint_detection_prob(self):
        self.assertAlmostEqual(joint_detection_prob(ErasureRates(0.1, 0.2)), 0.72, places=12)

    @given(
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=4, max_size=4),
        half_probabilities,
        half_probabilities,
    )
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_noisy_scaling_law(self, weights, eps_a, eps_b):
        """Test correlation(bsc_joint(J)) = (1 - 2eps_a)(1 - 2eps_b) correlation(J)"""
        total = math.fsum(weights)
        joint = JointDistribution(*(w / total for w in weights))
        expected = (1.0 - 2.0 * eps_a) * (1.0 - 2.0 * eps_b) * correlation(joint)
        self.assertAlmostEqual(correlation(bsc_joint(joint, eps_a, eps_b)), expected, places=12)

    @given(probabilities, half_probabilities, half_probabilities)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_bsc_cascade_law(self, p, eps1, eps2):
        cascaded = bsc_marginal(bsc_marginal(p, eps1), eps2)
        self.assertAlmostEqual(cascaded, bsc_marginal(p, eps1 + eps2 - 2.0 * eps1 * eps2), places=12)

    def test_scaling_law_on_grid(self):
        joints = [JointDistribution(0.5, 0.0, 0.0, 0.5), JointDistribution(0.1, 0.2, 0.3, 0.4), qm_joint(0.0, 0.3)]
        grid = [i / 10 for i in range(6)]
        for joint in joints:
            for eps_a in grid:
                for eps_b in grid:
                    self.assertAlmostEqual(
                        correlation(bsc_joint(joint, eps_a, eps_b)),
                        noisy_correlation(correlation(joint), eps_a, eps_b),
                        places=12,
                    )


class CoinTests(BaseTestCase):
    def test_camera_joints(self):
        for pair in SettingPair:
            self.assertEqual(camera_joint(pair).as_tuple(), (0.5, 0.0, 0.0, 0.5))
            self.assertEqual(correlation(camera_joint(pair)), 1.0)

    def test_counter_table_at_two_tenths(self):
        """Test the counter table cell by cell at eps = 0.2"""
        fault = FaultSpec(0.2)
        np.testing.assert_allclose(counter_joint(SettingPair.AD, fault).as_tuple(), (0.4, 0.0, 0.1, 0.5), atol=1e-15)
        self.assertAlmostEqual(correlation(counter_joint(SettingPair.AD, fault)), 0.8, places=12)
        for pair in (SettingPair.AB, SettingPair.CB, SettingPair.CD):
            self.assertEqual(counter_joint(pair, fault).as_tuple(), (0.5, 0.0, 0.0, 0.5))

    def test_coin_s_on_grid_within_one_rounding(self):
        """Test coin_s(eps) = 2 + eps to 1e-15 (one ulp at 2) through the generic chsh pipeline"""
        for step in range(101):
            eps = step / 100
            self.assertLessEqual(abs(coin_s(eps) - (2.0 + eps)), 1e-15)
            self.assertEqual(coin_s(eps) - chsh(counter_correlations(FaultSpec(eps))), 0.0)

    def test_coin_s_endpoints(self):
        self.assertEqual(coin_s(0.0), 2.0)
        self.assertAlmostEqual(coin_s(1.0), 3.0, places=12)

    def test_fault_validation(self):
        with self.assertRaises(InvalidArgument):
            FaultSpec(1.2)
        with self.assertRaises(InvalidArgument):
            FaultSpec(0.1, faulty_link='C(c)->L3')

    def test_noise_free_simulation_is_perfectly_correlated(self):
        tallies = simulate_coin(20_000, FaultSpec(0.0), seed=11)
        for pair in SettingPair:
            self.assertAlmostEqual(tallies.correlations()[pair], 1.0, places=12)
            self.assertEqual(tallies.stages[pair].total, 20_000)

    def test_faulty_link_correlation(self):
        tallies = simulate_coin(200_000, FaultSpec(0.2), seed=5)
        stage = tallies.stages[SettingPair.AD]
        self.assertWithinSigma(stage.correlation(), 0.8, stage.standard_error())
        self.assertWithinSigma(tallies.s(), 2.2, tallies.standard_error_s())
        # a dropped signal only turns + into -
        self.assertEqual(stage.n_pm, 0)

    def test_wing_two_depends_on_orientation_only(self):
        """Test wing II signals can be rebuilt from the coin orientation alone"""
        log = coin_trial_log(FaultSpec(0.3), seed=99, start=0, stop=5000)
        for setting in ('b', 'd'):
            rebuilt = wing_two_signal(log['orientation'], setting)
            self.assertEqual(rebuilt.tobytes(), log[setting].tobytes())

    def test_shard_count_does_not_change_tallies(self):
        single = simulate_coin(10_000, FaultSpec(0.25), seed=2, shards=1)
        sharded = simulate_coin(10_000, FaultSpec(0.25), seed=2, shards=7)
        self.assertEqual(single.as_dict(), sharded.as_dict())

    def test_zero_trials_rejected(self):
        with self.assertRaises(InvalidArgument):
            simulate_coin(0, FaultSpec(0.1), seed=1)

    @pytest.mark.slow
    def test_coin_monte_carlo_seed_suite(self):
        passed = 0
        for seed in range(10):
            tallies = simulate_coin(1_000_000, FaultSpec(0.1), seed=seed)
            passed += abs(tallies.s() - 2.1) < 4.0 * tallies.standard_error_s()
        self.assertGreaterEqual(passed, 9)


class RandomStreamTests(BaseTestCase):
    def test_trial_blocks_do_not_depend_on_start(self):
        whole = trial_uniforms(42, 0, 0, 100)
        tail = trial_uniforms(42, 0, 37, 100)
        np.testing.assert_array_equal(whole[37:], tail)

    def test_streams_differ(self):
        self.assertFalse(np.array_equal(trial_uniforms(42, 0, 0, 10), trial_uniforms(42, 1, 0, 10)))

    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=64))
    def test_shard_bounds_partition_trials(self, trials, shards):
        bounds = shard_bounds(trials, shards)
        self.assertEqual(sum(stop - start for start, stop in bounds), trials)
        self.assertLessEqual(len(bounds), shards)
        for (_, stop), (start, _) in zip(bounds, bounds[1:]):
            self.assertEqual(stop, start)


class MonteCarloTests(BaseTestCase):
    def test_qm_optimal_run(self):
        config = RunConfigFactory(trials=200_000, seed=7)
        stats = run(config)
        self.assertWithinSigma(stats.s, 2.0 * ROOT_TWO, stats.standard_error_s)
        for pair_stats in stats.pairs.values():
            self.assertEqual(pair_stats.tally.detected, 200_000)
            self.assertLessEqual(abs(pair_stats.correlation), 1.0)

    def test_lhv_run_respects_bound(self):
        config = RunConfigFactory(trials=100_000, seed=3, model=ModelKind.LHV_REFERENCE)
        stats = run(config)
        self.assertLess(stats.s, 2.0 + 4.0 * stats.standard_error_s)

    def test_noisy_run_scales(self):
        config = RunConfigFactory(trials=200_000, seed=8, noise=NoiseQuad.uniform(0.05))
        stats = run(config)
        self.assertWithinSigma(stats.s, 0.81 * 2.0 * ROOT_TWO, stats.standard_error_s)

    def test_same_seed_same_result(self):
        first = run(RunConfigFactory(seed=123))
        second = run(RunConfigFactory(seed=123))
        self.assertEqual(first.as_dict(), second.as_dict())

    def test_different_seeds_differ(self):
        first = run(RunConfigFactory(seed=1))
        second = run(RunConfigFactory(seed=2))
        self.assertNotEqual(first.as_dict(), second.as_dict())

    def test_shard_count_invariance(self):
        """Test one shard and eight shards give byte-identical statistics"""
        single = run(RunConfigFactory(seed=77, shards=1, noise=NoiseQuad.uniform(0.1)))
        sharded = run(RunConfigFactory(seed=77, shards=8, noise=NoiseQuad.uniform(0.1)))
        self.assertEqual(json.dumps(single.as_dict()), json.dumps(sharded.as_dict()))

    @override_settings(BELLSIM={**settings.BELLSIM, 'SHARD_BACKEND': 'inline'})
    def test_inline_backend_matches_celery_backend(self):
        inline = run(RunConfigFactory(seed=5, shards=4))
        with override_settings(BELLSIM={**settings.BELLSIM, 'SHARD_BACKEND': 'celery'}):
            dispatched = run(RunConfigFactory(seed=5, shards=4))
        self.assertEqual(inline.as_dict(), dispatched.as_dict())

    def test_erasure_thins_coincidences(self):
        stats = run(RunConfigFactory(trials=50_000, seed=4, erasure=ErasureRates(0.1, 0.2)))
        for pair_stats in stats.pairs.values():
            detected = pair_stats.tally.detected
            spread = math.sqrt(50_000 * 0.72 * 0.28)
            self.assertLess(abs(detected - 50_000 * 0.72), 4.0 * spread)

    def test_full_erasure_leaves_no_estimate(self):
        stats = run(RunConfigFactory(trials=100, erasure=ErasureRates(1.0, 0.0)))
        self.assertIsNone(stats.s)
        for pair_stats in stats.pairs.values():
            self.assertEqual(pair_stats.tally.detected, 0)
            self.assertIsNone(pair_stats.correlation)

    def test_invalid_config_rejected(self):
        with self.assertRaises(InvalidArgument):
            RunConfigFactory(trials=0)
        with self.assertRaises(InvalidArgument):
            RunConfigFactory(shards=0)
        with self.assertRaises(InvalidArgument):
            RunConfigFactory(seed=1 << 64)

    def test_payload_round_trip(self):
        config = RunConfigFactory(noise=NoiseQuad(0.1, 0.0, 0.2, 0.0), erasure=ErasureRates(0.3, 0.0))
        self.assertEqual(RunConfig.from_payload(config.to_payload()), config)

    def test_selection_with_one_class_detected(self):
        """Test only C1 survives when r1 = 1, r2 = 0, so E(a,b) = 1 exactly"""
        stats = run_with_selection(RunConfigFactory(trials=10_000, seed=9), (1.0, 0.0))
        self.assertEqual(stats.pairs[SettingPair.AB].correlation, 1.0)
        self.assertEqual(stats.class_detected[SettingPair.AB], (5000, 0))

    def test_selection_with_equal_rates(self):
        stats = run_with_selection(RunConfigFactory(trials=200_000, seed=10), (0.5, 0.5))
        ab = stats.pairs[SettingPair.AB]
        self.assertWithinSigma(ab.correlation, 0.0, ab.standard_error)

    def test_selection_with_biased_rates(self):
        stats = run_with_selection(RunConfigFactory(trials=200_000, seed=12), (0.75, 0.25))
        ab = stats.pairs[SettingPair.AB]
        self.assertAlmostEqual(expected_selection_correlation((0.75, 0.25)), 0.5)
        self.assertWithinSigma(ab.correlation, 0.5, ab.standard_error)

    def test_selection_rejects_bad_rates(self):
        with self.assertRaises(InvalidArgument):
            run_with_selection(RunConfigFactory(trials=10), (1.5, 0.0))
        with self.assertRaises(InvalidArgument):
            run_with_selection(RunConfigFactory(trials=10, erasure=ErasureRates(0.1, 0.0)), (0.5, 0.5))

    @pytest.mark.slow
    def test_qm_seed_suite(self):
        for noise, target in ((None, 2.0 * ROOT_TWO), (NoiseQuad.uniform(0.05), 0.81 * 2.0 * ROOT_TWO)):
            passed = 0
            for seed in range(10):
                stats = run(RunConfigFactory(trials=1_000_000, seed=seed, noise=noise))
                passed += abs(stats.s - target) < 4.0 * stats.standard_error_s
            self.assertGreaterEqual(passed, 9)

    @pytest.mark.slow
    def test_error_shrinks_as_inverse_root_of_trials(self):
        """Test the slope of log RMS error against log trials lies in [-0.65, -0.35] over 10 seeds"""
        expected = ideal_correlations(ModelKind.QM, optimal_qm_settings())
        log_trials = []
        log_errors = []
        for level, trials in enumerate((10 ** 4, 10 ** 5, 10 ** 6)):
            squared = []
            for seed in range(10):
                stats = run(RunConfigFactory(trials=trials, seed=100 * level + seed))
                squared.extend((stats.pairs[pair].correlation - expected[pair]) ** 2 for pair in SettingPair)
            log_trials.append(math.log(trials))
            log_errors.append(0.5 * math.log(np.mean(squared)))
        slope = np.polyfit(log_trials, log_errors, 1)[0]
        self.assertGreaterEqual(slope, -0.65)
        self.assertLessEqual(slope, -0.35)

    @pytest.mark.slow
    def test_selection_at_full_size(self):
        equal = run_with_selection(RunConfigFactory(trials=1_000_000, seed=1), (0.5, 0.5)).pairs[SettingPair.AB]
        self.assertWithinSigma(equal.correlation, 0.0, equal.standard_error)
        biased = run_with_selection(RunConfigFactory(trials=1_000_000, seed=1), (0.75, 0.25)).pairs[SettingPair.AB]
        self.assertWithinSigma(biased.correlation, 0.5, biased.standard_error)


class LoopholeTests(BaseTestCase):
    def test_equilibrate_sampling_examples(self):
        self.assertAlmostEqual(equilibrate_sampling_log_prob(SampleSpec(4, 0.5)), 0.0, places=12)
        self.assertAlmostEqual(equilibrate_sampling_log_prob(SampleSpec(2, 1.0)), math.log(0.25), places=12)
        self.assertEqual(equilibrate_sampling_exact(SampleSpec(4, 0.5)), 1)

    def test_large_sample_stays_finite(self):
        value = equilibrate_sampling_log_prob(SampleSpec(1_000_000, 0.05))
        self.assertTrue(math.isfinite(value))
        self.assertLess(value, 0.0)

    def test_hypergeometric_examples(self):
        self.assertAlmostEqual(hypergeometric_balanced_log_prob(SampleSpec(4, 0.5)), math.log(2 / 3), places=12)
        self.assertAlmostEqual(hypergeometric_balanced_log_prob(SampleSpec(2, 1.0)), 0.0, places=12)
        self.assertAlmostEqual(hypergeometric_balanced_log_prob(SampleSpec(8, 0.5)), math.log(36 / 70), places=12)
        self.assertEqual(hypergeometric_balanced_exact(SampleSpec(4, 0.5)), Fraction(2, 3))

    def test_log_space_matches_exact_rationals(self):
        """Test both sampling formulas against big-integer values for every even N <= 64"""
        for n in range(2, 65, 2):
            for detected in range(2, n + 1, 2):
                spec = SampleSpec(n, detected / n)
                for log_prob, exact in (
                    (equilibrate_sampling_log_prob(spec), equilibrate_sampling_exact(spec)),
                    (hypergeometric_balanced_log_prob(spec), hypergeometric_balanced_exact(spec)),
                ):
                    self.assertLess(abs(math.exp(log_prob) - float(exact)) / float(exact), 1e-10)

    def test_invalid_sample_specs(self):
        for n, phi in ((3, 1.0), (4, 0.0), (4, 0.25), (0, 0.5)):
            with self.assertRaises(InvalidArgument):
                SampleSpec(n, phi)

    def test_s_delta_examples(self):
        corr = CorrelationSet(0.5, -0.5, 0.5, 0.5)
        self.assertEqual(s_delta(corr, DeltaQuad()), chsh(corr))
        self.assertEqual(s_delta(corr, DeltaQuad(2.0, 2.0, 2.0, 2.0)), 4.0)
        self.assertEqual(s_delta(corr, DeltaQuad(0.0, 0.0, 0.0, 0.0)), 0.0)

    def test_s_delta_names_violated_index(self):
        with self.assertRaises(ConstraintViolation) as raised:
            s_delta(CorrelationSet(0.5, -0.5, 0.5, 0.5), DeltaQuad(1.0, 1.0, 3.0, 1.0))
        self.assertEqual(raised.exception.index, 3)

    def test_s_delta_range_examples(self):
        full = s_delta_range(CorrelationSet(0.5, -0.5, 0.5, 0.5))
        self.assertEqual((full.low, full.high), (0.0, 4.0))
        pinned = s_delta_range(CorrelationSet(0.5, 0.0, 0.5, 0.0))
        self.assertEqual((pinned.low, pinned.high), (0.0, 2.0))
        empty = s_delta_range(CorrelationSet(0.0, 0.0, 0.0, 0.0))
        self.assertEqual((empty.low, empty.high), (0.0, 0.0))

    @given(st.lists(correlation_values, min_size=4, max_size=4))
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_s_delta_range_witness_attains_high(self, values):
        corr = CorrelationSet(*values)
        span = s_delta_range(corr)
        self.assertLessEqual(span.low, span.high)
        self.assertLess(abs(s_delta(corr, span.witness) - span.high), 1e-12)

    def test_overlap_examples(self):
        self.assertEqual(overlap_log_prob(OverlapSpec(7, 7)), 0.0)
        self.assertAlmostEqual(overlap_log_prob(OverlapSpec(2, 4)), math.log(1 / 6), places=12)

    def test_overlap_large_ensemble(self):
        value = overlap_log_prob(OverlapSpec(20_000, 10 ** 9))
        self.assertTrue(math.isfinite(value))
        self.assertLess(value, -200_000)
        self.assertGreater(value, -260_000)

    def test_overlap_matches_exact(self):
        for n in range(1, 21):
            for n_tot in (n, n + 1, 2 * n, 50):
                if n_tot < n:
                    continue
                exact = float(overlap_exact(OverlapSpec(n, n_tot)))
                approx = math.exp(overlap_log_prob(OverlapSpec(n, n_tot)))
                self.assertLess(abs(approx - exact) / exact, 1e-10)

    def test_overlap_scan_decreases(self):
        small = overlap_limit_scan(5, [5, 10, 100])
        self.assertEqual(small[0], 0.0)
        self.assertTrue(small[0] > small[1] > small[2])
        large = overlap_limit_scan(20_000, [20_000, 100_000, 1_000_000])
        self.assertTrue(large[0] > large[1] > large[2])

    def test_overlap_errors(self):
        with self.assertRaises(InvalidArgument):
            OverlapSpec(5, 4)
        with self.assertRaises(InvalidArgument):
            overlap_limit_scan(5, [100, 10])

    def test_mismatched_sub_ensembles_reach_four(self):
        result = mismatched_sample_s(reference_lhv_model(), optimal_qm_settings(), 1000)
        self.assertEqual(result.s, 4.0)
        self.assertLessEqual(result.common_s, 2.0 + 1e-12)
        self.assertTrue(all(size > 0 for size in result.subset_sizes.values()))


class ReportTests(BaseTestCase):
    def test_format_float(self):
        self.assertEqual(format_float(0.1), '0.10000000000000001')
        self.assertEqual(format_float(2.0), '2.0')
        self.assertEqual(float(format_float(2.0 * ROOT_TWO)), 2.0 * ROOT_TWO)
        with self.assertRaises(InvalidArgument):
            format_float(float('inf'))

    def test_flatten(self):
        flat = dict(flatten({'a': {'b': [1, 2]}, 'c': None}))
        self.assertEqual(flat, {'a.b.0': 1, 'a.b.1': 2, 'c': None})

    def test_bad_schema_version_rejected(self):
        report = {'schema_version': '2', 'command': 'x', 'inputs': {}, 'results': {}, 'provenance': {}}
        with self.assertRaises(serializers.ValidationError):
            decode_json(json.dumps(report))


class SerializerTests(BaseTestCase):
    def test_default_settings_are_optimal(self):
        serializer = SettingsSerializer(data={})
        self.assertTrue(serializer.is_valid())
        self.assertEqual(serializer.validated_data['settings'], optimal_qm_settings())

    def test_mixed_units_rejected(self):
        serializer = SettingsSerializer(data={'a': 0.1, 'b_deg': 10.0})
        self.assertFalse(serializer.is_valid())

    def test_optimal_with_angles_rejected(self):
        serializer = SettingsSerializer(data={'optimal': True, 'a': 0.1})
        self.assertFalse(serializer.is_valid())

    def test_class_rates_parsed(self):
        serializer = SimulateSerializer(data={'trials': 10, 'seed': 1, 'shards': 1, 'resolution': 10,
                                              'class_rates': '0.75,0.25'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['class_rates'], (0.75, 0.25))


class CommandTests(BaseTestCase):
    def assertMatchesGolden(self, name, report):
        expected = json.loads((GOLDEN_DIR / f'{name}.json').read_text())
        report = dict(report)
        report['provenance'] = {
            key: value for key, value in report['provenance'].items() if key not in ('build', 'shards')
        }
        self.assertEqual(report, expected)

    def test_analytic_golden(self):
        report = run_json('analytic', '--model', 'qm', '--a', '0', '--b', '0', '--c', '0', '--d', '0', '--eps', '0.25')
        self.assertMatchesGolden('analytic', report)

    def test_coin_golden(self):
        """Test the sampled coin report is pinned for one and eight shards"""
        for shards in ('1', '8'):
            report = run_json('coin', '--eps', '0.2', '--trials', '1000', '--seed', '7', '--shards', shards)
            self.assertMatchesGolden('coin', report)

    def test_loopholes_golden(self):
        self.assertMatchesGolden('loopholes', run_json('loopholes', 's-delta-range', '--corr', '0.5,-0.5,0.5,0.5'))

    def test_simulate_golden(self):
        """Test the sampled simulate report (per-channel noise and erasure) is pinned for one and eight shards"""
        for shards in ('1', '8'):
            report = run_json(
                'simulate', '--model', 'qm', '--a', '0', '--b', '0', '--c', '0', '--d', '0',
                '--eps1', '0.1', '--eps2', '0.2', '--eps3', '0.05', '--eps4', '0.15',
                '--delta-a', '0.1', '--delta-b', '0.2', '--trials', '1000', '--seed', '7', '--shards', shards,
            )
            self.assertMatchesGolden('simulate', report)

    def test_simulate_without_coincidences(self):
        report = run_json(
            'simulate', '--model', 'qm', '--a', '0', '--b', '0', '--c', '0', '--d', '0',
            '--trials', '10', '--seed', '7', '--delta-a', '1',
        )
        results = report['results']
        for label in ('ab', 'ad', 'cb', 'cd'):
            self.assertEqual(results['pairs'][label]['counts'], [0, 0, 0, 0])
            self.assertIsNone(results['pairs'][label]['correlation'])
            self.assertIsNone(results['z_scores'][label])
        self.assertIsNone(results['s'])
        self.assertIsNone(results['z_s'])
        self.assertEqual(results['s_expected'], 2.0)

    def test_analytic_qm_optimal(self):
        report = run_json('analytic', '--model', 'qm', '--optimal')
        self.assertEqual(report['schema_version'], '1')
        self.assertAlmostEqual(report['results']['s'], 2.8284271247461903, places=12)

    def test_analytic_noisy(self):
        report = run_json('analytic', '--model', 'qm', '--optimal', '--eps', '0.05')
        self.assertAlmostEqual(report['results']['s_epsilon'], 0.81 * 2.0 * ROOT_TWO, places=12)

    def test_analytic_lhv_degenerate_settings(self):
        report = run_json('analytic', '--model', 'lhv-ref', '--a', '0', '--b', '0', '--c', '0.3927', '--d', '0.3927')
        self.assertLess(abs(report['results']['s'] - 2.0), 1e-6)

    def test_analytic_degrees(self):
        report = run_json('analytic', '--a-deg', '0', '--b-deg', '22.5', '--c-deg', '45', '--d-deg', '67.5')
        self.assertAlmostEqual(report['results']['s'], 2.0 * ROOT_TWO, places=12)

    def test_mixed_angle_units_is_usage_error(self):
        self.assertCommandFails(2, 'analytic', '--a', '0.1', '--b-deg', '10')

    def test_zero_trials_is_usage_error(self):
        self.assertCommandFails(2, 'simulate', '--trials', '0')

    def test_zero_resolution_and_shards_are_usage_errors(self):
        self.assertCommandFails(2, 'analytic', '--model', 'lhv-ref', '--resolution', '0')
        self.assertCommandFails(2, 'simulate', '--trials', '10', '--shards', '0')

    def test_simulate_self_check_passes(self):
        report = run_json('simulate', '--model', 'qm', '--optimal', '--trials', '20000', '--seed', '7')
        for z in report['results']['z_scores'].values():
            self.assertLess(z, 5.0)
        self.assertEqual(report['provenance']['seed'], 7)

    @override_settings(BELLSIM={**settings.BELLSIM, 'SELF_CHECK_Z': 0.0})
    def test_self_check_failure_exit_code(self):
        out = StringIO()
        with self.assertRaises(CommandError) as raised:
            call_command('simulate', '--trials', '1000', '--seed', '3', stdout=out)
        self.assertEqual(raised.exception.returncode, 3)
        # the report still reaches stdout
        self.assertEqual(json.loads(out.getvalue())['command'], 'simulate')

    def test_self_check_covers_s(self):
        """Test a CHSH z-score over the limit fails the run even when every pair passes"""
        with patch('Chsh.management.commands.simulate.z_score', side_effect=[0.0, 0.0, 0.0, 0.0, 10.0]):
            error = self.assertCommandFails(3, 'simulate', '--trials', '1000', '--seed', '3')
        self.assertIn('S more than', str(error))

    @override_settings(BELLSIM={**settings.BELLSIM, 'DEFAULT_SEED': 7})
    def test_seed_defaults_to_configured_seed(self):
        args = ('simulate', '--a', '0', '--b', '0', '--c', '0', '--d', '0', '--eps', '0.1', '--trials', '500')
        default = run_json(*args)
        explicit = run_json(*args, '--seed', '7')
        self.assertEqual(default['provenance']['seed'], 7)
        self.assertEqual(default['results'], explicit['results'])
        coin = run_json('coin', '--eps', '0.2', '--trials', '500')
        self.assertEqual(coin['provenance']['seed'], 7)

    def test_simulate_report_independent_of_shards(self):
        args = ('simulate', '--model', 'lhv-ref', '--optimal', '--trials', '3000', '--seed', '21', '--eps', '0.1')
        single = run_json(*args, '--shards', '1')
        sharded = run_json(*args, '--shards', '8')
        self.assertEqual(single['results'], sharded['results'])
        self.assertEqual(single['inputs'], sharded['inputs'])
        self.assertEqual((single['provenance']['shards'], sharded['provenance']['shards']), (1, 8))

    def test_simulate_selection(self):
        report = run_json('simulate', '--trials', '2000', '--seed', '1', '--class-rates', '1,0')
        self.assertEqual(report['results']['pairs']['ab']['correlation'], 1.0)
        self.assertEqual(report['results']['class_detected']['ab'], [1000, 0])
        self.assertEqual(report['results']['class_emitted']['ab'], [1000, 1000])

    def test_class_rates_with_erasure_is_usage_error(self):
        self.assertCommandFails(2, 'simulate', '--trials', '10', '--class-rates', '0.5,0.5', '--delta-a', '0.1')

    def test_coin_values(self):
        self.assertAlmostEqual(run_json('coin', '--eps', '0.3')['results']['s'], 2.3, places=12)
        self.assertAlmostEqual(run_json('coin', '--eps', '0.02')['results']['s'], 2.02, places=12)
        self.assertEqual(run_json('coin', '--eps', '0')['results']['s'], 2.0)

    def test_coin_with_trials(self):
        report = run_json('coin', '--eps', '0.2', '--trials', '20000', '--seed', '3', '--shards', '3')
        simulation = report['results']['simulation']
        self.assertEqual(simulation['trials'], 20000)
        self.assertLess(simulation['z_s'], 5.0)
        self.assertEqual(report['provenance']['shards'], 3)

    def test_threshold(self):
        report = run_json('loopholes', 'threshold', '--s-ideal', '4')
        self.assertAlmostEqual(report['results']['critical_epsilon'], 0.1464466094067262, places=12)

    def test_threshold_without_violation_is_usage_error(self):
        self.assertCommandFails(2, 'loopholes', 'threshold', '--s-ideal', '2')

    def test_overlap_scan(self):
        report = run_json('loopholes', 'overlap', '--n', '20000', '--ntot-list', '20000,100000,1e6')
        table = report['results']['table']
        self.assertEqual([row['n_tot'] for row in table], [20000, 100000, 1000000])
        self.assertEqual(table[0]['log_prob'], 0.0)
        self.assertTrue(report['results']['strictly_decreasing'])

    def test_fair_sampling_discrepancy(self):
        results = run_json('loopholes', 'fair-sampling', '--n', '4', '--phi', '0.5')['results']
        self.assertEqual(results['equilibrate_exact'], '1')
        self.assertEqual(results['balanced_exact'], '2/3')
        self.assertAlmostEqual(results['equilibrate_prob'], 1.0, places=12)

    def test_s_delta_constraint_is_usage_error(self):
        error = self.assertCommandFails(2, 'loopholes', 's-delta', '--corr', '0.5,0.5,0.5,0.5', '--deltas', '1,5,1,1')
        self.assertIn('Delta_2', str(error))

    def test_noise_scan_and_detection(self):
        table = run_json('loopholes', 'noise-scan', '--corr', '1,-1,1,1', '--eps-list', '0,0.15')['results']['table']
        self.assertEqual([row['violates'] for row in table], [True, False])
        detection = run_json('loopholes', 'detection', '--delta-a', '0.1', '--delta-b', '0.2')
        self.assertAlmostEqual(detection['results']['joint_detection_prob'], 0.72, places=12)

    def test_mismatch(self):
        results = run_json('loopholes', 'mismatch', '--n-tot', '360', '--optimal')['results']
        self.assertEqual(results['s'], 4.0)
        self.assertLessEqual(results['common_s'], 2.0 + 1e-12)

    def test_csv_and_json_carry_same_values(self):
        for args in (('analytic', '--optimal', '--eps', '0.05'), ('coin', '--eps', '0.2', '--trials', '1000')):
            report = run_json(*args)
            rows = decode_csv(run_command(*args, '--format', 'csv'))
            flat = dict(flatten(report))
            self.assertEqual(set(rows), set(flat))
            for key, value in flat.items():
                if value is None:
                    self.assertEqual(rows[key], '')
                elif isinstance(value, bool):
                    self.assertEqual(rows[key], json.dumps(value))
                elif isinstance(value, str):
                    self.assertEqual(rows[key], value)
                else:
                    self.assertEqual(float(rows[key]), value)

    def test_config_file_with_flag_override(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'run.env')
            with open(path, 'w') as handle:
                handle.write('model = qm\neps = 0.25\na = 0\nb = 0\nc = 0\nd = 0\n')
            from_file = run_json('analytic', '--config', path)
            overridden = run_json('analytic', '--config', path, '--eps', '0')
        self.assertEqual(from_file['results']['s_epsilon'], 0.5)
        self.assertEqual(overridden['results']['s_epsilon'], 2.0)

    def test_unknown_config_key_is_usage_error(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'bad.env')
            with open(path, 'w') as handle:
                handle.write('colour = blue\n')
            self.assertCommandFails(2, 'analytic', '--config', path)
