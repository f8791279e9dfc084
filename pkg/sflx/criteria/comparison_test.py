"""
Unit tests for `comparison.py`.
There is a class for each criterion; randomised soundness checks compare against the Galerkin oracle.
"""
import math

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from sflx.criteria.comparison import *
from sflx.dataclasses import Bounds2x2, ComparisonPair, ComparisonRole, EnvelopeBounds, Outcome, SignatureSplit
from sflx.errors import DimensionMismatch, EmptyInput, InvalidSignatureSplit
from sflx.index.index_core import block_diag_sfl, count_above
from sflx.linalg.symmat import diag_assemble, eigvalsh, from_array
from sflx.oracle.galerkin import default_n_blocks, oracle_sfl_endpoint
from sflx.oracle.paths import linear_path
from sflx.spectra.domain_spectra import interval, spectrum

SPLIT_11 = SignatureSplit(p1=1, p2=1)
B0 = [[8.0, -2.0], [-2.0, 5.0]]
B1 = [[-3.0, 1.0], [1.0, 2.0]]


def interval_pi():
    return spectrum(interval(math.pi))


def pair(role, c1_0, c2_0, c1_1, c2_1):
    return ComparisonPair(
        role=role,
        block_1_0=from_array(c1_0),
        block_2_0=from_array(c2_0),
        block_1_1=from_array(c1_1),
        block_2_1=from_array(c2_1),
    )


def monotone_diagonal(rng, p, increment=8.0):
    """(high, low) diagonal blocks with high - low positive semidefinite."""
    low = np.diag(rng.uniform(-10.0, 10.0, size=p))
    return low + np.diag(rng.uniform(0.0, increment, size=p)), low


def gram(g):
    m = g @ g.T
    return (m + m.T) / 2


def nondegenerate(split, matrices, n_blocks, threshold=1e-6):
    minus_a = np.asarray(split.minus_a)
    return all(
        np.min(np.abs(np.linalg.eigvalsh(minus_a - np.asarray(b) / k ** 2))) >= threshold
        for b in matrices
        for k in range(1, n_blocks + 1)
    )


class SearchTest(parameterized.TestCase):

    @parameterized.named_parameters(
        ("clean", 1.0, 1e-7, False),
        ("inside_tolerance", 1e-8, 1e-7, True),
        ("failing_inside_tolerance", -1e-8, 1e-7, True),
        ("exact_boundary", 1e-13, 1e-7, False),
        ("clear_failure", -1.0, 1e-7, False),
    )
    def test_grazes(self, margin, tol, expected):
        self.assertEqual(grazes(margin, tol), expected)


class CheckUpperComparisonTest(parameterized.TestCase):

    def test_two_by_two_example(self):
        verdict = check_upper_comparison(SPLIT_11, pair(ComparisonRole.UPPER_C, [[5.0]], [[3.0]], [[1.0]], [[3.0]]),
                                         interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual((verdict.witness.j, verdict.witness.k, verdict.witness.alpha_k), (1, 2, 4.0))
        self.assertEqual(verdict.witness.interval, (1.0, 5.0))
        boundary = [w for w in verdict.warnings if w.kind == "boundary_singular"]
        self.assertLen(boundary, 1)
        self.assertEqual(boundary[0].k, 1)
        self.assertEqual(boundary[0].margin, 0.0)
        self.assertNotEmpty(verdict.provisos)

    @parameterized.named_parameters(
        ("equal_endpoints", [[5.0]], [[3.0]], [[5.0]], [[3.0]]),
        ("no_square_between", [[3.9]], [[3.0]], [[2.2]], [[3.0]]),
    )
    def test_no_witness(self, c1_0, c2_0, c1_1, c2_1):
        verdict = check_upper_comparison(SPLIT_11, pair(ComparisonRole.UPPER_C, c1_0, c2_0, c1_1, c2_1), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)
        self.assertIsNone(verdict.witness)

    def test_negative_block_witness(self):
        # -4 lies in (mu(C2_1), mu(C2_0)) = (-6, -2)
        verdict = check_upper_comparison(SPLIT_11, pair(ComparisonRole.UPPER_C, [[0.5]], [[-2.0]], [[0.5]], [[-6.0]]),
                                         interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual((verdict.witness.block, verdict.witness.k), (2, 2))

    def test_monotonicity_failure(self):
        verdict = check_upper_comparison(SPLIT_11, pair(ComparisonRole.UPPER_C, [[1.0]], [[3.0]], [[5.0]], [[3.0]]),
                                         interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)
        self.assertEqual(verdict.warnings[0].kind, "monotonicity")
        self.assertAlmostEqual(verdict.warnings[0].margin, -4.0, delta=1e-12)

    def test_grazing_is_indeterminate(self):
        verdict = check_upper_comparison(
            SPLIT_11, pair(ComparisonRole.UPPER_C, [[4.0 + 1e-8]], [[3.0]], [[2.0]], [[3.0]]), interval_pi()
        )
        self.assertEqual(verdict.outcome, Outcome.INDETERMINATE)
        self.assertTrue(any(w.kind == "indeterminate_margin" for w in verdict.warnings))

    def test_wrong_role(self):
        with self.assertRaises(ValueError):
            check_upper_comparison(SPLIT_11, pair(ComparisonRole.LOWER_D, [[5.0]], [[3.0]], [[1.0]], [[3.0]]),
                                   interval_pi())

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            check_upper_comparison(SignatureSplit(p1=2, p2=1),
                                   pair(ComparisonRole.UPPER_C, [[5.0]], [[3.0]], [[1.0]], [[3.0]]), interval_pi())

    def test_needs_both_signs(self):
        with self.assertRaises(InvalidSignatureSplit):
            check_upper_comparison(SignatureSplit(p1=1, p2=0),
                                   pair(ComparisonRole.UPPER_C, [[5.0]], [[3.0]], [[1.0]], [[3.0]]), interval_pi())

    def test_sound_against_oracle(self):
        rng = np.random.default_rng(0)
        s = interval_pi()
        witnesses = 0
        while witnesses < 100:
            split = SignatureSplit(p1=int(rng.integers(1, 3)), p2=int(rng.integers(1, 3)))
            c1_0, c1_1 = monotone_diagonal(rng, split.p1)
            c2_0, c2_1 = monotone_diagonal(rng, split.p2)
            verdict = check_upper_comparison(split, pair(ComparisonRole.UPPER_C, c1_0, c2_0, c1_1, c2_1), s)
            if verdict.outcome != Outcome.WITNESS_FOUND:
                continue
            b0, b1 = diag_assemble(c1_0, c2_0), diag_assemble(c1_1, c2_1)
            path = linear_path(b0, b1)
            if not nondegenerate(split, (b0.entries, b1.entries), default_n_blocks(split, path, s)):
                continue
            self.assertGreaterEqual(oracle_sfl_endpoint(split, path, s), 1)
            self.assertGreaterEqual(block_diag_sfl(split, c1_0, c2_0, c1_1, c2_1, s).value, 1)
            witnesses += 1


class CheckLowerComparisonTest(parameterized.TestCase):

    def test_mirror_example(self):
        verdict = check_lower_comparison(SPLIT_11, pair(ComparisonRole.LOWER_D, [[1.0]], [[0.0]], [[5.0]], [[0.0]]),
                                         interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual((verdict.witness.j, verdict.witness.k, verdict.witness.alpha_k), (1, 2, 4.0))

    def test_equal_endpoints(self):
        verdict = check_lower_comparison(SPLIT_11, pair(ComparisonRole.LOWER_D, [[2.0]], [[1.0]], [[2.0]], [[1.0]]),
                                         interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_monotonicity_failure(self):
        split = SignatureSplit(p1=2, p2=1)
        verdict = check_lower_comparison(
            split, pair(ComparisonRole.LOWER_D, np.zeros((2, 2)), [[0.0]], np.diag([1.0, -0.5]), [[0.0]]), interval_pi()
        )
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)
        self.assertEqual(verdict.warnings[0].kind, "monotonicity")
        self.assertAlmostEqual(verdict.warnings[0].margin, -0.5, delta=1e-12)

    def test_sound_against_oracle(self):
        rng = np.random.default_rng(1)
        s = interval_pi()
        witnesses = 0
        while witnesses < 100:
            split = SignatureSplit(p1=int(rng.integers(1, 3)), p2=int(rng.integers(1, 3)))
            d1_1, d1_0 = monotone_diagonal(rng, split.p1)
            d2_1, d2_0 = monotone_diagonal(rng, split.p2)
            verdict = check_lower_comparison(split, pair(ComparisonRole.LOWER_D, d1_0, d2_0, d1_1, d2_1), s)
            if verdict.outcome != Outcome.WITNESS_FOUND:
                continue
            b0, b1 = diag_assemble(d1_0, d2_0), diag_assemble(d1_1, d2_1)
            path = linear_path(b0, b1)
            if not nondegenerate(split, (b0.entries, b1.entries), default_n_blocks(split, path, s)):
                continue
            self.assertLessEqual(oracle_sfl_endpoint(split, path, s), -1)
            witnesses += 1

    def test_endpoint_swap_duality(self):
        rng = np.random.default_rng(2)
        s = interval_pi()
        for _ in range(50):
            split = SignatureSplit(p1=int(rng.integers(1, 3)), p2=int(rng.integers(1, 3)))
            c1_0, c1_1 = monotone_diagonal(rng, split.p1)
            c2_0, c2_1 = monotone_diagonal(rng, split.p2)
            upper = check_upper_comparison(split, pair(ComparisonRole.UPPER_C, c1_0, c2_0, c1_1, c2_1), s)
            lower = check_lower_comparison(split, pair(ComparisonRole.LOWER_D, c1_1, c2_1, c1_0, c2_0), s)
            self.assertEqual(upper.outcome, lower.outcome)
            self.assertEqual(upper.witness, lower.witness)


class MonotoneCountingTest(absltest.TestCase):

    def test_counts_dominate(self):
        rng = np.random.default_rng(3)
        s = interval_pi()
        for _ in range(100):
            p = int(rng.integers(1, 5))
            low = rng.uniform(-10.0, 10.0, size=(p, p))
            low = np.triu(low) + np.triu(low, 1).T
            g = rng.normal(size=(p, p))
            high = low + gram(g)
            w_high, w_low = eigvalsh(from_array(high)), eigvalsh(from_array(low))
            for alpha in s.take(6):
                self.assertGreaterEqual(count_above(w_high, alpha), count_above(w_low, alpha))


class ComparisonPrincipleTest(absltest.TestCase):

    def test_flow_ordered_by_endpoints(self):
        # C_0 <= B_0 and B_1 <= C_1 imply sfl(C) <= sfl(B)
        rng = np.random.default_rng(4)
        s = interval_pi()
        checked = 0
        while checked < 50:
            p1 = int(rng.integers(1, 3))
            split = SignatureSplit(p1=p1, p2=int(rng.integers(1, 3)))
            p = split.p
            b0, b1 = (np.triu(m) + np.triu(m, 1).T for m in rng.uniform(-10.0, 10.0, size=(2, p, p)))
            g0, g1 = rng.normal(size=(2, p, p))
            c0, c1 = b0 - gram(g0), b1 + gram(g1)
            n_blocks = max(default_n_blocks(split, linear_path(b0, b1), s),
                           default_n_blocks(split, linear_path(c0, c1), s))
            if not nondegenerate(split, (b0, b1, c0, c1), n_blocks):
                continue
            self.assertLessEqual(
                oracle_sfl_endpoint(split, linear_path(c0, c1), s, n_blocks),
                oracle_sfl_endpoint(split, linear_path(b0, b1), s, n_blocks),
            )
            checked += 1


class EnvelopeBoundsTest(absltest.TestCase):

    def test_worked_example(self):
        env = envelope_bounds([from_array(B0)], [from_array(B1)])
        self.assertAlmostEqual(env.beta_0, 4.0, delta=1e-10)
        self.assertAlmostEqual(env.gamma_0, 9.0, delta=1e-10)
        self.assertAlmostEqual(env.gamma_1, (math.sqrt(29.0) - 1) / 2, delta=1e-10)
        self.assertAlmostEqual(env.beta_1, (-1 - math.sqrt(29.0)) / 2, delta=1e-10)

    def test_zero_matrix(self):
        env = envelope_bounds([np.zeros((2, 2))], [np.zeros((2, 2))])
        self.assertEqual((env.beta_0, env.gamma_0, env.beta_1, env.gamma_1), (0.0, 0.0, 0.0, 0.0))

    def test_extremes_over_samples(self):
        env = envelope_bounds([np.diag([1.0, 2.0]), np.diag([-1.0, 5.0])], [np.eye(2)])
        self.assertAlmostEqual(env.beta_0, -1.0, delta=1e-12)
        self.assertAlmostEqual(env.gamma_0, 5.0, delta=1e-12)

    def test_empty(self):
        with self.assertRaises(EmptyInput):
            envelope_bounds([], [np.eye(2)])


class CheckEnvelopeTest(parameterized.TestCase):

    def test_worked_example_fails(self):
        env = envelope_bounds([from_array(B0)], [from_array(B1)])
        verdict = check_envelope(SPLIT_11, env, interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_witness(self):
        verdict = check_envelope(SPLIT_11, EnvelopeBounds(gamma_0=5.0, gamma_1=1.0, beta_0=5.0, beta_1=1.0),
                                 interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual((verdict.witness.k, verdict.witness.alpha_k), (2, 4.0))
        self.assertEqual(verdict.clause, "envelope (i)")

    def test_empty_interval(self):
        verdict = check_envelope(SPLIT_11, EnvelopeBounds(gamma_0=3.0, gamma_1=3.0, beta_0=3.0, beta_1=3.0),
                                 interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_second_clause(self):
        verdict = check_envelope(SPLIT_11, EnvelopeBounds(gamma_0=-5.0, gamma_1=-1.0, beta_0=-6.0, beta_1=-1.5),
                                 interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, "envelope (ii)")
        self.assertEqual(verdict.witness.block, 2)

    def test_dominated_by_scalar_comparison(self):
        rng = np.random.default_rng(5)
        s = interval_pi()
        for _ in range(100):
            beta_0, gamma_1, gamma_0, beta_1 = rng.uniform(-12.0, 12.0, size=4)
            env = EnvelopeBounds(gamma_0=max(gamma_0, beta_0), gamma_1=max(gamma_1, beta_1),
                                 beta_0=beta_0, beta_1=beta_1)
            verdict = check_envelope(SPLIT_11, env, s)
            if verdict.outcome != Outcome.WITNESS_FOUND:
                continue
            if verdict.clause == "envelope (i)":
                scalar = pair(ComparisonRole.UPPER_C, [[env.beta_0]], [[env.beta_0]], [[env.gamma_1]], [[env.gamma_1]])
                comparison = check_upper_comparison(SPLIT_11, scalar, s)
            else:
                scalar = pair(ComparisonRole.LOWER_D, [[env.gamma_0]], [[env.gamma_0]], [[env.beta_1]], [[env.beta_1]])
                comparison = check_lower_comparison(SPLIT_11, scalar, s)
            self.assertEqual(comparison.outcome, Outcome.WITNESS_FOUND)


class Check2x2ConditionsTest(parameterized.TestCase):

    def bounds(self, b11, b22, b12=0.0):
        return Bounds2x2(min_b11=b11, max_b11=b11, min_b22=b22, max_b22=b22, max_abs_b12=b12)

    def test_constant_reduction(self):
        verdict = check_2x2_conditions(self.bounds(5.0, 3.0), self.bounds(1.0, 3.0), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, "2x2 (i)")
        self.assertEqual(verdict.witness.k, 2)

    def test_equal_bounds(self):
        verdict = check_2x2_conditions(self.bounds(5.0, 3.0), self.bounds(5.0, 3.0), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_coupling_closes_gap(self):
        verdict = check_2x2_conditions(self.bounds(5.0, 3.0, 2.0), self.bounds(1.0, 3.0, 2.0), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_reversed_clause(self):
        verdict = check_2x2_conditions(self.bounds(1.0, 3.0), self.bounds(5.0, 3.0), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, "2x2 (iii)")

    def test_negative_component(self):
        # -4 lies in (hi2(1), lo2(0)) = (-6, -2) and b11 does not increase
        verdict = check_2x2_conditions(self.bounds(0.5, -2.0), self.bounds(0.5, -6.0), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, "2x2 (ii)")

    @parameterized.named_parameters(
        ("b11_range_dips_below", 0.0, Outcome.NO_WITNESS),
        ("b11_range_stays_above", 1.0, Outcome.WITNESS_FOUND),
    )
    def test_negative_component_orders_by_smallest_b11(self, min_b11_0, outcome):
        # clause (ii) compares min b11 at lambda = 0, not max, against max b11 at lambda = 1
        bounds_0 = Bounds2x2(min_b11=min_b11_0, max_b11=2.0, min_b22=-2.0, max_b22=-2.0, max_abs_b12=0.0)
        verdict = check_2x2_conditions(bounds_0, self.bounds(1.0, -6.0), interval_pi())
        self.assertEqual(verdict.outcome, outcome)
        if outcome == Outcome.WITNESS_FOUND:
            self.assertEqual(verdict.clause, "2x2 (ii)")
            self.assertEqual(verdict.witness.k, 2)

    def test_ordering_within_tolerance(self):
        verdict = check_2x2_conditions(self.bounds(5.0, 3.0 - 1e-8), self.bounds(1.0, 3.0), interval_pi())
        self.assertEqual(verdict.outcome, Outcome.INDETERMINATE)


if __name__ == '__main__':
    absltest.main()
