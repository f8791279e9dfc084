"""Unit tests for `shrinking.py`."""
import math

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from sflx.criteria.shrinking import *
from sflx.dataclasses import (
    Bounds2x2,
    Definiteness,
    Outcome,
    RadialMonotonicity,
    ShrinkProblem,
    SignatureSplit,
)
from sflx.errors import InvalidSignatureSplit
from sflx.index.index_core import index
from sflx.linalg.symmat import from_array
from sflx.spectra.bessel import bessel_zero
from sflx.spectra.domain_spectra import custom, disc, interval, spectrum

SPLIT_11 = SignatureSplit(p1=1, p2=1)
INTERVAL_PI = interval(math.pi)


def constant_problem(b, domain=INTERVAL_PI, split=SPLIT_11, radius=1.0):
    return ShrinkProblem(split=split, domain=domain, B=from_array(b), radius=radius)


def bounds_problem(bounds, monotonicity, domain=INTERVAL_PI):
    return ShrinkProblem(split=SPLIT_11, domain=domain, bounds=bounds, radial_monotonicity=monotonicity)


def uniform_bounds(b11, b22, b12=0.0):
    return Bounds2x2(min_b11=b11, max_b11=b11, min_b22=b22, max_b22=b22, max_abs_b12=b12)


def nondegenerate(b, n_blocks, threshold=1e-6):
    return all(
        np.min(np.abs(np.linalg.eigvalsh(np.diag([1.0, -1.0]) - b / k ** 2))) >= threshold
        for k in range(1, n_blocks + 1)
    )


class ShrinkVerdictConstantTest(parameterized.TestCase):

    def test_smallest_eigenvalue_clause(self):
        verdict = shrink_verdict_constant(constant_problem(np.diag([2.0, 2.0])))
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, CLAUSE_SMALLEST)
        self.assertEqual((verdict.witness.k, verdict.witness.alpha_k), (1, 1.0))
        self.assertAlmostEqual(verdict.witness.margin, 1.0, delta=1e-12)

    @parameterized.named_parameters(
        ("zero", np.zeros((2, 2))),
        ("small_indefinite", np.diag([0.5, -0.5])),
    )
    def test_no_witness(self, b):
        verdict = shrink_verdict_constant(constant_problem(b))
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)
        self.assertIsNone(verdict.witness)

    def test_straddle_clause(self):
        # mu_1 = -0.5 > -1 and mu_2 = 3 > 1, reduced blocks nonsingular
        verdict = shrink_verdict_constant(constant_problem(np.diag([3.0, -0.5])))
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, CLAUSE_STRADDLE)
        self.assertIn(REDUCED_BLOCK_PROVISO, verdict.provisos)

    def test_straddle_with_singular_block(self):
        # b11 = 4 makes the second reduced block singular
        verdict = shrink_verdict_constant(constant_problem(np.diag([4.0, -0.5])))
        self.assertEqual(verdict.outcome, Outcome.INDETERMINATE)
        self.assertTrue(any(w.kind == "singular_block" for w in verdict.warnings))

    def test_grazing_smallest_eigenvalue(self):
        verdict = shrink_verdict_constant(constant_problem(np.diag([1.0 + 1e-8, 1.0 + 1e-8])))
        self.assertEqual(verdict.outcome, Outcome.INDETERMINATE)

    def test_needs_both_signs(self):
        with self.assertRaises(InvalidSignatureSplit):
            shrink_verdict_constant(constant_problem(np.eye(2), split=SignatureSplit(p1=2, p2=0)))

    def test_smallest_eigenvalue_forces_index(self):
        rng = np.random.default_rng(0)
        s = spectrum(INTERVAL_PI)
        checked = 0
        while checked < 100:
            a = rng.uniform(-10.0, 10.0, size=(2, 2))
            b = np.triu(a) + np.triu(a, 1).T
            b += (1.0 + rng.uniform(0.01, 10.0) - np.linalg.eigvalsh(b)[0]) * np.eye(2)
            if not nondegenerate(b, 12):
                continue
            self.assertLessEqual(index(SPLIT_11, b, s).index, -1)
            verdict = shrink_verdict_constant(constant_problem(b))
            self.assertEqual(verdict.clause, CLAUSE_SMALLEST)
            self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
            checked += 1

    def test_shift_keeps_smallest_eigenvalue_clause(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a = rng.uniform(-5.0, 5.0, size=(2, 2))
            b = np.triu(a) + np.triu(a, 1).T
            if shrink_verdict_constant(constant_problem(b)).clause != CLAUSE_SMALLEST:
                continue
            shifted = shrink_verdict_constant(constant_problem(b + rng.uniform(0.0, 5.0) * np.eye(2)))
            self.assertEqual(shifted.clause, CLAUSE_SMALLEST)
            self.assertEqual(shifted.outcome, Outcome.WITNESS_FOUND)

    @parameterized.named_parameters(
        ("smallest", np.diag([6.0, 5.0])),
        ("straddle", np.diag([13.0, -1.0])),
        ("none", np.diag([2.0, 2.0])),
    )
    def test_scaling_matches_rescaled_spectrum(self, b):
        # U_r with r = 1/2 has alpha_k = 4 k**2
        scaled = shrink_verdict_constant(constant_problem(b, radius=0.5))
        explicit = shrink_verdict_constant(constant_problem(b, domain=custom([4.0 * k * k for k in range(1, 40)])))
        self.assertEqual(scaled.outcome, explicit.outcome)
        self.assertEqual(scaled.clause, explicit.clause)
        self.assertEqual(scaled.witness, explicit.witness)


class ShrinkVerdict2x2Test(parameterized.TestCase):

    def test_disc_example(self):
        r = 0.5
        bounds = Bounds2x2(min_b11=7.0 / r ** 2, max_b11=8.0 / r ** 2, min_b22=1.0, max_b22=2.0, max_abs_b12=0.0)
        verdict = shrink_verdict_2x2(bounds_problem(bounds, RadialMonotonicity.NON_DECREASING, disc(r)))
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, CLAUSE_2X2_I)
        self.assertAlmostEqual(verdict.witness.alpha_k, (bessel_zero(0, 1) / r) ** 2, delta=1e-9)
        self.assertIn(RADIAL_PROVISO, verdict.provisos)

    def test_negative_clause(self):
        verdict = shrink_verdict_2x2(bounds_problem(uniform_bounds(-1.0, -3.0, 0.5), RadialMonotonicity.NON_INCREASING))
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual(verdict.clause, CLAUSE_2X2_II)

    def test_zero_bounds(self):
        verdict = shrink_verdict_2x2(bounds_problem(uniform_bounds(0.0, 0.0), RadialMonotonicity.NON_DECREASING))
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_unknown_monotonicity(self):
        verdict = shrink_verdict_2x2(bounds_problem(uniform_bounds(3.0, 1.0), RadialMonotonicity.UNKNOWN))
        self.assertEqual(verdict.outcome, Outcome.INDETERMINATE)
        self.assertEqual(verdict.warnings[0].kind, "unverified_hypothesis")

    def test_wrong_monotonicity(self):
        verdict = shrink_verdict_2x2(bounds_problem(uniform_bounds(3.0, 1.0), RadialMonotonicity.NON_INCREASING))
        self.assertEqual(verdict.outcome, Outcome.NO_WITNESS)

    def test_needs_split_1_1(self):
        prob = ShrinkProblem(split=SignatureSplit(p1=2, p2=1), domain=INTERVAL_PI, bounds=uniform_bounds(3.0, 1.0))
        with self.assertRaises(InvalidSignatureSplit):
            shrink_verdict_2x2(prob)


class CrossingFormConstantTest(parameterized.TestCase):

    @parameterized.named_parameters(
        ("positive", np.diag([2.0, 3.0]), Definiteness.POSITIVE_DEFINITE, True),
        ("indefinite", np.diag([2.0, -3.0]), Definiteness.INDEFINITE, False),
        ("coupled_positive", [[8.0, -2.0], [-2.0, 5.0]], Definiteness.POSITIVE_DEFINITE, True),
        ("negative", -np.eye(3), Definiteness.NEGATIVE_DEFINITE, True),
        ("singular", np.diag([1.0, 0.0]), Definiteness.DEGENERATE, False),
    )
    def test_examples(self, b, definite, regular):
        report = crossing_form_constant(from_array(b))
        self.assertEqual(report.definite, definite)
        self.assertEqual(report.regular, regular)

    def test_negation_swaps_sign(self):
        rng = np.random.default_rng(2)
        swap = {
            Definiteness.POSITIVE_DEFINITE: Definiteness.NEGATIVE_DEFINITE,
            Definiteness.NEGATIVE_DEFINITE: Definiteness.POSITIVE_DEFINITE,
            Definiteness.INDEFINITE: Definiteness.INDEFINITE,
            Definiteness.DEGENERATE: Definiteness.DEGENERATE,
        }
        for _ in range(50):
            g = rng.normal(size=(3, 3))
            b = g @ g.T * rng.choice([-1.0, 1.0]) + rng.uniform(-1.0, 1.0) * np.eye(3)
            b = (b + b.T) / 2
            self.assertEqual(crossing_form_constant(-b).definite, swap[crossing_form_constant(b).definite])


class ShrinkIndexTest(absltest.TestCase):

    def test_matches_index(self):
        s = spectrum(INTERVAL_PI)
        report = shrink_index(SPLIT_11, np.diag([2.0, 2.0]), s)
        self.assertEqual(report.index, -1)
        self.assertEqual(report.index, index(SPLIT_11, np.diag([2.0, 2.0]), s).index)

    def test_needs_both_signs(self):
        with self.assertRaises(InvalidSignatureSplit):
            shrink_index(SignatureSplit(p1=0, p2=2), np.eye(2), spectrum(INTERVAL_PI))

    def test_index_verdict(self):
        verdict = shrink_verdict_index(constant_problem(np.diag([2.0, 2.0])))
        self.assertEqual(verdict.outcome, Outcome.WITNESS_FOUND)
        self.assertEqual((verdict.witness.k, verdict.witness.interval), (1, (0.0, 4.0)))
        self.assertEqual(shrink_verdict_index(constant_problem(np.zeros((2, 2)))).outcome, Outcome.NO_WITNESS)

    def test_index_verdict_singular(self):
        verdict = shrink_verdict_index(constant_problem(np.diag([1.0, 0.0])))
        self.assertEqual(verdict.outcome, Outcome.INDETERMINATE)


if __name__ == '__main__':
    absltest.main()
