"""Unit tests for `report.py`."""
import json

from absl.testing import absltest
from absl.testing import parameterized

from sflx.cli.report import *
from sflx.dataclasses import BifurcationVerdict, Outcome, Report, ReportWarning, Witness

WITNESS = Witness(j=1, k=2, alpha_k=4.0, interval=(1.0, 5.0), block=1, margin=1.0)
BOUNDARY = ReportWarning(kind="boundary_singular", message="alpha_1 is an eigenvalue at lambda = 1", k=1, margin=0.0)


def verdict_report(outcome, witness=None, warnings=()):
    return Report(
        mode="compare_upper",
        provenance="comparison.check_upper_comparison: upper comparison",
        verdict=BifurcationVerdict(outcome=outcome, witness=witness, clause="upper comparison", warnings=warnings),
        warnings=warnings,
    )


class ExitCodeTest(parameterized.TestCase):

    @parameterized.named_parameters(
        ("witness", verdict_report(Outcome.WITNESS_FOUND, WITNESS), EXIT_COMPUTED),
        ("no_witness", verdict_report(Outcome.NO_WITNESS), EXIT_COMPUTED),
        ("indeterminate", verdict_report(Outcome.INDETERMINATE, WITNESS), EXIT_INDETERMINATE),
        ("integer_result", Report(mode="index", provenance="index_core.index: index formula", result=0), EXIT_COMPUTED),
    )
    def test_exit_code(self, report, expected):
        self.assertEqual(exit_code(report), expected)

    @parameterized.named_parameters(
        ("error_wins", [0, 2, 1, 0], 1),
        ("indeterminate_beats_computed", [0, 2, 0], 2),
        ("all_computed", [0, 0], 0),
        ("empty", [], 0),
    )
    def test_worst_exit_code(self, codes, expected):
        self.assertEqual(worst_exit_code(codes), expected)


class RenderJsonTest(absltest.TestCase):

    def test_witness_and_warnings(self):
        obj = json.loads(render_json(verdict_report(Outcome.WITNESS_FOUND, WITNESS, (BOUNDARY,))))
        self.assertEqual(obj["verdict"]["outcome"], "witness_found")
        self.assertEqual((obj["verdict"]["witness"]["j"], obj["verdict"]["witness"]["k"]), (1, 2))
        self.assertEqual(obj["verdict"]["witness"]["alpha_k"], 4.0)
        self.assertEqual(obj["warnings"], [{"kind": "boundary_singular", "k": 1, "margin": 0.0, "message": BOUNDARY.message}])
        self.assertEqual(obj["exit_code"], 0)

    def test_non_finite_numbers_become_null(self):
        witness = WITNESS.replace(interval=(0.0, float("inf")), margin=float("inf"))
        text = render_json(verdict_report(Outcome.WITNESS_FOUND, witness))
        self.assertNotIn("Infinity", text)
        obj = json.loads(text)
        self.assertEqual(obj["verdict"]["witness"]["interval"], [0.0, None])
        self.assertIsNone(obj["verdict"]["witness"]["margin"])

    def test_integer_result(self):
        obj = json.loads(render_json(Report(mode="sfl", provenance="index_core.spectral_flow: index formula", result=2)))
        self.assertEqual(obj["result"], 2)
        self.assertIsNone(obj["verdict"])

    def test_error(self):
        obj = error_to_dict("bad.json", ValueError("boom"))
        self.assertEqual(obj["error"], {"type": "ValueError", "message": "boom"})
        self.assertEqual(obj["exit_code"], EXIT_ERROR)


class RenderTextTest(absltest.TestCase):

    def test_cites_provenance_and_witness(self):
        text = render_text(verdict_report(Outcome.WITNESS_FOUND, WITNESS, (BOUNDARY,)))
        self.assertIn("provenance: comparison.check_upper_comparison: upper comparison", text)
        self.assertIn("j=1 k=2 alpha_k=4", text)
        self.assertIn("+alpha_k in (1, 5)", text)
        self.assertIn("warning:    boundary_singular k=1", text)
        self.assertTrue(text.endswith("\n"))


if __name__ == '__main__':
    absltest.main()
