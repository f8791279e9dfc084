"""Unit tests for `problem.py`."""
import json
import math
import pathlib

from absl.testing import absltest
from absl.testing import parameterized

from sflx.cli.problem import *
from sflx.dataclasses import DomainKind, SignatureSplit
from sflx.errors import AsymmetryError, InvalidDomain, InvalidSignatureSplit, SchemaError

PROBLEMS = pathlib.Path(__file__).resolve().parent.parent / "data" / "problems"


def problem_dict(mode="index", data=None, p1=1, p2=1, **extra):
    obj = {
        "schema_version": 1,
        "mode": mode,
        "domain": {"kind": "interval", "length": math.pi},
        "signature": {"p1": p1, "p2": p2},
        "data": data if data is not None else {"B": [[0.0, 0.0], [0.0, 0.0]]},
    }
    obj.update(extra)
    return obj


def parse(obj):
    return parse_problem(json.dumps(obj).encode("utf-8"))


class ParseProblemTest(parameterized.TestCase):

    def test_shipped_example(self):
        problem = parse_problem((PROBLEMS / "paper_sec5.json").read_bytes())
        self.assertEqual(problem.mode, "sfl")
        self.assertEqual(problem.split, SignatureSplit(p1=1, p2=1))
        self.assertEqual(DomainKind(problem.domain.kind), DomainKind.INTERVAL)
        self.assertEqual(problem.domain.lengths, (math.pi,))
        self.assertEqual([list(row) for row in problem.data.B0], [[8.0, -2.0], [-2.0, 5.0]])
        self.assertEqual([list(row) for row in problem.data.B1], [[-3.0, 1.0], [1.0, 2.0]])

    def test_minimal_index_file(self):
        problem = parse(problem_dict())
        self.assertEqual(problem.mode, "index")
        self.assertEqual(len(problem.tolerances), 0)
        self.assertEqual(len(problem.oracle), 0)

    def test_accepts_str(self):
        self.assertEqual(parse_problem(json.dumps(problem_dict())).mode, "index")

    def test_small_asymmetry_is_averaged(self):
        problem = parse(problem_dict(data={"B": [[1.0, 2.0], [2.0 + 1e-13, 1.0]]}))
        self.assertEqual(problem.data.B[0][1], problem.data.B[1][0])

    def test_bare_number_profile(self):
        field = {"entries_0": [[1.0, 0.0], [0.0, 1.0]], "entries_1": [[{"kind": "tabulated", "values": [0.0, 1.0]}, 0.0], [0.0, 2.0]]}
        problem = parse(problem_dict(mode="oracle", data={"field": field}))
        self.assertEqual(problem.data.field.entries_0[0][0].kind, "constant")
        self.assertEqual(list(problem.data.field.entries_0[0][0]["values"]), [1.0])
        self.assertEqual(problem.data.field.entries_1[0][0].kind, "tabulated")

    def test_optional_sections(self):
        problem = parse(problem_dict(tolerances={"witness_tol": 1e-6}, oracle={"n_blocks": 4, "n_samples": 16}))
        self.assertEqual(problem.tolerances.witness_tol, 1e-6)
        self.assertEqual((problem.oracle.n_blocks, problem.oracle.n_samples), (4, 16))

    @parameterized.named_parameters(
        ("dimension_mismatch", problem_dict(data={"B": [[0.0]]})),
        ("ragged_matrix", problem_dict(data={"B": [[0.0, 0.0], [0.0]]})),
        ("missing_data_field", problem_dict(mode="sfl", data={"B0": [[0.0, 0.0], [0.0, 0.0]]})),
        ("extra_data_field", problem_dict(data={"B": [[0.0, 0.0], [0.0, 0.0]], "B1": [[0.0, 0.0], [0.0, 0.0]]})),
        ("extra_top_level_field", problem_dict(comment="hello")),
        ("unknown_mode", problem_dict(mode="bifurcate")),
        ("wrong_schema_version", dict(problem_dict(), schema_version=2)),
        ("boolean_entry", problem_dict(data={"B": [[True, 0.0], [0.0, 0.0]]})),
        ("string_entry", problem_dict(data={"B": [["1", 0.0], [0.0, 0.0]]})),
        ("negative_p1", problem_dict(p1=-1)),
        ("inconsistent_bounds", problem_dict(
            mode="cond2x2",
            data={
                "bounds_0": {"min_b11": 2.0, "max_b11": 1.0, "min_b22": 0.0, "max_b22": 0.0, "max_abs_b12": 0.0},
                "bounds_1": {"min_b11": 0.0, "max_b11": 0.0, "min_b22": 0.0, "max_b22": 0.0, "max_abs_b12": 0.0},
            },
        )),
        ("bad_monotonicity", problem_dict(
            mode="shrink_2x2",
            data={
                "bounds": {"min_b11": 0.0, "max_b11": 0.0, "min_b22": 0.0, "max_b22": 0.0, "max_abs_b12": 0.0},
                "radial_monotonicity": "sideways",
            },
        )),
        ("sampled_not_ending_at_one", problem_dict(
            mode="oracle",
            data={"sampled": {"lambdas": [0.0, 0.5], "matrices": [[[0.0, 0.0], [0.0, 0.0]]] * 2}},
        )),
        ("oracle_samples_below_two", problem_dict(oracle={"n_samples": 1})),
        ("negative_tolerance", problem_dict(tolerances={"witness_tol": -1.0})),
        ("unknown_tolerance", problem_dict(tolerances={"eps": 1.0})),
    )
    def test_schema_errors(self, obj):
        with self.assertRaises(SchemaError):
            parse(obj)

    def test_invalid_json(self):
        with self.assertRaises(SchemaError):
            parse_problem(b"{\"schema_version\": 1,")

    def test_asymmetric_matrix(self):
        with self.assertRaises(AsymmetryError):
            parse(problem_dict(data={"B": [[1.0, 2.0], [2.5, 1.0]]}))

    @parameterized.named_parameters(
        ("negative_length", {"kind": "interval", "length": -1.0}),
        ("zero_box_side", {"kind": "box", "lengths": [1.0, 0.0]}),
        ("unknown_kind", {"kind": "torus", "radius": 1.0}),
        ("decreasing_custom", {"kind": "custom", "values": [2.0, 1.0]}),
    )
    def test_invalid_domain(self, domain):
        with self.assertRaises(InvalidDomain):
            parse(dict(problem_dict(), domain=domain))

    def test_field_needs_interval(self):
        field = {"entries_0": [[0.0, 0.0], [0.0, 0.0]], "entries_1": [[0.0, 0.0], [0.0, 0.0]]}
        obj = dict(problem_dict(mode="oracle", data={"field": field}), domain={"kind": "disc", "radius": 1.0})
        with self.assertRaises(InvalidDomain):
            parse(obj)

    def test_comparison_needs_both_blocks(self):
        data = {"block_1_0": [[1.0]], "block_2_0": [], "block_1_1": [[1.0]], "block_2_1": []}
        with self.assertRaises(InvalidSignatureSplit):
            parse(problem_dict(mode="compare_upper", data=data, p1=1, p2=0))


class SerializeProblemTest(parameterized.TestCase):

    @parameterized.named_parameters(
        (path.stem, path.name) for path in sorted(PROBLEMS.glob("*.json"))
    )
    def test_shipped_round_trip(self, name):
        problem = parse_problem((PROBLEMS / name).read_bytes())
        self.assertEqual(parse_problem(serialize_problem(problem)), problem)

    @parameterized.named_parameters(
        ("box_domain", dict(problem_dict(), domain={"kind": "box", "lengths": [1.0, 2.5]})),
        ("custom_domain", dict(problem_dict(), domain={"kind": "custom", "values": [1.0, 4.0, 4.0]})),
        ("tolerances", problem_dict(tolerances={"zero_tol": 1e-10, "truncation_margin": 1.5}, oracle={"n_blocks": 3})),
        ("sampled_path", problem_dict(
            mode="oracle",
            data={"sampled": {"lambdas": [0.0, 0.3, 1.0], "matrices": [[[1.0, 0.1], [0.1, 1.0]]] * 3}},
        )),
        ("polynomial_path", problem_dict(mode="oracle", data={"polynomial": [[[1.0, 0.0], [0.0, 1.0]]]})),
        ("shrink_radius", problem_dict(mode="shrink_constant", data={"B": [[0.5, 0.25], [0.25, 1.0 / 3.0]], "radius": 0.7})),
    )
    def test_round_trip(self, obj):
        problem = parse(obj)
        self.assertEqual(parse_problem(serialize_problem(problem)), problem)

    def test_serialized_is_utf8_json(self):
        problem = parse(problem_dict())
        obj = json.loads(serialize_problem(problem).decode("utf-8"))
        self.assertEqual(obj["signature"], {"p1": 1, "p2": 1})
        self.assertNotIn("tolerances", obj)


if __name__ == '__main__':
    absltest.main()
