"""Problem files: strict JSON schema, validation and the inverse serialisation.

A problem file looks like::

    {
      "schema_version": 1,
      "mode": "sfl",
      "domain": {"kind": "interval", "length": 3.141592653589793},
      "signature": {"p1": 1, "p2": 1},
      "data": {"B0": [[8, -2], [-2, 5]], "B1": [[-3, 1], [1, 2]]},
      "tolerances": {"witness_tol": 1e-7},
      "oracle": {"n_blocks": 12, "n_samples": 256}
    }

`tolerances` and `oracle` are optional. `data` holds exactly the fields the mode needs.
"""
import json
import math
from typing import Any, Dict, FrozenSet, List, Tuple

import numpy as np
from box import Box

from sflx.dataclasses import (
    SCHEMA_VERSION,
    SYMMETRY_TOL,
    Bounds2x2,
    DomainKind,
    DomainSpec,
    ProblemFile,
    RadialMonotonicity,
    SignatureSplit,
)
from sflx.errors import DimensionMismatch, InvalidDomain, InvalidSignatureSplit, SchemaError
from sflx.linalg.symmat import from_array
from sflx.spectra.domain_spectra import box, custom, disc, interval

MODES = (
    "index",
    "sfl",
    "compare_upper",
    "compare_lower",
    "envelope",
    "cond2x2",
    "shrink_constant",
    "shrink_2x2",
    "oracle",
)
PROFILE_KINDS = ("constant", "polynomial", "tabulated")
BOUNDS_KEYS = ("min_b11", "max_b11", "min_b22", "max_b22", "max_abs_b12")
ENVELOPE_KEYS = ("gamma_0", "gamma_1", "beta_0", "beta_1")
TOLERANCE_KEYS = ("zero_tol", "witness_tol", "truncation_margin")
ORACLE_KEYS = ("n_blocks", "n_samples")
TOP_LEVEL_REQUIRED = frozenset({"schema_version", "mode", "domain", "signature", "data"})
TOP_LEVEL_OPTIONAL = frozenset({"tolerances", "oracle"})
COMPARISON_KEYS = frozenset({"block_1_0", "block_2_0", "block_1_1", "block_2_1"})


def _with_radius(keys: FrozenSet[str]) -> Tuple[FrozenSet[str], ...]:
    return keys, keys | {"radius"}


# Accepted key sets of `data` per mode; the file must match one of them exactly.
MODE_KEYS: Dict[str, Tuple[FrozenSet[str], ...]] = {
    "index": (frozenset({"B"}),),
    "sfl": (frozenset({"B0", "B1"}),),
    "compare_upper": (COMPARISON_KEYS,),
    "compare_lower": (COMPARISON_KEYS,),
    "envelope": (frozenset({"samples_0", "samples_1"}), frozenset({"envelope"})),
    "cond2x2": (frozenset({"bounds_0", "bounds_1"}),),
    "shrink_constant": _with_radius(frozenset({"B"})),
    "shrink_2x2": _with_radius(frozenset({"bounds", "radial_monotonicity"})),
    "oracle": (frozenset({"B0", "B1"}), frozenset({"sampled"}), frozenset({"polynomial"}), frozenset({"field"})),
}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number(value: Any, name: str) -> float:
    if not _is_number(value) or not math.isfinite(value):
        raise SchemaError(f"{name} must be a finite number, got {value!r}")
    return float(value)


def _integer(value: Any, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise SchemaError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _mapping(value: Any, name: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{name} must be an object, got {type(value).__name__}")
    return value


def _check_keys(obj: dict, name: str, required, optional=()) -> None:
    missing = set(required) - set(obj)
    extra = set(obj) - set(required) - set(optional)
    if missing:
        raise SchemaError(f"{name} is missing {sorted(missing)}")
    if extra:
        raise SchemaError(f"{name} has unexpected fields {sorted(extra)}")


def _numbers(value: Any, name: str) -> List[float]:
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{name} must be a nonempty array of numbers")
    return [_number(v, f"{name}[{i}]") for i, v in enumerate(value)]


def _matrix(value: Any, dim: int, name: str) -> List[List[float]]:
    """Row-major square matrix of size dim, symmetrised when its asymmetry is below SYMMETRY_TOL."""
    if not isinstance(value, list) or any(not isinstance(row, list) for row in value):
        raise SchemaError(f"{name} must be an array of arrays of numbers")
    rows = [[_number(v, name) for v in row] for row in value]
    if len(rows) != dim or any(len(row) != dim for row in rows):
        raise SchemaError(f"{name} must be {dim} x {dim}")
    try:
        m = from_array(np.asarray(rows, dtype=np.float64), sym_tol=SYMMETRY_TOL)
    except DimensionMismatch as e:
        raise SchemaError(f"{name}: {e}") from e
    return np.asarray(m.entries).tolist()


def _matrices(value: Any, dim: int, name: str) -> List[List[List[float]]]:
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{name} must be a nonempty array of matrices")
    return [_matrix(m, dim, f"{name}[{i}]") for i, m in enumerate(value)]


def _bounds(value: Any, name: str) -> Dict[str, float]:
    obj = _mapping(value, name)
    _check_keys(obj, name, BOUNDS_KEYS)
    bounds = {k: _number(obj[k], f"{name}.{k}") for k in BOUNDS_KEYS}
    try:
        Bounds2x2(**bounds)
    except ValueError as e:
        raise SchemaError(f"{name}: {e}") from e
    return bounds


def _profile(value: Any, name: str) -> Dict[str, Any]:
    """Entry profile: a bare number, or {"kind": ..., "values": [...]}."""
    if _is_number(value):
        return {"kind": "constant", "values": [_number(value, name)]}
    obj = _mapping(value, name)
    _check_keys(obj, name, ("kind", "values"))
    if obj["kind"] not in PROFILE_KINDS:
        raise SchemaError(f"{name}.kind must be one of {PROFILE_KINDS}, got {obj['kind']!r}")
    return {"kind": obj["kind"], "values": _numbers(obj["values"], f"{name}.values")}


def _profiles(value: Any, dim: int, name: str) -> List[List[Dict[str, Any]]]:
    if not isinstance(value, list) or len(value) != dim or any(
        not isinstance(row, list) or len(row) != dim for row in value
    ):
        raise SchemaError(f"{name} must be a {dim} x {dim} table of profiles")
    table = [[_profile(v, f"{name}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(value)]
    for i in range(dim):
        for j in range(i):
            if table[i][j] != table[j][i]:
                raise SchemaError(f"{name} profiles ({i}, {j}) and ({j}, {i}) differ")
    return table


def parse_domain(value: Any) -> DomainSpec:
    obj = _mapping(value, "domain")
    if "kind" not in obj:
        raise SchemaError("domain is missing ['kind']")
    try:
        kind = DomainKind(obj["kind"])
    except ValueError as e:
        raise InvalidDomain(f"Unknown domain kind {obj['kind']!r}") from e
    if kind == DomainKind.INTERVAL:
        _check_keys(obj, "domain", ("kind", "length"))
        return interval(_number(obj["length"], "domain.length"))
    if kind == DomainKind.BOX:
        _check_keys(obj, "domain", ("kind", "lengths"))
        return box(*_numbers(obj["lengths"], "domain.lengths"))
    if kind == DomainKind.DISC:
        _check_keys(obj, "domain", ("kind", "radius"))
        return disc(_number(obj["radius"], "domain.radius"))
    _check_keys(obj, "domain", ("kind", "values"))
    return custom(_numbers(obj["values"], "domain.values"))


def domain_to_dict(spec: DomainSpec) -> Dict[str, Any]:
    kind = DomainKind(spec.kind)
    if kind == DomainKind.INTERVAL:
        return {"kind": kind.value, "length": spec.lengths[0]}
    if kind == DomainKind.BOX:
        return {"kind": kind.value, "lengths": list(spec.lengths)}
    if kind == DomainKind.DISC:
        return {"kind": kind.value, "radius": spec.radius}
    return {"kind": kind.value, "values": list(spec.values)}


def _parse_split(value: Any) -> SignatureSplit:
    obj = _mapping(value, "signature")
    _check_keys(obj, "signature", ("p1", "p2"))
    return SignatureSplit(p1=_integer(obj["p1"], "signature.p1", 0), p2=_integer(obj["p2"], "signature.p2", 0))


def _parse_data(mode: str, split: SignatureSplit, domain: DomainSpec, obj: dict) -> Dict[str, Any]:
    keys = frozenset(obj)
    if keys not in MODE_KEYS[mode]:
        expected = " or ".join(str(sorted(k)) for k in MODE_KEYS[mode])
        raise SchemaError(f"data for mode {mode} must have exactly the fields {expected}, got {sorted(keys)}")
    p = split.p
    data: Dict[str, Any] = {}
    for key, value in obj.items():
        name = f"data.{key}"
        if key in ("B", "B0", "B1"):
            data[key] = _matrix(value, p, name)
        elif key in COMPARISON_KEYS:
            block_dim = split.p1 if key.startswith("block_1") else split.p2
            if block_dim < 1:
                raise InvalidSignatureSplit(f"Mode {mode} needs p1, p2 >= 1, got ({split.p1}, {split.p2})")
            data[key] = _matrix(value, block_dim, name)
        elif key in ("samples_0", "samples_1"):
            data[key] = _matrices(value, p, name)
        elif key == "envelope":
            env = _mapping(value, name)
            _check_keys(env, name, ENVELOPE_KEYS)
            data[key] = {k: _number(env[k], f"{name}.{k}") for k in ENVELOPE_KEYS}
        elif key in ("bounds", "bounds_0", "bounds_1"):
            data[key] = _bounds(value, name)
        elif key == "radial_monotonicity":
            try:
                data[key] = RadialMonotonicity(value).value
            except ValueError as e:
                raise SchemaError(f"{name} must be one of {[m.value for m in RadialMonotonicity]}") from e
        elif key == "radius":
            radius = _number(value, name)
            if radius <= 0:
                raise InvalidDomain(f"Shrinking radius must be positive, got {radius}")
            data[key] = radius
        elif key == "sampled":
            sampled = _mapping(value, name)
            _check_keys(sampled, name, ("lambdas", "matrices"))
            lambdas = _numbers(sampled["lambdas"], f"{name}.lambdas")
            matrices = _matrices(sampled["matrices"], p, f"{name}.matrices")
            if len(lambdas) != len(matrices) or len(lambdas) < 2:
                raise SchemaError(f"{name} needs at least two (lambda, matrix) pairs of equal count")
            if lambdas[0] != 0.0 or lambdas[-1] != 1.0 or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
                raise SchemaError(f"{name}.lambdas must increase from 0 to 1")
            data[key] = {"lambdas": lambdas, "matrices": matrices}
        elif key == "polynomial":
            data[key] = _matrices(value, p, name)
        elif key == "field":
            field = _mapping(value, name)
            _check_keys(field, name, ("entries_0", "entries_1"))
            if DomainKind(domain.kind) != DomainKind.INTERVAL:
                raise InvalidDomain("x-dependent fields are supported on interval domains only")
            data[key] = {e: _profiles(field[e], p, f"{name}.{e}") for e in ("entries_0", "entries_1")}
    return data


def _parse_section(value: Any, name: str, keys, minimums) -> Dict[str, Any]:
    obj = _mapping(value, name)
    _check_keys(obj, name, (), keys)
    out = {}
    for key, v in obj.items():
        if v is None:
            continue
        if key in minimums:
            out[key] = _integer(v, f"{name}.{key}", minimums[key])
        else:
            out[key] = _number(v, f"{name}.{key}")
            if out[key] <= 0:
                raise SchemaError(f"{name}.{key} must be positive, got {out[key]}")
    return out


def problem_from_dict(obj: Any) -> ProblemFile:
    obj = _mapping(obj, "problem")
    _check_keys(obj, "problem", TOP_LEVEL_REQUIRED, TOP_LEVEL_OPTIONAL)
    version = obj["schema_version"]
    if isinstance(version, bool) or not isinstance(version, int) or version != SCHEMA_VERSION:
        raise SchemaError(f"Unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    mode = obj["mode"]
    if mode not in MODES:
        raise SchemaError(f"mode must be one of {MODES}, got {mode!r}")
    domain = parse_domain(obj["domain"])
    split = _parse_split(obj["signature"])
    data = _parse_data(mode, split, domain, _mapping(obj["data"], "data"))
    tolerances = _parse_section(obj.get("tolerances", {}), "tolerances", TOLERANCE_KEYS, {})
    oracle = _parse_section(obj.get("oracle", {}), "oracle", ORACLE_KEYS, {"n_blocks": 1, "n_samples": 2})
    return ProblemFile(
        schema_version=version,
        mode=mode,
        domain=domain,
        split=split,
        data=Box(data, frozen_box=True),
        tolerances=Box(tolerances, frozen_box=True),
        oracle=Box(oracle, frozen_box=True),
    )


def parse_problem(text) -> ProblemFile:
    """Parse and validate a problem file.

    Args:
        text: UTF-8 JSON (bytes or str)

    Returns:
        ProblemFile with every matrix exactly symmetric

    Raises:
        SchemaError: Malformed JSON, missing or extra fields, wrong shapes
        AsymmetryError: A matrix is asymmetric beyond SYMMETRY_TOL
        InvalidDomain: Nonpositive domain sizes or a malformed custom spectrum
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SchemaError(f"Problem file is not UTF-8: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Problem file is not valid JSON: {e}") from e
    return problem_from_dict(obj)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def problem_to_dict(problem: ProblemFile) -> Dict[str, Any]:
    obj = {
        "schema_version": problem.schema_version,
        "mode": problem.mode,
        "domain": domain_to_dict(problem.domain),
        "signature": {"p1": problem.split.p1, "p2": problem.split.p2},
        "data": _plain(problem.data),
    }
    if problem.tolerances:
        obj["tolerances"] = _plain(problem.tolerances)
    if problem.oracle:
        obj["oracle"] = _plain(problem.oracle)
    return obj


def serialize_problem(problem: ProblemFile) -> bytes:
    """Inverse of `parse_problem`: parse_problem(serialize_problem(p)) == p."""
    return (json.dumps(problem_to_dict(problem), indent=2) + "\n").encode("utf-8")
