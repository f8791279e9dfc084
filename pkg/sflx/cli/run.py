"""Command line front end.

Usage:
    python -m sflx.cli.run sfl --problem sflx/data/problems/paper_sec5.json
    python -m sflx.cli.run curves --problem PROBLEM.json --samples 64 --out curves.csv
    python -m sflx.cli.run spectrum --domain disc --radius 0.5 --n_values 8
    python -m sflx.cli.run run --batch problems/ --jobs 4

Subcommands `index`, `sfl`, `compare`, `cond2x2`, `shrink` and `oracle` run a problem file whose mode
belongs to the subcommand (`oracle` also accepts sfl problems and evaluates them with the Galerkin
oracle). `run` accepts any mode.
"""
import json
import pathlib
import sys
import timeit
from typing import Callable, Dict, Optional, Sequence, TextIO, Union

import absl
import numpy as np
import pandas as pd
from absl import app, flags, logging
from box import Box
from joblib import Parallel, delayed

import sflx.parameter_flags  # noqa: F401
from sflx.cli.problem import domain_to_dict, parse_domain, parse_problem, problem_to_dict
from sflx.cli.report import (
    EXIT_ERROR,
    error_to_dict,
    exit_code,
    render_json,
    render_text,
    worst_exit_code,
)
from sflx.criteria.comparison import (
    check_2x2_conditions,
    check_envelope,
    check_lower_comparison,
    check_upper_comparison,
    envelope_bounds,
)
from sflx.criteria.shrinking import (
    CLAUSE_2X2_I,
    CLAUSE_2X2_II,
    CLAUSE_SMALLEST,
    CLAUSE_STRADDLE,
    problem_spectrum,
    shrink_index,
    shrink_verdict_2x2,
    shrink_verdict_constant,
)
from sflx.dataclasses import (
    N_SAMPLES,
    TRUNCATION_MARGIN,
    WITNESS_TOL,
    Bounds2x2,
    ComparisonPair,
    ComparisonRole,
    EnvelopeBounds,
    ProblemFile,
    RadialMonotonicity,
    Report,
    ReportWarning,
    ShrinkProblem,
)
from sflx.errors import SchemaError, SFLXError
from sflx.index.index_core import index, index_bifurcation_verdict, spectral_flow
from sflx.linalg.symmat import from_array
from sflx.oracle.galerkin import default_n_blocks, oracle_eigen_curves, oracle_sfl_crossings, oracle_sfl_endpoint
from sflx.oracle.paths import CoefficientField1D, EntryProfile, linear_path, polynomial_path, sampled_path
from sflx.spectra.domain_spectra import DomainSpectrum, spectrum

FLAGS = flags.FLAGS

CURVE_COLUMNS = ["lambda", "block_k", "eig_index", "value"]
SUBCOMMAND_MODES = {
    "index": ("index",),
    "sfl": ("sfl",),
    "compare": ("compare_upper", "compare_lower", "envelope"),
    "cond2x2": ("cond2x2",),
    "shrink": ("shrink_constant", "shrink_2x2"),
    "oracle": ("oracle", "sfl"),
    "curves": ("sfl", "oracle"),
}
TAGS_PATH = pathlib.Path(__file__).resolve().parent.parent / "data" / "provenance_tags.json"
PROVENANCE_TAGS = Box(json.loads(TAGS_PATH.read_text()))
SHRINK_CLAUSES = {
    CLAUSE_SMALLEST: "shrink_smallest",
    CLAUSE_STRADDLE: "shrink_straddle",
    CLAUSE_2X2_I: "shrink_2x2_i",
    CLAUSE_2X2_II: "shrink_2x2_ii",
}


def process_config(config: Optional[Union[dict, absl.flags.FlagValues]], **kwargs) -> Box:
    """Allow configuration to be a dict, absl.flags.FlagValues, or kwargs.
    Return a Box that can be indexed like a dict or accessed like an object."""
    config = config or {}
    if isinstance(config, absl.flags.FlagValues):
        config = config.flag_values_dict()
    config = dict(config)
    config.update(kwargs)
    return Box(config)


class TimeIt:
    """Context manager for timing execution of code blocks."""

    def __init__(self, tag):
        self.tag = tag

    def __enter__(self):
        self.start = timeit.default_timer()
        return self

    def __exit__(self, *args):
        self.elapsed_secs = timeit.default_timer() - self.start
        logging.info("%s: Elapsed time=%.2fs", self.tag, self.elapsed_secs)


def with_overrides(problem: ProblemFile, config: Box) -> ProblemFile:
    """Command-line --n_blocks, --samples and --tol take precedence over the problem file."""
    oracle = dict(problem.oracle)
    tolerances = dict(problem.tolerances)
    if config.get("n_blocks") is not None:
        oracle["n_blocks"] = config.n_blocks
    if config.get("samples") is not None:
        oracle["n_samples"] = config.samples
    if config.get("tol") is not None:
        tolerances["witness_tol"] = config.tol
    return problem.replace(oracle=Box(oracle, frozen_box=True), tolerances=Box(tolerances, frozen_box=True))


def _tolerances(problem: ProblemFile) -> Box:
    return Box(
        zero_tol=problem.tolerances.get("zero_tol"),
        witness_tol=problem.tolerances.get("witness_tol", WITNESS_TOL),
        truncation_margin=problem.tolerances.get("truncation_margin", TRUNCATION_MARGIN),
    )


def provenance(operation: str, tag: str, criterion: Optional[str] = None) -> str:
    """`module.operation: <citation tag>`, with the criterion in parentheses when given."""
    cited = f"{operation}: {PROVENANCE_TAGS[tag]}"
    return f"{cited} ({criterion})" if criterion else cited


def _array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def oracle_source(problem: ProblemFile):
    """Matrix path or coefficient field described by an sfl or oracle problem."""
    d = problem.data
    if "B0" in d:
        return linear_path(_array(d.B0), _array(d.B1))
    if "sampled" in d:
        return sampled_path(d.sampled.lambdas, [_array(m) for m in d.sampled.matrices])
    if "polynomial" in d:
        return polynomial_path([_array(c) for c in d.polynomial])

    def profiles(table):
        return tuple(tuple(EntryProfile(kind=e.kind, values=tuple(e["values"])) for e in row) for row in table)

    return CoefficientField1D(
        length=problem.domain.lengths[0], entries_0=profiles(d.field.entries_0), entries_1=profiles(d.field.entries_1)
    )


def _run_index(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    report = index(problem.split, _array(problem.data.B), s, tol.zero_tol, margin=tol.truncation_margin)
    return Report(
        mode=problem.mode,
        provenance=provenance("index_core.index", "index", "index formula"),
        result=report.index,
        warnings=report.warnings,
        details={"truncation_rank": report.truncation_rank, "block_signatures": list(report.block_signatures)},
    )


def _run_sfl(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    b0, b1 = _array(problem.data.B0), _array(problem.data.B1)
    result = spectral_flow(problem.split, b0, b1, s, tol.zero_tol, margin=tol.truncation_margin)
    verdict = index_bifurcation_verdict(problem.split, b0, b1, s, tol.zero_tol)
    return Report(
        mode=problem.mode,
        provenance=provenance("index_core.spectral_flow", "sfl", "index formula"),
        result=result.value,
        verdict=verdict,
        warnings=result.warnings,
        details={"index_0": result.index_0.index, "index_1": result.index_1.index},
    )


def _comparison_runner(role: ComparisonRole) -> Callable:
    check = check_upper_comparison if role == ComparisonRole.UPPER_C else check_lower_comparison
    criterion = "upper comparison" if role == ComparisonRole.UPPER_C else "lower comparison"

    def _run(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
        d = problem.data
        pair = ComparisonPair(
            role=role,
            block_1_0=from_array(d.block_1_0),
            block_2_0=from_array(d.block_2_0),
            block_1_1=from_array(d.block_1_1),
            block_2_1=from_array(d.block_2_1),
        )
        verdict = check(problem.split, pair, s, tol.witness_tol)
        return Report(
            mode=problem.mode,
            provenance=provenance(f"comparison.{check.__name__}", problem.mode, criterion),
            verdict=verdict,
            warnings=verdict.warnings,
        )

    return _run


def _run_envelope(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    d = problem.data
    if "envelope" in d:
        env = EnvelopeBounds(**d.envelope)
    else:
        env = envelope_bounds([_array(m) for m in d.samples_0], [_array(m) for m in d.samples_1])
    verdict = check_envelope(problem.split, env, s, tol.witness_tol)
    return Report(
        mode=problem.mode,
        provenance=provenance("comparison.check_envelope", "envelope", "eigenvalue envelope"),
        verdict=verdict,
        warnings=verdict.warnings,
        details={"envelope": {k: getattr(env, k) for k in ("gamma_0", "gamma_1", "beta_0", "beta_1")}},
    )


def _run_cond2x2(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    verdict = check_2x2_conditions(
        Bounds2x2(**problem.data.bounds_0), Bounds2x2(**problem.data.bounds_1), s, tol.witness_tol
    )
    return Report(
        mode=problem.mode,
        provenance=provenance("comparison.check_2x2_conditions", "cond2x2", verdict.clause),
        verdict=verdict,
        warnings=verdict.warnings,
    )


def _run_shrink_constant(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    b = from_array(_array(problem.data.B))
    prob = ShrinkProblem(split=problem.split, domain=problem.domain, B=b, radius=problem.data.get("radius", 1.0))
    verdict = shrink_verdict_constant(prob, tol.witness_tol)
    index_report = shrink_index(problem.split, b, problem_spectrum(prob), tol.zero_tol)
    tag = SHRINK_CLAUSES.get(verdict.clause, problem.mode)
    return Report(
        mode=problem.mode,
        provenance=provenance("shrinking.shrink_verdict_constant", tag, verdict.clause),
        result=index_report.index,
        verdict=verdict,
        warnings=verdict.warnings,
        details={"radius": prob.radius},
    )


def _run_shrink_2x2(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    prob = ShrinkProblem(
        split=problem.split,
        domain=problem.domain,
        bounds=Bounds2x2(**problem.data.bounds),
        radial_monotonicity=RadialMonotonicity(problem.data.radial_monotonicity),
        radius=problem.data.get("radius", 1.0),
    )
    verdict = shrink_verdict_2x2(prob, tol.witness_tol)
    tag = SHRINK_CLAUSES.get(verdict.clause, problem.mode)
    return Report(
        mode=problem.mode,
        provenance=provenance("shrinking.shrink_verdict_2x2", tag, verdict.clause),
        verdict=verdict,
        warnings=verdict.warnings,
        details={"radius": prob.radius},
    )


def _run_oracle(problem: ProblemFile, s: DomainSpectrum, tol: Box) -> Report:
    source = oracle_source(problem)
    n_blocks = problem.oracle.get("n_blocks") or default_n_blocks(problem.split, source, s)
    n_samples = problem.oracle.get("n_samples", N_SAMPLES)
    value = oracle_sfl_endpoint(problem.split, source, s, n_blocks, tol.zero_tol)
    crossings = oracle_sfl_crossings(problem.split, source, s, n_blocks, n_samples, tol.zero_tol)
    warnings = []
    if not crossings.reliable:
        warnings.append(
            ReportWarning(
                kind="degenerate_crossing",
                message="A crossing form is degenerate; the crossing count is unreliable",
                margin=0.0,
            )
        )
    if crossings.value != value:
        message = f"Crossing method gives {crossings.value}, endpoint method gives {value}"
        logging.warning(message)
        warnings.append(ReportWarning(kind="oracle_disagreement", message=message, margin=float(crossings.value - value)))
    return Report(
        mode=problem.mode,
        provenance=provenance("galerkin.oracle_sfl_endpoint", "oracle", "Galerkin oracle"),
        result=int(value),
        warnings=tuple(warnings),
        details={
            "n_blocks": n_blocks,
            "crossing_value": int(crossings.value),
            "crossings": [
                {"lambda": float(c.lam), "kernel_dim": c.kernel_dim, "signature": c.signature, "degenerate": c.degenerate}
                for c in crossings.crossings
            ],
        },
    )


RUNNERS: Dict[str, Callable[[ProblemFile, DomainSpectrum, Box], Report]] = {
    "index": _run_index,
    "sfl": _run_sfl,
    "compare_upper": _comparison_runner(ComparisonRole.UPPER_C),
    "compare_lower": _comparison_runner(ComparisonRole.LOWER_D),
    "envelope": _run_envelope,
    "cond2x2": _run_cond2x2,
    "shrink_constant": _run_shrink_constant,
    "shrink_2x2": _run_shrink_2x2,
    "oracle": _run_oracle,
}


def run(problem: ProblemFile) -> Report:
    """Dispatch a validated problem to the operation its mode names.

    Args:
        problem: Validated problem file

    Returns:
        Report with the echoed problem, the result and/or verdict, warnings and provenance
    """
    with TimeIt(tag=f"run {problem.mode}"):
        report = RUNNERS[problem.mode](problem, spectrum(problem.domain), _tolerances(problem))
    for w in report.warnings:
        logging.warning("%s (k=%s, margin=%.3e): %s", w.kind, w.k, w.margin, w.message)
    return report.replace(echo=problem_to_dict(problem))


def for_subcommand(problem: ProblemFile, command: str) -> ProblemFile:
    if command == "run":
        return problem
    if problem.mode not in SUBCOMMAND_MODES[command]:
        raise SchemaError(f"Subcommand {command} does not accept mode {problem.mode}")
    if command == "oracle":
        return problem.replace(mode="oracle")
    return problem


def emit_curves(problem: ProblemFile, out: Union[str, pathlib.Path, TextIO]) -> pd.DataFrame:
    """Write eigenvalue curves along lambda as CSV `lambda,block_k,eig_index,value`.

    Rows are ordered by (lambda, block_k, eig_index). Constant-coefficient paths give one curve per
    eigenvalue of every reduced block; x-dependent fields give the eigenvalues of the assembled
    matrix under block_k = 1.
    """
    if problem.mode not in SUBCOMMAND_MODES["curves"]:
        raise SchemaError(f"Curves need an sfl or oracle problem, got mode {problem.mode}")
    s = spectrum(problem.domain)
    source = oracle_source(problem)
    n_blocks = problem.oracle.get("n_blocks") or default_n_blocks(problem.split, source, s)
    lambdas = np.linspace(0.0, 1.0, problem.oracle.get("n_samples", N_SAMPLES))
    curves = oracle_eigen_curves(problem.split, source, s, n_blocks, lambdas)
    n_lam, n_k, n_eig = curves.shape
    lam, k, i = np.meshgrid(lambdas, np.arange(1, n_k + 1), np.arange(1, n_eig + 1), indexing="ij")
    df = pd.DataFrame(
        {"lambda": lam.ravel(), "block_k": k.ravel(), "eig_index": i.ravel(), "value": curves.ravel()},
        columns=CURVE_COLUMNS,
    )
    df.to_csv(out, index=False, float_format="%.17g", lineterminator="\n")
    logging.info("Wrote %d curve rows (%d lambdas, %d blocks)", len(df), n_lam, n_k)
    return df


def _report_path(path: pathlib.Path) -> pathlib.Path:
    return path.with_name(f"{path.stem}.report.json")


def _curves_path(path: pathlib.Path) -> pathlib.Path:
    return path.with_name(f"{path.stem}.curves.csv")


def run_file(path: Union[str, pathlib.Path], config: Optional[Box] = None, command: str = "run") -> int:
    """Run one problem file and write `<stem>.report.json` beside it. Errors are written as reports too.

    The `curves` command writes `<stem>.curves.csv` instead of a report.
    """
    path = pathlib.Path(path)
    config = config or Box()
    try:
        problem = for_subcommand(with_overrides(parse_problem(path.read_bytes()), config), command)
        if command == "curves":
            emit_curves(problem, _curves_path(path))
            return 0
        report = run(problem)
        _report_path(path).write_text(render_json(report))
        return exit_code(report)
    except (SFLXError, ValueError, OSError) as e:
        logging.error("%s: %s: %s", path, type(e).__name__, e)
        _report_path(path).write_text(json.dumps(error_to_dict(str(path), e), indent=2) + "\n")
        return EXIT_ERROR


def problem_files(directory: Union[str, pathlib.Path]) -> Sequence[pathlib.Path]:
    return sorted(p for p in pathlib.Path(directory).glob("*.json") if not p.name.endswith(".report.json"))


def run_batch(directory: Union[str, pathlib.Path], jobs: int = 1, config: Optional[Box] = None,
              command: str = "run") -> int:
    """Process every problem file in `directory` concurrently, one isolated run per file.

    Returns:
        Aggregate exit code: 1 if any file failed, else 2 if any verdict was indeterminate, else 0
    """
    files = problem_files(directory)
    logging.info("Batch of %d problem files with %d workers", len(files), jobs)
    codes = Parallel(n_jobs=jobs, prefer="threads")(delayed(run_file)(f, config, command) for f in files)
    return worst_exit_code(codes)


def _emit(text: str, out: Optional[str]):
    if out:
        pathlib.Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run_spectrum(config: Box) -> str:
    """First `n_values` Dirichlet eigenvalues of the problem's domain or of --domain."""
    if config.get("problem"):
        domain = parse_problem(pathlib.Path(config.problem).read_bytes()).domain
    elif config.domain == "disc":
        domain = parse_domain({"kind": "disc", "radius": config.radius})
    elif config.domain == "box":
        domain = parse_domain({"kind": "box", "lengths": [float(l) for l in config.length]})
    else:
        domain = parse_domain({"kind": "interval", "length": float(config.length[0])})
    values = spectrum(domain).take(config.n_values)
    if config.json:
        return json.dumps({"domain": domain_to_dict(domain), "values": values}, indent=2) + "\n"
    return "".join(f"{k} {v:.17g}\n" for k, v in enumerate(values, start=1))


def main(argv):
    config = process_config(FLAGS)
    if config.DEBUG:
        logging.set_verbosity(logging.DEBUG)
        logging.debug("non-flag arguments: %s", argv)
    command = argv[1] if len(argv) > 1 else "run"
    if command not in SUBCOMMAND_MODES and command not in ("run", "spectrum"):
        logging.error("Unknown subcommand %s", command)
        return EXIT_ERROR
    if command != "spectrum" and config.batch:
        return run_batch(config.batch, config.jobs, config, command)
    if not config.problem and command != "spectrum":
        logging.error("--problem or --batch is required")
        return EXIT_ERROR
    try:
        if command == "spectrum":
            _emit(run_spectrum(config), config.out)
            return 0
        problem = for_subcommand(
            with_overrides(parse_problem(pathlib.Path(config.problem).read_bytes()), config), command
        )
        if command == "curves":
            emit_curves(problem, config.out or sys.stdout)
            return 0
        report = run(problem)
    except (SFLXError, ValueError, OSError) as e:
        logging.error("%s: %s", type(e).__name__, e)
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_ERROR
    _emit(render_json(report) if config.json else render_text(report), config.out)
    return exit_code(report)


def underscored(arg: str) -> str:
    """`--n-blocks=3` -> `--n_blocks=3`; values and positional arguments pass through."""
    if not arg.startswith("--"):
        return arg
    name, sep, value = arg[2:].partition("=")
    return f"--{name.replace('-', '_')}{sep}{value}"


def parse_flags(argv: Sequence[str]) -> Sequence[str]:
    return app.parse_flags_with_usage([underscored(arg) for arg in argv])


def console_main():
    app.run(main, flags_parser=parse_flags)


if __name__ == "__main__":
    console_main()
