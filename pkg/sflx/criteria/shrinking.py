"""Bifurcation-radius criteria for the shrinking family U_r = r U, 0 < r <= 1.

Along r the reduced blocks are -A - r**2 B / alpha_k, so the flow of the shrinking path equals the index
of B on U (on U_r when `radius` is set).
"""
from typing import Optional

import numpy as np
from absl import logging

from sflx.dataclasses import (
    WITNESS_TOL,
    BifurcationVerdict,
    CrossingFormReport,
    Definiteness,
    IndexReport,
    MatrixLike,
    Outcome,
    RadialMonotonicity,
    ReportWarning,
    ShrinkProblem,
    SignatureSplit,
    Witness,
)
from sflx.criteria.comparison import grazes
from sflx.errors import DimensionMismatch, InvalidSignatureSplit
from sflx.index.index_core import index, signature_change_witness
from sflx.linalg.symmat import default_zero_tol, eigvalsh, entries_of, inertia
from sflx.spectra.domain_spectra import DomainSpectrum, scale, spectrum

CLAUSE_SMALLEST = "shrink (ii): mu_1(B) > alpha_1"
CLAUSE_STRADDLE = "shrink (i): -alpha_1 < mu_1(B) and alpha_1 < mu_p(B)"
CLAUSE_INDEX = "shrink: nonvanishing index"
CLAUSE_2X2_I = "shrink 2x2 (i): b22 > |b12|, b11 > |b12| + alpha_1, nondecreasing in r"
CLAUSE_2X2_II = "shrink 2x2 (ii): b11 < -|b12|, b22 < -|b12| - alpha_1, nonincreasing in r"
REDUCED_BLOCK_PROVISO = "nondegeneracy checked on reduced blocks only (valid for constant B)"
RADIAL_PROVISO = "radial monotonicity of B is asserted by the user, not computed"


def problem_spectrum(prob: ShrinkProblem) -> DomainSpectrum:
    """Dirichlet spectrum of U_r for the problem's domain and radius."""
    s = spectrum(prob.domain)
    return s if prob.radius == 1.0 else scale(s, prob.radius)


def _check_split(split: SignatureSplit):
    if split.p1 < 1 or split.p2 < 1:
        raise InvalidSignatureSplit(
            f"Shrinking criteria need both signs in A (1 <= p1, p2 <= p - 1), got ({split.p1}, {split.p2})"
        )


def _constant_b(prob: ShrinkProblem) -> MatrixLike:
    _check_split(prob.split)
    if prob.B is None:
        raise ValueError("Shrink problem has no constant matrix B")
    dim = entries_of(prob.B).shape[0]
    if dim != prob.split.p:
        raise DimensionMismatch(f"B has dimension {dim}, signature split needs {prob.split.p}")
    return prob.B


def _grazing(clause: str, margin: float) -> ReportWarning:
    message = f"{clause} holds only within tolerance (margin {margin:.3e})"
    logging.warning(message)
    return ReportWarning(kind="indeterminate_margin", message=message, k=1, margin=margin)


def shrink_verdict_constant(prob: ShrinkProblem, tol: float = WITNESS_TOL) -> BifurcationVerdict:
    """Bifurcation radius in (0, radius) for constant B.

    Clause (ii), checked first, needs no nondegeneracy: mu_1(B) > alpha_1.
    Clause (i): -alpha_1 < mu_1(B), alpha_1 < mu_p(B) and no reduced block singular.

    Args:
        prob: Shrink problem with constant B
        tol: Minimum margin of the strict inequalities

    Returns:
        BifurcationVerdict
    """
    b = _constant_b(prob)
    s = problem_spectrum(prob)
    alpha_1 = s.value(1)
    w = eigvalsh(b)
    mu_1, mu_p = float(w[0]), float(w[-1])
    warnings = []

    magnitude = max(alpha_1, abs(mu_1), abs(mu_p))
    margin_ii = mu_1 - alpha_1
    if margin_ii > tol:
        witness = Witness(j=1, k=1, alpha_k=alpha_1, interval=(0.0, mu_1), block=1, margin=margin_ii)
        logging.info("%s fires with margin %.3e", CLAUSE_SMALLEST, margin_ii)
        return BifurcationVerdict(outcome=Outcome.WITNESS_FOUND, witness=witness, clause=CLAUSE_SMALLEST)
    if grazes(margin_ii, tol, magnitude):
        warnings.append(_grazing(CLAUSE_SMALLEST, margin_ii))

    margin_i = min(mu_1 + alpha_1, mu_p - alpha_1)
    if margin_i > tol or grazes(margin_i, tol, magnitude):
        witness = Witness(j=len(w), k=1, alpha_k=alpha_1, interval=(-mu_1, mu_p), block=1, margin=margin_i)
        report = index(prob.split, b, s, tol=tol)
        warnings += list(report.warnings)
        if margin_i <= tol:
            warnings.append(_grazing(CLAUSE_STRADDLE, margin_i))
        elif not report.singular_blocks:
            return BifurcationVerdict(
                outcome=Outcome.WITNESS_FOUND,
                witness=witness,
                clause=CLAUSE_STRADDLE,
                warnings=tuple(warnings),
                provisos=(REDUCED_BLOCK_PROVISO,),
            )
        return BifurcationVerdict(
            outcome=Outcome.INDETERMINATE, witness=witness, clause=CLAUSE_STRADDLE, warnings=tuple(warnings)
        )
    outcome = Outcome.INDETERMINATE if warnings else Outcome.NO_WITNESS
    return BifurcationVerdict(outcome=outcome, clause="shrink constant", warnings=tuple(warnings))


def shrink_verdict_2x2(prob: ShrinkProblem, tol: float = WITNESS_TOL) -> BifurcationVerdict:
    """Bifurcation radius for 2 x 2 x-dependent coefficients from entrywise bounds and asserted radial monotonicity."""
    split = prob.split
    if (split.p1, split.p2) != (1, 1):
        raise InvalidSignatureSplit(f"The 2 x 2 criterion needs split (1, 1), got ({split.p1}, {split.p2})")
    if prob.bounds is None:
        raise ValueError("Shrink problem has no entry bounds")
    bounds, monotonicity = prob.bounds, RadialMonotonicity(prob.radial_monotonicity)
    alpha_1 = problem_spectrum(prob).value(1)
    m12 = bounds.max_abs_b12
    magnitude = max(alpha_1, m12, *(abs(v) for v in (bounds.min_b11, bounds.max_b11, bounds.min_b22, bounds.max_b22)))

    clauses = (
        (
            CLAUSE_2X2_I,
            min(bounds.min_b22 - m12, bounds.min_b11 - m12 - alpha_1),
            RadialMonotonicity.NON_DECREASING,
            Witness(j=1, k=1, alpha_k=alpha_1, interval=(0.0, bounds.min_b11 - m12), block=1,
                    margin=bounds.min_b11 - m12 - alpha_1),
        ),
        (
            CLAUSE_2X2_II,
            min(-m12 - bounds.max_b11, -m12 - alpha_1 - bounds.max_b22),
            RadialMonotonicity.NON_INCREASING,
            Witness(j=1, k=1, alpha_k=alpha_1, interval=(bounds.max_b22 + m12, 0.0), block=2,
                    margin=-m12 - alpha_1 - bounds.max_b22),
        ),
    )
    warnings, undecided = [], None
    for clause, margin, required, witness in clauses:
        if margin <= tol and not grazes(margin, tol, magnitude):
            continue
        if margin <= tol:
            warnings.append(_grazing(clause, margin))
            undecided = undecided or (clause, witness)
            continue
        if monotonicity == required:
            logging.info("%s fires with margin %.3e", clause, margin)
            return BifurcationVerdict(
                outcome=Outcome.WITNESS_FOUND, witness=witness, clause=clause,
                warnings=tuple(warnings), provisos=(RADIAL_PROVISO,),
            )
        if monotonicity == RadialMonotonicity.UNKNOWN:
            message = f"{clause}: inequalities hold but radial monotonicity is not asserted"
            logging.warning(message)
            warnings.append(ReportWarning(kind="unverified_hypothesis", message=message, k=1, margin=margin))
            undecided = undecided or (clause, witness)
    if undecided:
        clause, witness = undecided
        return BifurcationVerdict(
            outcome=Outcome.INDETERMINATE, witness=witness, clause=clause, warnings=tuple(warnings)
        )
    return BifurcationVerdict(outcome=Outcome.NO_WITNESS, clause="shrink 2x2", warnings=tuple(warnings))


def crossing_form_constant(b: MatrixLike, tol: Optional[float] = None) -> CrossingFormReport:
    """Definiteness of B, which decides regularity of the crossing form -2 int <B u, u> at r = 1."""
    t = inertia(b, tol if tol is not None else default_zero_tol(b))
    if t.n_zero > 0:
        definite = Definiteness.DEGENERATE
    elif t.n_neg == 0:
        definite = Definiteness.POSITIVE_DEFINITE
    elif t.n_pos == 0:
        definite = Definiteness.NEGATIVE_DEFINITE
    else:
        definite = Definiteness.INDEFINITE
    regular = definite in (Definiteness.POSITIVE_DEFINITE, Definiteness.NEGATIVE_DEFINITE)
    return CrossingFormReport(definite=definite, regular=regular)


def shrink_index(
    split: SignatureSplit, b: MatrixLike, spectrum: DomainSpectrum, tol: Optional[float] = None
) -> IndexReport:
    """Spectral flow of the shrinking path from r -> 0 (K = 0, index 0) to r = 1: the index i(B)."""
    _check_split(split)
    return index(split, b, spectrum, tol)


def shrink_verdict_index(prob: ShrinkProblem, tol: Optional[float] = None) -> BifurcationVerdict:
    """General constant-B criterion: a nondegenerate endpoint with nonzero index forces a bifurcation radius."""
    b = _constant_b(prob)
    s = problem_spectrum(prob)
    report = shrink_index(prob.split, b, s, tol)
    if report.singular_blocks:
        return BifurcationVerdict(outcome=Outcome.INDETERMINATE, clause=CLAUSE_INDEX, warnings=report.warnings)
    if report.index == 0:
        return BifurcationVerdict(outcome=Outcome.NO_WITNESS, clause=CLAUSE_INDEX)
    stable = prob.split.signature_minus_a
    at_zero = IndexReport(index=0, truncation_rank=1, block_signatures=(stable,))
    witness = signature_change_witness(prob.split, at_zero, report, s)
    return BifurcationVerdict(outcome=Outcome.WITNESS_FOUND, witness=witness, clause=CLAUSE_INDEX)
