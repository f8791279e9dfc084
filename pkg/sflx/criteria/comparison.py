"""Comparison criteria for bifurcation: eigenvalue intervals of comparison blocks that must contain +-alpha_k.

All criteria search k outer and eigenvalue index j inner, so the witness with the lowest Dirichlet
eigenvalue is returned. A strict inequality that holds by less than `tol` never produces a witness.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from absl import logging

from sflx.dataclasses import (
    WITNESS_TOL,
    ZERO_TOL_REL,
    BifurcationVerdict,
    Bounds2x2,
    ComparisonPair,
    ComparisonRole,
    EnvelopeBounds,
    MatrixLike,
    Outcome,
    ReportWarning,
    SignatureSplit,
    Witness,
)
from sflx.errors import DimensionMismatch, EmptyInput, InvalidSignatureSplit
from sflx.index.index_core import NONDEGENERACY_PROVISO, boundary_warnings, stabilisation_rank
from sflx.linalg.symmat import eigvalsh, entries_of
from sflx.spectra.domain_spectra import DomainSpectrum

# (block, j, lo, hi): eigenvalue interval of block 1 (tested against +alpha_k) or block 2 (-alpha_k)
Interval = Tuple[int, int, float, float]


def grazes(margin: float, tol: float, scale: float = 1.0) -> bool:
    """True when a strict inequality is too close to call: zero_tol < |margin| <= tol.

    Margins within ZERO_TOL_REL * scale of zero are an exact boundary hit, so the inequality fails.
    """
    return ZERO_TOL_REL * max(1.0, scale) < abs(margin) <= tol


def _search(
    intervals: Sequence[Interval], alphas: Sequence[float], tol: float
) -> Tuple[Optional[Witness], List[Witness]]:
    """First clean witness in (k, j, block) order and all grazing candidates seen before it."""
    grazing = []
    for k, alpha in enumerate(alphas, start=1):
        for block, j, lo, hi in sorted(intervals, key=lambda iv: (iv[1], iv[0])):
            if not hi > lo:
                continue
            value = alpha if block == 1 else -alpha
            margin = min(value - lo, hi - value)
            candidate = Witness(j=j, k=k, alpha_k=alpha, interval=(lo, hi), block=block, margin=margin)
            if margin > tol:
                return candidate, grazing
            if grazes(margin, tol, max(alpha, abs(lo), abs(hi))):
                grazing.append(candidate)
    return None, grazing


def _grazing_warnings(grazing: Sequence[Witness]) -> List[ReportWarning]:
    warnings = []
    for w in grazing:
        sign = "" if w.block == 1 else "-"
        message = (
            f"{sign}alpha_{w.k} = {sign}{w.alpha_k:g} lies within tolerance of the boundary of "
            f"({w.interval[0]:g}, {w.interval[1]:g}) (margin {w.margin:.3e})"
        )
        logging.warning(message)
        warnings.append(ReportWarning(kind="indeterminate_margin", message=message, k=w.k, margin=w.margin))
    return warnings


def _verdict(
    witness: Optional[Witness],
    grazing: Sequence[Witness],
    clause: str,
    warnings: Sequence[ReportWarning] = (),
    undecided: bool = False,
    provisos: Tuple[str, ...] = (NONDEGENERACY_PROVISO,),
) -> BifurcationVerdict:
    warnings = tuple(warnings)
    if witness is not None and not undecided:
        outcome = Outcome.WITNESS_FOUND
    elif witness is not None or grazing or undecided:
        outcome = Outcome.INDETERMINATE
        warnings += tuple(_grazing_warnings(grazing))
    else:
        outcome = Outcome.NO_WITNESS
    logging.info("%s: %s", clause, outcome.value)
    return BifurcationVerdict(outcome=outcome, witness=witness, clause=clause, warnings=warnings, provisos=provisos)


def _check_pair(split: SignatureSplit, pair: ComparisonPair, role: ComparisonRole):
    if split.p1 < 1 or split.p2 < 1:
        raise InvalidSignatureSplit(f"Comparison criteria need p1, p2 >= 1, got ({split.p1}, {split.p2})")
    if ComparisonRole(pair.role) != role:
        raise ValueError(f"Expected a {role.value} comparison pair, got {pair.role}")
    for name, block, dim in (
        ("block_1_0", pair.block_1_0, split.p1),
        ("block_1_1", pair.block_1_1, split.p1),
        ("block_2_0", pair.block_2_0, split.p2),
        ("block_2_1", pair.block_2_1, split.p2),
    ):
        actual = entries_of(block).shape[0]
        if actual != dim:
            raise DimensionMismatch(f"Comparison {name} has dimension {actual}, expected {dim}")


def _comparison(
    high_1: MatrixLike,
    low_1: MatrixLike,
    high_2: MatrixLike,
    low_2: MatrixLike,
    endpoint_blocks: Tuple[Tuple[MatrixLike, MatrixLike, str], ...],
    spectrum: DomainSpectrum,
    tol: float,
    clause: str,
) -> BifurcationVerdict:
    """Shared search: monotonicity high_i >= low_i, then intervals (mu_j(low_i), mu_j(high_i))."""
    eig = {name: eigvalsh(m) for name, m in (("h1", high_1), ("l1", low_1), ("h2", high_2), ("l2", low_2))}
    scale = max(1.0, max(float(np.max(np.abs(w))) for w in eig.values()))
    zero_tol = ZERO_TOL_REL * scale

    warnings, undecided = [], False
    for block, high, low in ((1, high_1, low_1), (2, high_2, low_2)):
        mu_min = float(eigvalsh(entries_of(high) - entries_of(low))[0])
        if mu_min < -tol:
            message = f"Monotonicity fails for block {block}: smallest eigenvalue of the difference is {mu_min:.3e}"
            logging.warning(message)
            warnings.append(ReportWarning(kind="monotonicity", message=message, margin=mu_min))
            return BifurcationVerdict(
                outcome=Outcome.NO_WITNESS, clause=clause, warnings=tuple(warnings), provisos=(NONDEGENERACY_PROVISO,)
            )
        if mu_min < -zero_tol:
            message = f"Monotonicity for block {block} holds only within tolerance ({mu_min:.3e})"
            logging.warning(message)
            warnings.append(ReportWarning(kind="monotonicity", message=message, margin=mu_min))
            undecided = True

    k_stable = stabilisation_rank([scale], spectrum)
    alphas = spectrum.take(k_stable)
    for block_1, block_2, label in endpoint_blocks:
        warnings += boundary_warnings(eigvalsh(block_1), eigvalsh(block_2), alphas, tol, label)

    intervals = [(1, j, float(lo), float(hi)) for j, (lo, hi) in enumerate(zip(eig["l1"], eig["h1"]), start=1)]
    intervals += [(2, j, float(lo), float(hi)) for j, (lo, hi) in enumerate(zip(eig["l2"], eig["h2"]), start=1)]
    witness, grazing = _search(intervals, alphas, tol)
    return _verdict(witness, grazing, clause, warnings, undecided)


def check_upper_comparison(
    split: SignatureSplit, pair: ComparisonPair, spectrum: DomainSpectrum, tol: float = WITNESS_TOL
) -> BifurcationVerdict:
    """Upper comparison: C1_0 >= C1_1, C2_0 >= C2_1 and mu_j(C1_1) < alpha_k < mu_j(C1_0)
    or mu_j(C2_1) < -alpha_k < mu_j(C2_0) for some j, k.

    Args:
        split: Signature split of A
        pair: Comparison blocks with role UPPER_C
        spectrum: Dirichlet spectrum of the domain
        tol: Minimum margin of the strict inequalities

    Returns:
        BifurcationVerdict
    """
    _check_pair(split, pair, ComparisonRole.UPPER_C)
    endpoint_blocks = (
        (pair.block_1_0, pair.block_2_0, "C at lambda = 0"),
        (pair.block_1_1, pair.block_2_1, "C at lambda = 1"),
    )
    return _comparison(pair.block_1_0, pair.block_1_1, pair.block_2_0, pair.block_2_1,
                       endpoint_blocks, spectrum, tol, "upper comparison")


def check_lower_comparison(
    split: SignatureSplit, pair: ComparisonPair, spectrum: DomainSpectrum, tol: float = WITNESS_TOL
) -> BifurcationVerdict:
    """Lower comparison: D1_1 >= D1_0, D2_1 >= D2_0 and mu_j(D1_0) < alpha_k < mu_j(D1_1)
    or mu_j(D2_0) < -alpha_k < mu_j(D2_1) for some j, k."""
    _check_pair(split, pair, ComparisonRole.LOWER_D)
    endpoint_blocks = (
        (pair.block_1_0, pair.block_2_0, "D at lambda = 0"),
        (pair.block_1_1, pair.block_2_1, "D at lambda = 1"),
    )
    return _comparison(pair.block_1_1, pair.block_1_0, pair.block_2_1, pair.block_2_0,
                       endpoint_blocks, spectrum, tol, "lower comparison")


def envelope_bounds(samples_0: Sequence[MatrixLike], samples_1: Sequence[MatrixLike]) -> EnvelopeBounds:
    """gamma_l = max over samples of the largest eigenvalue, beta_l = min of the smallest."""
    if len(samples_0) == 0 or len(samples_1) == 0:
        raise EmptyInput("Envelope bounds need at least one sample matrix at each endpoint")
    eig_0 = [eigvalsh(m) for m in samples_0]
    eig_1 = [eigvalsh(m) for m in samples_1]
    return EnvelopeBounds(
        gamma_0=max(float(w[-1]) for w in eig_0),
        gamma_1=max(float(w[-1]) for w in eig_1),
        beta_0=min(float(w[0]) for w in eig_0),
        beta_1=min(float(w[0]) for w in eig_1),
    )


def check_envelope(
    split: SignatureSplit, env: EnvelopeBounds, spectrum: DomainSpectrum, tol: float = WITNESS_TOL
) -> BifurcationVerdict:
    """Eigenvalue-envelope criterion: gamma_1 < +-alpha_k < beta_0 (clause i) or gamma_0 < +-alpha_k < beta_1 (clause ii)."""
    scale = max(1.0, abs(env.gamma_0), abs(env.gamma_1), abs(env.beta_0), abs(env.beta_1))
    alphas = spectrum.take(stabilisation_rank([scale], spectrum))
    clauses = (("envelope (i)", env.gamma_1, env.beta_0), ("envelope (ii)", env.gamma_0, env.beta_1))
    all_grazing = []
    for clause, lo, hi in clauses:
        intervals = []
        if split.p1 > 0:
            intervals.append((1, 1, lo, hi))
        if split.p2 > 0:
            intervals.append((2, 1, lo, hi))
        witness, grazing = _search(intervals, alphas, tol)
        if witness is not None:
            return _verdict(witness, grazing, clause)
        all_grazing += grazing
    return _verdict(None, all_grazing, "envelope")


def _entry_ranges(bounds: Bounds2x2) -> Tuple[float, float, float, float]:
    """(lo1, hi1, lo2, hi2): ranges of the diagonal entries widened by max |b12|."""
    m12 = bounds.max_abs_b12
    return bounds.min_b11 - m12, bounds.max_b11 + m12, bounds.min_b22 - m12, bounds.max_b22 + m12


def check_2x2_conditions(
    bounds_0: Bounds2x2, bounds_1: Bounds2x2, spectrum: DomainSpectrum, tol: float = WITNESS_TOL
) -> BifurcationVerdict:
    """Entrywise criteria for 2 x 2 systems, split (1, 1).

    Each clause is an inequality between the entry ranges of one component plus an interval for
    +-alpha_k from the ranges of the other:
        (i)   lo2(0) >= hi2(1) and hi1(1) < alpha_k < lo1(0)
        (ii)  lo1(0) >= hi1(1) and hi2(1) < -alpha_k < lo2(0)
        (iii) lo2(1) >= hi2(0) and hi1(0) < alpha_k < lo1(1)
        (iv)  lo1(1) >= hi1(0) and hi2(0) < -alpha_k < lo2(1)
    """
    lo1_0, hi1_0, lo2_0, hi2_0 = _entry_ranges(bounds_0)
    lo1_1, hi1_1, lo2_1, hi2_1 = _entry_ranges(bounds_1)
    scale = max(1.0, *(abs(v) for v in (lo1_0, hi1_0, lo2_0, hi2_0, lo1_1, hi1_1, lo2_1, hi2_1)))
    alphas = spectrum.take(stabilisation_rank([scale], spectrum))
    clauses = (
        ("2x2 (i)", lo2_0 - hi2_1, (1, 1, hi1_1, lo1_0)),
        ("2x2 (ii)", lo1_0 - hi1_1, (2, 1, hi2_1, lo2_0)),
        ("2x2 (iii)", lo2_1 - hi2_0, (1, 1, hi1_0, lo1_1)),
        ("2x2 (iv)", lo1_1 - hi1_0, (2, 1, hi2_0, lo2_1)),
    )
    all_grazing, warnings, undecided = [], [], False
    for clause, condition_margin, interval in clauses:
        if condition_margin < -tol:
            continue
        witness, grazing = _search([interval], alphas, tol)
        if witness is None:
            all_grazing += grazing
            continue
        if condition_margin < -ZERO_TOL_REL * scale:
            message = f"{clause}: entry ordering holds only within tolerance ({condition_margin:.3e})"
            logging.warning(message)
            warnings.append(ReportWarning(kind="indeterminate_margin", message=message, margin=condition_margin))
            undecided = True
            continue
        return _verdict(witness, grazing, clause)
    return _verdict(None, all_grazing, "2x2 conditions", warnings, undecided)
