"""Finite Galerkin truncations of L_lambda = T + K_lambda in the Dirichlet eigenfunction basis.

Basis functions are f_k e_i with f_k the H^1_0-normalised Dirichlet eigenfunctions, so the entry for
(f_k e_i, f_l e_j) is delta_kl (-A)_ij - int B_ij(lambda, x) f_k(x) f_l(x) dx, at row (k - 1) * p + i.
Eigenvalues here come from LAPACK (jnp.linalg.eigh), independent of the Jacobi solver.
"""
import math
from typing import List, Optional, Sequence, Tuple, Union

import chex
import jax
import jax.numpy as jnp
import numpy as np
from absl import logging
from scipy import optimize

from sflx.dataclasses import (
    CROSSING_LAMBDA_TOL,
    FD_STEP,
    KERNEL_TOL_REL,
    N_SAMPLES,
    TRUNCATION_MARGIN,
    ZERO_TOL_REL,
    Crossing,
    CrossingResult,
    DomainKind,
    GalerkinMatrix,
    SignatureSplit,
    SymmetricMatrix,
)
from sflx.errors import DegenerateCrossing, DimensionMismatch, SingularEndpoint, UnsupportedDomain
from sflx.index.index_core import first_index_above
from sflx.oracle.paths import CoefficientField1D, LinearPath, MatrixPath, PolynomialPath, SampledPath, constant_path
from sflx.oracle.quadrature import GaussLegendre, QuadratureRule, nodes_weights
from sflx.spectra.domain_spectra import DomainSpectrum

Source = Union[SymmetricMatrix, chex.Array, MatrixPath, CoefficientField1D]

SELF_CHECK_EXTRA_BLOCKS = 2
# crossings closer than this share one kernel evaluation
CROSSING_MERGE_TOL = 100 * CROSSING_LAMBDA_TOL


def as_source(source: Source) -> Union[MatrixPath, CoefficientField1D]:
    """Paths and fields pass through; a single matrix becomes the constant path."""
    if isinstance(source, (LinearPath, SampledPath, PolynomialPath, CoefficientField1D)):
        return source
    return constant_path(source)


@jax.jit
def block_matrix(minus_a: chex.Array, b: chex.Array, alphas: chex.Array) -> chex.Array:
    """Block-diagonal matrix with blocks -A - B / alpha_k; off-diagonal blocks are exactly zero."""
    n, p = alphas.shape[0], minus_a.shape[0]
    blocks = minus_a[None, :, :] - b[None, :, :] / alphas[:, None, None]
    return jnp.einsum("kl,kij->kilj", jnp.eye(n), blocks).reshape(n * p, n * p)


@jax.jit
def path_matrices(path: MatrixPath, minus_a: chex.Array, alphas: chex.Array, lams: chex.Array) -> chex.Array:
    return jax.vmap(lambda lam: block_matrix(minus_a, path(lam), alphas))(lams)


@jax.jit
def blend_matrices(m0: chex.Array, m1: chex.Array, lams: chex.Array) -> chex.Array:
    return (1 - lams)[:, None, None] * m0[None] + lams[:, None, None] * m1[None]


@jax.jit
def field_matrix(minus_a: chex.Array, basis: chex.Array, weights: chex.Array, values: chex.Array) -> chex.Array:
    """T - Gram matrix of B(x) against the basis, symmetrised.

    Args:
        minus_a: -A, shape (p, p)
        basis: f_k at the quadrature nodes, shape (n, q)
        weights: Quadrature weights, shape (q,)
        values: B at the quadrature nodes, shape (q, p, p)
    """
    n, p = basis.shape[0], minus_a.shape[0]
    gram = jnp.einsum("q,kq,lq,qij->kilj", weights, basis, basis, values)
    t = jnp.einsum("kl,ij->kilj", jnp.eye(n), minus_a)
    m = (t - gram).reshape(n * p, n * p)
    return (m + m.T) / 2


batched_eigvalsh = jax.jit(jax.vmap(jnp.linalg.eigvalsh))
eigh = jax.jit(jnp.linalg.eigh)


def _interval_length(spectrum: DomainSpectrum) -> float:
    source = spectrum.source
    if DomainKind(source.kind) != DomainKind.INTERVAL:
        raise UnsupportedDomain(
            f"x-dependent coefficient fields are supported on intervals only, not {DomainKind(source.kind).value}"
        )
    return source.lengths[0] * spectrum.radius


def interval_basis(x: np.ndarray, length: float, n_blocks: int) -> np.ndarray:
    """H^1_0-normalised Dirichlet eigenfunctions sqrt(2 / L) sin(k pi x / L) / sqrt(alpha_k), shape (n, len(x))."""
    k = np.arange(1, n_blocks + 1)[:, None]
    alphas = (k * math.pi / length) ** 2
    return np.sqrt(2 / length) * np.sin(k * math.pi * x[None, :] / length) / np.sqrt(alphas)


class Assembler:
    """Evaluates assembled Galerkin matrices along lambda for one source and truncation."""

    def __init__(
        self,
        split: SignatureSplit,
        source: Source,
        spectrum: DomainSpectrum,
        n_blocks: int,
        rule: QuadratureRule = GaussLegendre(),
    ):
        if n_blocks < 1:
            raise ValueError(f"n_blocks must be positive, got {n_blocks}")
        source = as_source(source)
        if source.dim != split.p:
            raise DimensionMismatch(f"Coefficients have dimension {source.dim}, signature split needs {split.p}")
        self.split, self.source, self.n_blocks = split, source, n_blocks
        self.minus_a = split.minus_a
        if isinstance(source, CoefficientField1D):
            length = _interval_length(spectrum)
            if not math.isclose(length, source.length, rel_tol=1e-12):
                raise UnsupportedDomain(f"Field length {source.length} differs from the interval length {length}")
            intervals = source.grid_intervals
            panels = intervals * math.ceil(rule.panels / intervals)
            x, w = nodes_weights(rule, length, panels)
            basis = jnp.asarray(interval_basis(x, length, n_blocks))
            xs = jnp.asarray(x)
            self._endpoints = tuple(
                field_matrix(self.minus_a, basis, jnp.asarray(w), source.endpoint_values(xs, e)) for e in (0, 1)
            )
        else:
            self._alphas = jnp.asarray(spectrum.take(n_blocks), dtype=jnp.float64)

    @property
    def block_diagonal(self) -> bool:
        return not isinstance(self.source, CoefficientField1D)

    def matrices(self, lams) -> chex.Array:
        lams = jnp.atleast_1d(jnp.asarray(lams, dtype=jnp.float64))
        if self.block_diagonal:
            return path_matrices(self.source, self.minus_a, self._alphas, lams)
        return blend_matrices(*self._endpoints, lams)

    def matrix(self, lam: float) -> chex.Array:
        return self.matrices(lam)[0]

    def eigenvalues(self, lams) -> np.ndarray:
        return np.asarray(batched_eigvalsh(self.matrices(lams)))


def assemble(
    split: SignatureSplit,
    source: Source,
    lam: float,
    spectrum: DomainSpectrum,
    n_blocks: int,
    rule: QuadratureRule = GaussLegendre(),
) -> GalerkinMatrix:
    """Galerkin matrix of L_lambda on the first n_blocks Dirichlet modes.

    Args:
        split: Signature split of A
        source: Constant matrix, matrix path, or x-dependent field on an interval
        lam: Path parameter in [0, 1]
        spectrum: Dirichlet spectrum of the domain
        n_blocks: Number of retained modes
        rule: Quadrature rule for x-dependent fields

    Returns:
        GalerkinMatrix
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    entries = Assembler(split, source, spectrum, n_blocks, rule).matrix(lam)
    return GalerkinMatrix(n_blocks=n_blocks, split=split, entries=entries)


def default_n_blocks(
    split: SignatureSplit, source: Source, spectrum: DomainSpectrum, rule: QuadratureRule = GaussLegendre()
) -> int:
    """Truncation rank over the whole path plus two."""
    source = as_source(source)
    if isinstance(source, CoefficientField1D):
        x, _ = nodes_weights(rule, source.length)
        bound = source.norm_bound(x)
    else:
        bound = source.norm_bound()
    return first_index_above(spectrum, bound * TRUNCATION_MARGIN) + 2


def _zero_tol(w: np.ndarray, tol: Optional[float]) -> float:
    return tol if tol is not None else ZERO_TOL_REL * max(1.0, float(np.max(np.abs(w))))


def _morse(assembler: Assembler, lam: float, tol: Optional[float]) -> int:
    w = assembler.eigenvalues(lam)[0]
    smallest = float(w[np.argmin(np.abs(w))])
    if abs(smallest) <= _zero_tol(w, tol):
        raise SingularEndpoint(
            f"Assembled matrix at lambda = {lam:g} has eigenvalue {smallest:.3e} within tolerance of zero",
            lam=lam,
            eigenvalue=smallest,
        )
    return int(np.sum(w < 0))


def oracle_sfl_endpoint(
    split: SignatureSplit,
    source: Source,
    spectrum: DomainSpectrum,
    n_blocks: Optional[int] = None,
    tol: Optional[float] = None,
    self_check: Optional[bool] = None,
    rule: QuadratureRule = GaussLegendre(),
) -> int:
    """Finite-dimensional spectral flow Morse(L_0) - Morse(L_1).

    Args:
        split: Signature split of A
        source: Constant matrix, matrix path, or x-dependent field
        spectrum: Dirichlet spectrum of the domain
        n_blocks: Number of retained modes, default truncation rank + 2
        tol: Zero tolerance for the endpoint check, scale-aware default
        self_check: Recompute with n_blocks + 2 and warn on disagreement; on by default for fields

    Returns:
        Integer spectral flow

    Raises:
        SingularEndpoint: an endpoint matrix has an eigenvalue within tol of zero
    """
    if n_blocks is None:
        n_blocks = default_n_blocks(split, source, spectrum, rule)
    if self_check is None:
        self_check = isinstance(source, CoefficientField1D)
    assembler = Assembler(split, source, spectrum, n_blocks, rule)
    value = _morse(assembler, 0.0, tol) - _morse(assembler, 1.0, tol)
    logging.info("oracle endpoint method: n_blocks=%d, sfl=%d", n_blocks, value)
    if self_check:
        wider = Assembler(split, source, spectrum, n_blocks + SELF_CHECK_EXTRA_BLOCKS, rule)
        check = _morse(wider, 0.0, tol) - _morse(wider, 1.0, tol)
        if check != value:
            logging.warning(
                "Oracle spectral flow changes from %d to %d when n_blocks grows from %d to %d",
                value, check, n_blocks, n_blocks + SELF_CHECK_EXTRA_BLOCKS,
            )
    return value


def _locate(count, a: float, b: float, n_a: int, n_b: int) -> List[Tuple[float, float]]:
    """Bisect [a, b] on the negative-eigenvalue count until every change sits in an interval below CROSSING_LAMBDA_TOL."""
    if n_a == n_b:
        return []
    if b - a <= CROSSING_LAMBDA_TOL:
        return [(a, b)]
    mid = (a + b) / 2
    n_mid = count(mid)
    return _locate(count, a, mid, n_a, n_mid) + _locate(count, mid, b, n_mid, n_b)


def _crossing(assembler: Assembler, lam: float, tol: Optional[float]) -> Crossing:
    """Kernel and crossing form <dL/dlambda u, u> restricted to the numerical kernel at lam."""
    m = assembler.matrix(lam)
    w, q = (np.asarray(v) for v in eigh(m))
    kernel_tol = KERNEL_TOL_REL * max(1.0, float(np.max(np.abs(w))))
    kernel = np.abs(w) <= kernel_tol
    if not np.any(kernel):
        kernel = np.abs(w) == np.min(np.abs(w))
    lo, hi = max(0.0, lam - FD_STEP), min(1.0, lam + FD_STEP)
    derivative = np.asarray(assembler.matrix(hi) - assembler.matrix(lo)) / (hi - lo)
    basis = q[:, kernel]
    form = basis.T @ derivative @ basis
    gamma = np.linalg.eigvalsh((form + form.T) / 2)
    form_tol = tol if tol is not None else KERNEL_TOL_REL * max(1.0, float(np.max(np.abs(derivative))))
    degenerate = bool(np.any(np.abs(gamma) <= form_tol))
    return Crossing(
        lam=lam,
        kernel_dim=int(basis.shape[1]),
        signature=int(np.sum(gamma > form_tol)) - int(np.sum(gamma < -form_tol)),
        degenerate=degenerate,
    )


def _touching_candidates(lams: np.ndarray, smallest: np.ndarray, counts: np.ndarray) -> List[Tuple[float, float, float]]:
    """Interior local minima of min |mu| where the negative count does not change.

    Ties are resolved to the right so a minimum midway between two samples is kept once.
    """
    brackets = []
    for i in range(1, len(lams) - 1):
        steady = counts[i - 1] == counts[i] == counts[i + 1]
        if steady and smallest[i] <= smallest[i - 1] and smallest[i] < smallest[i + 1]:
            brackets.append((float(lams[i - 1]), float(lams[i]), float(lams[i + 1])))
    return brackets


def oracle_sfl_crossings(
    split: SignatureSplit,
    source: Source,
    spectrum: DomainSpectrum,
    n_blocks: Optional[int] = None,
    n_samples: int = N_SAMPLES,
    tol: Optional[float] = None,
    strict: bool = False,
    rule: QuadratureRule = GaussLegendre(),
) -> CrossingResult:
    """Spectral flow as the sum of crossing-form signatures over the crossings of the assembled path.

    Crossings are bracketed where the negative-eigenvalue count changes between uniform samples and refined
    by bisection to CROSSING_LAMBDA_TOL. Interior minima of min |mu| without a count change are refined by
    bounded Brent search (golden section with parabolic steps); a refined minimum that hides a pair of
    crossings is split by bisection, otherwise it is kept as a touching crossing when it reaches the
    kernel tolerance.

    Args:
        split: Signature split of A
        source: Constant matrix, matrix path, or x-dependent field
        spectrum: Dirichlet spectrum of the domain
        n_blocks: Number of retained modes, default truncation rank + 2
        n_samples: Number of uniform lambda samples
        tol: Tolerance for zero eigenvalues of the crossing form
        strict: Raise DegenerateCrossing instead of flagging the result unreliable

    Returns:
        CrossingResult with the signed sum, the crossings in ascending lambda and a reliability flag
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be at least 2, got {n_samples}")
    if n_blocks is None:
        n_blocks = default_n_blocks(split, source, spectrum, rule)
    assembler = Assembler(split, source, spectrum, n_blocks, rule)
    lams = np.linspace(0.0, 1.0, n_samples)
    eigenvalues = assembler.eigenvalues(lams)
    counts = np.sum(eigenvalues < 0, axis=1)
    smallest = np.min(np.abs(eigenvalues), axis=1)
    for i, lam in ((0, 0.0), (-1, 1.0)):
        if smallest[i] <= _zero_tol(eigenvalues[i], tol):
            raise SingularEndpoint(
                f"Assembled matrix at lambda = {lam:g} has eigenvalue {smallest[i]:.3e} within tolerance of zero",
                lam=lam,
                eigenvalue=float(smallest[i]),
            )

    def count(lam):
        return int(np.sum(assembler.eigenvalues(lam)[0] < 0))

    locations = []
    for i in np.nonzero(counts[:-1] != counts[1:])[0]:
        for a, b in _locate(count, float(lams[i]), float(lams[i + 1]), int(counts[i]), int(counts[i + 1])):
            locations.append((a + b) / 2)

    def min_abs(lam):
        return float(np.min(np.abs(assembler.eigenvalues(lam)[0])))

    for a, _, b in _touching_candidates(lams, smallest, counts):
        found = optimize.minimize_scalar(min_abs, bounds=(a, b), method="bounded", options={"xatol": CROSSING_LAMBDA_TOL})
        x, n_a, n_x = float(found.x), count(a), count(float(found.x))
        if n_x != n_a:
            # two crossings between neighbouring samples
            for lo, hi in _locate(count, a, x, n_a, n_x) + _locate(count, x, b, n_x, n_a):
                locations.append((lo + hi) / 2)
        elif found.fun <= KERNEL_TOL_REL * max(1.0, float(np.max(np.abs(assembler.eigenvalues(x)[0])))):
            locations.append(x)

    merged = []
    for lam in sorted(locations):
        if not merged or lam - merged[-1] > CROSSING_MERGE_TOL:
            merged.append(lam)
    crossings = tuple(_crossing(assembler, lam, tol) for lam in merged)
    degenerate = [c for c in crossings if c.degenerate]
    if degenerate and strict:
        raise DegenerateCrossing(f"Degenerate crossing form at lambda = {degenerate[0].lam:.10g}")
    if degenerate:
        logging.warning("%d degenerate crossings; the crossing count is unreliable", len(degenerate))
    value = sum(c.signature for c in crossings)
    logging.info("oracle crossing method: %d crossings, sfl=%d", len(crossings), value)
    return CrossingResult(value=value, crossings=crossings, reliable=not degenerate)


def oracle_eigen_curves(
    split: SignatureSplit,
    source: Source,
    spectrum: DomainSpectrum,
    n_blocks: int,
    lambdas: Sequence[float],
    rule: QuadratureRule = GaussLegendre(),
) -> np.ndarray:
    """Eigenvalues along lambda: shape (len(lambdas), n_blocks, p) per block for block-diagonal sources,
    (len(lambdas), 1, n_blocks * p) for x-dependent fields."""
    assembler = Assembler(split, source, spectrum, n_blocks, rule)
    m = assembler.matrices(lambdas)
    if not assembler.block_diagonal:
        return np.asarray(batched_eigvalsh(m))[:, None, :]
    p = split.p
    blocks = jnp.stack([m[:, k * p:(k + 1) * p, k * p:(k + 1) * p] for k in range(n_blocks)], axis=1)
    return np.asarray(jax.vmap(batched_eigvalsh)(blocks))
