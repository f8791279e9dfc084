from functools import partial
from typing import Optional, Sequence, Tuple

import chex
import jax
import jax.numpy as jnp
import jax.scipy.linalg
import numpy as np
from absl import logging

from sflx.dataclasses import (
    EIGEN_TOL,
    JACOBI_MAX_SWEEPS,
    ZERO_TOL_REL,
    EigenDecomposition,
    InertiaTriple,
    MatrixLike,
    SymmetricMatrix,
)
from sflx.errors import AsymmetryError, DimensionMismatch, NoConvergence


def _entries(m: MatrixLike) -> chex.Array:
    return m.entries if isinstance(m, SymmetricMatrix) else jnp.asarray(m, dtype=jnp.float64)


def from_array(entries, sym_tol: float = 0.0) -> SymmetricMatrix:
    """Validate and wrap a square array as a SymmetricMatrix.

    Args:
        entries: Square array-like of reals
        sym_tol: Largest accepted asymmetry max|M - M^T|. Accepted input is replaced by (M + M^T) / 2,
            which is exactly symmetric.

    Returns:
        SymmetricMatrix
    """
    a = jnp.atleast_2d(jnp.asarray(entries, dtype=jnp.float64))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"Expected a nonempty square matrix, got shape {a.shape}")
    if not bool(jnp.all(jnp.isfinite(a))):
        raise ValueError("Matrix has non-finite entries")
    asymmetry = float(jnp.max(jnp.abs(a - a.T)))
    if asymmetry > sym_tol:
        raise AsymmetryError(f"Matrix asymmetry {asymmetry:.3e} exceeds tolerance {sym_tol:.3e}")
    if asymmetry > 0:
        a = (a + a.T) / 2
    return SymmetricMatrix(entries=a)


def zeros(p: int) -> SymmetricMatrix:
    return SymmetricMatrix(entries=jnp.zeros((p, p)))


def identity(p: int) -> SymmetricMatrix:
    return SymmetricMatrix(entries=jnp.eye(p))


def default_zero_tol(m: MatrixLike) -> float:
    """Scale-aware zero threshold ZERO_TOL_REL * max(1, |M|_max)."""
    return ZERO_TOL_REL * max(1.0, float(jnp.max(jnp.abs(_entries(m)))))


def _rotation_pairs(p: int) -> np.ndarray:
    return np.array([(i, j) for i in range(p) for j in range(i + 1, p)], dtype=np.int32).reshape(-1, 2)


def _off_norm(a: chex.Array) -> chex.Array:
    return jnp.sqrt(jnp.sum(jnp.square(a - jnp.diag(jnp.diag(a)))))


def _rotate(carry, pair):
    """Apply one Jacobi rotation A <- J^T A J, V <- V J zeroing A[i, j]."""
    a, v = carry
    i, j = pair[0], pair[1]
    aii, ajj, aij = a[i, i], a[j, j], a[i, j]
    nonzero = aij != 0
    tau = (ajj - aii) / (2 * jnp.where(nonzero, aij, 1.0))
    t = jnp.where(tau == 0, 1.0, jnp.sign(tau) / (jnp.abs(tau) + jnp.sqrt(1 + tau * tau)))
    c = jnp.where(nonzero, 1 / jnp.sqrt(1 + t * t), 1.0)
    s = jnp.where(nonzero, t * c, 0.0)

    col_i, col_j = a[:, i], a[:, j]
    a = a.at[:, i].set(c * col_i - s * col_j).at[:, j].set(s * col_i + c * col_j)
    row_i, row_j = a[i, :], a[j, :]
    a = a.at[i, :].set(c * row_i - s * row_j).at[j, :].set(s * row_i + c * row_j)
    a = a.at[i, j].set(jnp.where(nonzero, 0.0, a[i, j])).at[j, i].set(jnp.where(nonzero, 0.0, a[j, i]))
    v_i, v_j = v[:, i], v[:, j]
    v = v.at[:, i].set(c * v_i - s * v_j).at[:, j].set(s * v_i + c * v_j)
    return (a, v), None


@partial(jax.jit, static_argnums=(2,))
def jacobi_eigh(a: chex.Array, tol: chex.Scalar, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps run over all pairs (i, j), i < j, in row order until the off-diagonal Frobenius norm
    drops below tol * |A|_F.

    Args:
        a: Symmetric p x p array
        tol: Relative convergence tolerance
        max_sweeps: Sweep limit

    Returns:
        eigenvalues (ascending), eigenvectors (columns), number of sweeps, final off-diagonal norm
    """
    p = a.shape[0]
    pairs = jnp.asarray(_rotation_pairs(p))
    threshold = tol * jnp.linalg.norm(a)

    def cond_fn(state):
        a, _, sweeps = state
        return (_off_norm(a) > threshold) & (sweeps < max_sweeps)

    def body_fn(state):
        a, v, sweeps = state
        (a, v), _ = jax.lax.scan(_rotate, (a, v), pairs)
        return a, v, sweeps + 1

    a_final, v, sweeps = jax.lax.while_loop(cond_fn, body_fn, (a, jnp.eye(p, dtype=a.dtype), 0))
    w = jnp.diag(a_final)
    # Stable sort keeps the column order of equal eigenvalues
    order = jnp.argsort(w, stable=True)
    return w[order], v[:, order], sweeps, _off_norm(a_final)


@partial(jax.jit, static_argnums=(2,))
def jacobi_eigvalsh_batch(stack: chex.Array, tol: chex.Scalar, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues of a stack of symmetric matrices, shape (n, p, p) -> (n, p), plus sweep counts."""
    w, _, sweeps, off = jax.vmap(jacobi_eigh, in_axes=(0, None, None))(stack, tol, max_sweeps)
    return w, sweeps, off


def _check_converged(sweeps, off, a, tol, max_sweeps):
    sweeps = np.atleast_1d(np.asarray(sweeps))
    off = np.atleast_1d(np.asarray(off))
    scale = np.atleast_1d(np.asarray(jnp.linalg.norm(a, axis=(-2, -1))))
    failed = (sweeps >= max_sweeps) & (off > tol * scale)
    if np.any(failed):
        raise NoConvergence(
            f"Jacobi iteration did not converge in {max_sweeps} sweeps "
            f"(off-diagonal norm {float(np.max(off[failed])):.3e})"
        )


def eigen_decompose(m: MatrixLike, tol: float = EIGEN_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Args:
        m: Symmetric matrix
        tol: Relative off-diagonal convergence tolerance (> 0)
        max_sweeps: Sweep limit

    Returns:
        EigenDecomposition with ascending eigenvalues

    Raises:
        NoConvergence: sweep limit exceeded
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    a = _entries(m)
    w, q, sweeps, off = jacobi_eigh(a, tol, max_sweeps)
    _check_converged(sweeps, off, a, tol, max_sweeps)
    residual = jnp.max(jnp.abs(a - (q * w) @ q.T))
    ortho_error = jnp.max(jnp.abs(q.T @ q - jnp.eye(a.shape[0])))
    logging.debug("Jacobi: p=%d sweeps=%d residual=%.2e", a.shape[0], int(sweeps), float(residual))
    return EigenDecomposition(
        eigenvalues=w, eigenvectors=q, residual=residual, ortho_error=ortho_error, sweeps=int(sweeps)
    )


def eigvalsh(m: MatrixLike, tol: float = EIGEN_TOL) -> np.ndarray:
    """Ascending eigenvalues as a numpy array."""
    return np.asarray(eigen_decompose(m, tol).eigenvalues)


def eigvalsh_stack(stack: chex.Array, tol: float = EIGEN_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Ascending eigenvalues of every matrix in a (n, p, p) stack."""
    stack = jnp.asarray(stack, dtype=jnp.float64)
    w, sweeps, off = jacobi_eigvalsh_batch(stack, tol, max_sweeps)
    _check_converged(sweeps, off, stack, tol, max_sweeps)
    return np.asarray(w)


def inertia_from_eigenvalues(eigenvalues, zero_tol: float) -> InertiaTriple:
    w = np.asarray(eigenvalues)
    n_neg = int(np.sum(w < -zero_tol))
    n_pos = int(np.sum(w > zero_tol))
    return InertiaTriple(n_neg=n_neg, n_zero=int(w.size) - n_neg - n_pos, n_pos=n_pos)


def inertia(m: MatrixLike, zero_tol: Optional[float] = None) -> InertiaTriple:
    """Counts of eigenvalues below, within and above [-zero_tol, zero_tol]."""
    if zero_tol is None:
        zero_tol = default_zero_tol(m)
    return inertia_from_eigenvalues(eigvalsh(m), zero_tol)


def is_psd(m: MatrixLike, tol: Optional[float] = None) -> bool:
    """True iff the smallest eigenvalue is >= -tol."""
    if tol is None:
        tol = default_zero_tol(m)
    return bool(eigvalsh(m)[0] >= -tol)


def loewner_geq(m: MatrixLike, n: MatrixLike, tol: Optional[float] = None) -> bool:
    """M >= N in the Loewner order, i.e. M - N positive semidefinite."""
    m, n = _entries(m), _entries(n)
    if m.shape != n.shape:
        raise DimensionMismatch(f"Cannot compare matrices of shapes {m.shape} and {n.shape}")
    return is_psd(m - n, tol)


def operator_norm(m: MatrixLike) -> float:
    w = eigvalsh(m)
    return float(max(abs(w[0]), abs(w[-1])))


def eigvalsh_2x2(m: MatrixLike) -> Tuple[float, float]:
    """Closed-form eigenvalues of a symmetric 2 x 2 matrix, ascending."""
    a = np.asarray(_entries(m))
    if a.shape != (2, 2):
        raise DimensionMismatch(f"Expected a 2 x 2 matrix, got shape {a.shape}")
    mean = (a[0, 0] + a[1, 1]) / 2
    radius = float(np.hypot((a[0, 0] - a[1, 1]) / 2, a[0, 1]))
    return float(mean - radius), float(mean + radius)


def weyl_upper_bound(m: MatrixLike, n: MatrixLike, l: int, i: int) -> float:
    """Weyl bound mu_l(M + N) <= mu_i(M) + mu_{p+l-i}(N) for 1 <= l <= i <= p (1-based)."""
    wm, wn = eigvalsh(m), eigvalsh(n)
    p = wm.size
    if wn.size != p:
        raise DimensionMismatch(f"Dimensions {p} and {wn.size} differ")
    if not 1 <= l <= i <= p:
        raise ValueError(f"Need 1 <= l <= i <= p, got l={l}, i={i}, p={p}")
    return float(wm[i - 1] + wn[p + l - i - 1])


def block_diag(*blocks: MatrixLike) -> SymmetricMatrix:
    return SymmetricMatrix(entries=jax.scipy.linalg.block_diag(*[_entries(b) for b in blocks]))


def diag_assemble(c1: MatrixLike, c2: MatrixLike) -> SymmetricMatrix:
    """B = diag(C1, C2) with the p1 block first, matching the ordering of A."""
    return block_diag(c1, c2)


def entries_of(m: MatrixLike) -> chex.Array:
    return _entries(m)


def stack_entries(ms: Sequence[MatrixLike]) -> chex.Array:
    return jnp.stack([_entries(m) for m in ms])
