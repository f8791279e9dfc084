"""Bessel functions of the first kind J_n for integer order, and their positive zeros.

J_n is evaluated with the ascending power series for x <= SERIES_MAX_X and with Miller's
backward recurrence, normalised by J_0 + 2 sum_k J_2k = 1, above it. The Hankel asymptotic
expansion is provided separately as an independent large-argument check.

Zeros are enumerated for every order that has one in the evaluation window (0, MAX_ARG].
Orders above MAX_ORDER have none there, since j_{nu,1} > sqrt(nu (nu + 2)).
"""
import math
from functools import lru_cache
from typing import Tuple

import chex
import jax
import jax.numpy as jnp
import numpy as np
from absl import logging
from jax.scipy.special import gammaln
from scipy import optimize

from sflx.errors import BracketFailure, OutOfRange

MAX_ARG = 200.0
MAX_ORDER = 199
# Number of zeros of J_0 below MAX_ARG; no order has more
MAX_ZERO_INDEX = 63
SERIES_MAX_X = 8.0
SERIES_TERM_TOL = 1e-18
SERIES_MAX_TERMS = 80
# Even start index of the backward recurrence; large enough for x <= MAX_ARG and n <= MAX_ORDER + 1
_MILLER_BASE = int(max(MAX_ARG, MAX_ORDER + 1))
MILLER_START = 2 * ((_MILLER_BASE + int(math.sqrt(240 * _MILLER_BASE))) // 2)
RESCALE_ABOVE = 1e10
SCAN_STEP = 0.1
ZERO_XTOL = 1e-13
ZERO_RESIDUAL_TOL = 1e-11
# Kernel inputs are padded to one of these lengths so jit compiles a handful of shapes
PAD_SIZES = (64, 256, 1024, 4096)


def _series(n: chex.Array, x: chex.Array) -> chex.Array:
    half = x / 2
    positive = half > 0
    log_first = n * jnp.log(jnp.where(positive, half, 1.0)) - gammaln(n + 1.0)
    first = jnp.where(positive, jnp.exp(log_first), jnp.where(n == 0, 1.0, 0.0))

    def cond_fn(state):
        m, term, _ = state
        return (m < SERIES_MAX_TERMS) & jnp.any(jnp.abs(term) > SERIES_TERM_TOL)

    def body_fn(state):
        m, term, total = state
        term = -term * half * half / ((m + 1) * (m + 1 + n))
        return m + 1, term, total + term

    _, _, total = jax.lax.while_loop(cond_fn, body_fn, (0, first, first))
    return total


def _miller(n: chex.Array, x: chex.Array) -> chex.Array:
    two_over_x = 2.0 / x

    def body_fn(i, state):
        bjp, bj, total, ans = state
        j = MILLER_START - i
        bjm = j * two_over_x * bj - bjp
        bjp, bj = bj, bjm
        big = jnp.abs(bj) > RESCALE_ABOVE
        scale = jnp.where(big, 1.0 / RESCALE_ABOVE, 1.0)
        bj, bjp, ans, total = bj * scale, bjp * scale, ans * scale, total * scale
        # bj now holds the unnormalised J_{j-1}; accumulate even orders
        total = total + jnp.where(j % 2 == 1, bj, 0.0)
        ans = jnp.where(j == n, bjp, ans)
        return bjp, bj, total, ans

    zero = jnp.zeros_like(x)
    init = (zero, jnp.ones_like(x), zero, zero)
    _, bj, total, ans = jax.lax.fori_loop(0, MILLER_START, body_fn, init)
    ans = jnp.where(n == 0, bj, ans)
    return ans / (2.0 * total - bj)


@jax.jit
def bessel_j_kernel(n: chex.Numeric, x: chex.Array) -> chex.Array:
    """J_n(x) for an integer order 0 <= n <= MAX_ORDER + 1 and 0 <= x <= MAX_ARG, elementwise."""
    n = jnp.asarray(n, dtype=jnp.int64)
    x = jnp.asarray(x, dtype=jnp.float64)
    small = x <= SERIES_MAX_X
    # Each branch gets an argument from its own range so the unused one stays finite
    x_series = jnp.where(small, x, 0.0)
    x_miller = jnp.where(small, SERIES_MAX_X + 1.0, x)
    return jnp.where(small, _series(n, x_series), _miller(n, x_miller))


def _padded(n: int, x: np.ndarray) -> np.ndarray:
    """bessel_j_kernel on a 1-D array, padded to a fixed length."""
    size = next((s for s in PAD_SIZES if s >= x.size), x.size)
    padded = np.full(size, SERIES_MAX_X)
    padded[: x.size] = x
    return np.asarray(bessel_j_kernel(n, padded))[: x.size]


def _check_order(n: int, max_order: int = MAX_ORDER):
    if int(n) != n or not 0 <= n <= max_order:
        raise OutOfRange(f"Bessel order must be an integer in [0, {max_order}], got {n}")


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x).

    Args:
        n: Integer order, 0 <= n <= MAX_ORDER
        x: Argument(s), 0 <= x <= MAX_ARG

    Returns:
        float for scalar x, numpy array otherwise
    """
    _check_order(n)
    xs = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(xs)) or np.any(xs < 0) or np.any(xs > MAX_ARG):
        raise OutOfRange(f"Bessel argument must lie in [0, {MAX_ARG}]")
    values = np.asarray(bessel_j_kernel(int(n), xs))
    return float(values) if values.ndim == 0 else values


def bessel_j_derivative(n: int, x):
    """J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2, with J_{-1} = -J_1."""
    _check_order(n)
    lower = -bessel_j_kernel(1, x) if n == 0 else bessel_j_kernel(int(n) - 1, x)
    return (lower - bessel_j_kernel(int(n) + 1, x)) / 2


def bessel_j_asymptotic(n: int, x, terms: int = 8):
    """Hankel large-argument expansion sqrt(2 / (pi x)) (P cos w - Q sin w), w = x - n pi / 2 - pi / 4.

    Accurate when x is much larger than n**2; used to check the recurrence branch.
    """
    x = np.asarray(x, dtype=np.float64)
    mu = 4.0 * n * n
    p_sum, q_sum = np.zeros_like(x), np.zeros_like(x)
    coeff = 1.0
    for k in range(2 * terms):
        if k > 0:
            coeff *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = coeff / x ** k
        sign = (-1) ** (k // 2)
        if k % 2 == 0:
            p_sum = p_sum + sign * term
        else:
            q_sum = q_sum + sign * term
    omega = x - n * np.pi / 2 - np.pi / 4
    values = np.sqrt(2 / (np.pi * x)) * (p_sum * np.cos(omega) - q_sum * np.sin(omega))
    return float(values) if values.ndim == 0 else values


@lru_cache(maxsize=None)
def bessel_zeros_in_window(n: int) -> Tuple[float, ...]:
    """All positive zeros of J_n in (0, MAX_ARG], increasing; empty when the first lies beyond.

    Sign changes on a SCAN_STEP grid starting at n / 2 (no zero lies below n) bracket the
    zeros. All brackets are refined together by Newton's method from their midpoints; any
    root that leaves its bracket is redone by bisection.
    """
    _check_order(n)
    grid = np.arange(max(n, 1) * 0.5, MAX_ARG + SCAN_STEP / 2, SCAN_STEP)
    values = _padded(n, grid)
    signs = np.sign(values)
    brackets = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    exact = grid[values == 0.0]
    if brackets.size == 0:
        zeros = np.sort(exact)
    else:
        lo, hi = grid[brackets], grid[brackets + 1]

        def f(t):
            return _padded(n, np.atleast_1d(t))

        def fprime(t):
            t = np.atleast_1d(t)
            lower = -_padded(1, t) if n == 0 else _padded(n - 1, t)
            return (lower - _padded(n + 1, t)) / 2

        roots, converged, _ = optimize.newton(
            f, (lo + hi) / 2, fprime=fprime, tol=ZERO_XTOL, maxiter=50, full_output=True, disp=False
        )
        roots = np.atleast_1d(np.asarray(roots, dtype=np.float64))
        for i in np.nonzero(~np.asarray(converged) | (roots <= lo) | (roots >= hi))[0]:
            roots[i] = optimize.bisect(lambda t: float(f(t)[0]), lo[i], hi[i], xtol=ZERO_XTOL)
        zeros = np.sort(np.concatenate([roots, exact]))
    if zeros.size:
        residual = np.abs(_padded(n, zeros))
        worst = int(np.argmax(residual))
        if residual[worst] > ZERO_RESIDUAL_TOL:
            raise BracketFailure(f"Zero of J_{n} near {zeros[worst]} has residual {residual[worst]:.3e}")
    logging.debug("Found %d zeros of J_%d below %.1f", zeros.size, n, MAX_ARG)
    return tuple(float(z) for z in zeros)


def bessel_zeros(n: int, m: int) -> np.ndarray:
    """The first m positive zeros of J_n, strictly increasing."""
    _check_order(n)
    if int(m) != m or not 1 <= m <= MAX_ZERO_INDEX:
        raise OutOfRange(f"Zero index must be an integer in [1, {MAX_ZERO_INDEX}], got {m}")
    zeros = bessel_zeros_in_window(int(n))
    if len(zeros) < m:
        raise OutOfRange(f"J_{n} has only {len(zeros)} zeros below {MAX_ARG}, {m} requested")
    return np.asarray(zeros[:m])


def bessel_zero(n: int, m: int) -> float:
    """beta_{nm}: the m-th positive zero of J_n, with |J_n(beta_{nm})| <= 1e-11."""
    return float(bessel_zeros(n, m)[-1])
