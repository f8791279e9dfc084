"""Paths lambda -> B_lambda on [0, 1] and x-dependent coefficient fields on an interval."""
import math
from typing import Tuple, Union

import chex
import jax.numpy as jnp
import numpy as np
from flax import struct

from sflx.errors import AsymmetryError, DimensionMismatch
from sflx.linalg.symmat import entries_of, operator_norm

MAX_POLYNOMIAL_DEGREE = 6


@struct.dataclass
class LinearPath:
    """B_lambda = (1 - lambda) B0 + lambda B1; reproduces B0 and B1 exactly at the endpoints."""
    b0: chex.Array
    b1: chex.Array

    def __call__(self, lam):
        return (1 - lam) * self.b0 + lam * self.b1

    @property
    def dim(self) -> int:
        return int(self.b0.shape[0])

    def norm_bound(self) -> float:
        return max(operator_norm(self.b0), operator_norm(self.b1))


@struct.dataclass
class SampledPath:
    """Piecewise-linear interpolation of matrices given at increasing lambdas from 0 to 1."""
    lambdas: chex.Array
    matrices: chex.Array

    def __call__(self, lam):
        i = jnp.clip(jnp.searchsorted(self.lambdas, lam, side="right") - 1, 0, self.lambdas.shape[0] - 2)
        t = (lam - self.lambdas[i]) / (self.lambdas[i + 1] - self.lambdas[i])
        return (1 - t) * self.matrices[i] + t * self.matrices[i + 1]

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    def norm_bound(self) -> float:
        return max(operator_norm(m) for m in self.matrices)


@struct.dataclass
class PolynomialPath:
    """B_lambda = sum_i lambda**i C_i; degree one gives affine paths."""
    coefficients: chex.Array

    def __call__(self, lam):
        powers = lam ** jnp.arange(self.coefficients.shape[0])
        return jnp.tensordot(powers, self.coefficients, axes=1)

    @property
    def dim(self) -> int:
        return int(self.coefficients.shape[1])

    def norm_bound(self) -> float:
        return sum(operator_norm(c) for c in self.coefficients)


MatrixPath = Union[LinearPath, SampledPath, PolynomialPath]


def _square_stack(matrices, name: str) -> chex.Array:
    shapes = {jnp.shape(m) for m in matrices}
    if len(shapes) != 1:
        raise DimensionMismatch(f"{name} mixes matrix shapes {sorted(shapes)}")
    a = jnp.asarray(matrices, dtype=jnp.float64)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimensionMismatch(f"{name} must be a stack of square matrices, got shape {a.shape}")
    if float(jnp.max(jnp.abs(a - jnp.swapaxes(a, 1, 2)))) > 0:
        raise AsymmetryError(f"{name} contains a nonsymmetric matrix")
    return a


def linear_path(b0, b1) -> LinearPath:
    stack = _square_stack([entries_of(b0), entries_of(b1)], "Path endpoints")
    return LinearPath(b0=stack[0], b1=stack[1])


def constant_path(b) -> LinearPath:
    return linear_path(b, b)


def sampled_path(lambdas, matrices) -> SampledPath:
    lambdas = jnp.asarray(lambdas, dtype=jnp.float64)
    stack = _square_stack([entries_of(m) for m in matrices], "Sampled path")
    if lambdas.ndim != 1 or lambdas.shape[0] != stack.shape[0] or lambdas.shape[0] < 2:
        raise DimensionMismatch("Sampled path needs at least two (lambda, matrix) pairs")
    if float(lambdas[0]) != 0.0 or float(lambdas[-1]) != 1.0 or bool(jnp.any(jnp.diff(lambdas) <= 0)):
        raise ValueError("Sampled path lambdas must increase from 0 to 1")
    return SampledPath(lambdas=lambdas, matrices=stack)


def polynomial_path(coefficients) -> PolynomialPath:
    return PolynomialPath(coefficients=_square_stack([entries_of(c) for c in coefficients], "Polynomial path"))


@struct.dataclass
class EntryProfile:
    """One entry of B(x) on [0, L]: constant, polynomial in x (ascending coefficients) or tabulated.

    Tabulated values sit on a uniform grid covering [0, L] and are linearly interpolated.
    """
    kind: str = struct.field(pytree_node=False)
    values: Tuple[float, ...] = struct.field(pytree_node=False)

    def __post_init__(self):
        if self.kind == "constant" and len(self.values) != 1:
            raise ValueError("A constant profile has exactly one value")
        if self.kind == "polynomial" and not 1 <= len(self.values) <= MAX_POLYNOMIAL_DEGREE + 1:
            raise ValueError(f"Polynomial profiles have degree at most {MAX_POLYNOMIAL_DEGREE}")
        if self.kind == "tabulated" and len(self.values) < 2:
            raise ValueError("A tabulated profile needs at least two values")
        if self.kind not in ("constant", "polynomial", "tabulated"):
            raise ValueError(f"Unknown profile kind {self.kind}")

    def __call__(self, x: chex.Array, length: float) -> chex.Array:
        values = jnp.asarray(self.values, dtype=jnp.float64)
        if self.kind == "constant":
            return jnp.full_like(x, values[0])
        if self.kind == "polynomial":
            return jnp.polyval(values[::-1], x)
        grid = jnp.linspace(0.0, length, len(self.values))
        return jnp.interp(x, grid, values)

    @property
    def grid_intervals(self) -> int:
        return len(self.values) - 1 if self.kind == "tabulated" else 1


def constant_profile(value: float) -> EntryProfile:
    return EntryProfile(kind="constant", values=(float(value),))


def polynomial_profile(coefficients) -> EntryProfile:
    return EntryProfile(kind="polynomial", values=tuple(float(c) for c in coefficients))


def tabulated_profile(values) -> EntryProfile:
    return EntryProfile(kind="tabulated", values=tuple(float(v) for v in values))


Profiles = Tuple[Tuple[EntryProfile, ...], ...]


@struct.dataclass
class CoefficientField1D:
    """x-dependent coefficients B(lambda, x) = (1 - lambda) B_0(x) + lambda B_1(x) on [0, length].

    Args:
        length (float): Interval length L
        entries_0 (tuple): p x p profiles of B_0
        entries_1 (tuple): p x p profiles of B_1
    """
    length: float = struct.field(pytree_node=False)
    entries_0: Profiles = struct.field(pytree_node=False)
    entries_1: Profiles = struct.field(pytree_node=False)

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValueError(f"Field length must be positive, got {self.length}")
        p = len(self.entries_0)
        for name, profiles in (("entries_0", self.entries_0), ("entries_1", self.entries_1)):
            if len(profiles) != p or any(len(row) != p for row in profiles):
                raise DimensionMismatch(f"{name} must be a {p} x {p} table of profiles")
            for i in range(p):
                for j in range(i):
                    if profiles[i][j] != profiles[j][i]:
                        raise AsymmetryError(f"{name} profiles ({i}, {j}) and ({j}, {i}) differ")

    @property
    def dim(self) -> int:
        return len(self.entries_0)

    def endpoint_values(self, x: chex.Array, endpoint: int) -> chex.Array:
        """B_0(x) or B_1(x) at the points x, shape (len(x), p, p)."""
        profiles = self.entries_0 if endpoint == 0 else self.entries_1
        rows = [jnp.stack([profile(x, self.length) for profile in row], axis=-1) for row in profiles]
        return jnp.stack(rows, axis=-2)

    def __call__(self, lam, x: chex.Array) -> chex.Array:
        return (1 - lam) * self.endpoint_values(x, 0) + lam * self.endpoint_values(x, 1)

    @property
    def grid_intervals(self) -> int:
        """Least common multiple of the tabulation grids, so quadrature panels can align with them."""
        intervals = 1
        for profiles in (self.entries_0, self.entries_1):
            for row in profiles:
                for profile in row:
                    intervals = math.lcm(intervals, profile.grid_intervals)
        return intervals

    def norm_bound(self, x: np.ndarray) -> float:
        """Largest operator norm of B_0(x), B_1(x) over the sample points x."""
        values = np.concatenate([np.asarray(self.endpoint_values(jnp.asarray(x), e)) for e in (0, 1)])
        return float(np.max(np.abs(np.linalg.eigvalsh(values))))
