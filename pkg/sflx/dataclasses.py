import enum
from typing import Optional, Tuple, Union

import chex
import jax.numpy as jnp
from box import Box
from flax import struct

from sflx.errors import InvalidSignatureSplit

# Relative threshold for classifying an eigenvalue as zero: |mu| <= ZERO_TOL_REL * max(1, |M|_max)
ZERO_TOL_REL = 1e-9
# Minimum margin for a strict inequality to count as a witness
WITNESS_TOL = 1e-7
# Truncation rank is the first k with alpha_k > TRUNCATION_MARGIN * |B|
TRUNCATION_MARGIN = 1.1
# Jacobi iteration
EIGEN_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
# Galerkin oracle
N_SAMPLES = 256
KERNEL_TOL_REL = 1e-7
FD_STEP = 1e-5
CROSSING_LAMBDA_TOL = 1e-10
# Problem files
SCHEMA_VERSION = 1
SYMMETRY_TOL = 1e-12


class DomainKind(str, enum.Enum):
    INTERVAL = "interval"
    BOX = "box"
    DISC = "disc"
    CUSTOM = "custom"


class Outcome(str, enum.Enum):
    WITNESS_FOUND = "witness_found"
    NO_WITNESS = "no_witness"
    INDETERMINATE = "indeterminate"


class ComparisonRole(str, enum.Enum):
    UPPER_C = "upper_c"
    LOWER_D = "lower_d"


class RadialMonotonicity(str, enum.Enum):
    NON_DECREASING = "non_decreasing"
    NON_INCREASING = "non_increasing"
    UNKNOWN = "unknown"


class Definiteness(str, enum.Enum):
    POSITIVE_DEFINITE = "positive_definite"
    NEGATIVE_DEFINITE = "negative_definite"
    INDEFINITE = "indefinite"
    DEGENERATE = "degenerate"


@struct.dataclass
class SymmetricMatrix:
    """Dense real symmetric matrix. Build with `sflx.linalg.symmat.from_array`, which enforces symmetry.

    Args:
        entries (chex.Array): p x p array with entries[i, j] == entries[j, i]
    """
    entries: chex.Array

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])


@struct.dataclass
class EigenDecomposition:
    """Result of the cyclic Jacobi eigensolver.

    Args:
        eigenvalues (chex.Array): Ascending eigenvalues
        eigenvectors (chex.Array): Orthonormal eigenvectors as columns, paired with eigenvalues
        residual (chex.Scalar): max |M - Q diag(w) Q^T|
        ortho_error (chex.Scalar): max |Q^T Q - I|
        sweeps (int): Number of Jacobi sweeps used
    """
    eigenvalues: chex.Array
    eigenvectors: chex.Array
    residual: chex.Scalar
    ortho_error: chex.Scalar
    sweeps: int = struct.field(pytree_node=False, default=0)


@struct.dataclass
class InertiaTriple:
    n_neg: int = struct.field(pytree_node=False)
    n_zero: int = struct.field(pytree_node=False)
    n_pos: int = struct.field(pytree_node=False)

    @property
    def dim(self) -> int:
        return self.n_neg + self.n_zero + self.n_pos

    @property
    def signature(self) -> int:
        return self.n_pos - self.n_neg

    @property
    def morse(self) -> int:
        return self.n_neg


@struct.dataclass
class SignatureSplit:
    """Numbers of negative (p1) and positive (p2) diagonal entries of A = diag(-1, ..., -1, 1, ..., 1).

    Args:
        p1 (int): Number of -1 entries of A
        p2 (int): Number of +1 entries of A
    """
    p1: int = struct.field(pytree_node=False)
    p2: int = struct.field(pytree_node=False)

    def __post_init__(self):
        if self.p1 < 0 or self.p2 < 0 or self.p1 + self.p2 < 1:
            raise InvalidSignatureSplit(
                f"Signature split needs p1, p2 >= 0 and p1 + p2 >= 1, got ({self.p1}, {self.p2})"
            )

    @property
    def p(self) -> int:
        return self.p1 + self.p2

    @property
    def minus_a(self) -> chex.Array:
        """-A = diag(+1 x p1, -1 x p2)."""
        return jnp.diag(jnp.concatenate([jnp.ones(self.p1), -jnp.ones(self.p2)]))

    @property
    def signature_minus_a(self) -> int:
        return self.p1 - self.p2


@struct.dataclass
class DomainSpec:
    """Description of the domain U whose Dirichlet Laplacian spectrum is used.

    Args:
        kind (DomainKind): Interval, box, disc or explicit (custom) spectrum
        lengths (tuple): Side lengths for interval (one entry) and box
        radius (float): Disc radius
        values (tuple): Ascending eigenvalues of a custom spectrum
    """
    kind: DomainKind = struct.field(pytree_node=False)
    lengths: Tuple[float, ...] = struct.field(pytree_node=False, default=())
    radius: float = struct.field(pytree_node=False, default=0.0)
    values: Tuple[float, ...] = struct.field(pytree_node=False, default=())

    @property
    def dimension(self) -> int:
        if self.kind == DomainKind.DISC:
            return 2
        if self.kind == DomainKind.CUSTOM:
            return 1
        return len(self.lengths)


@struct.dataclass
class ReportWarning:
    """A numerical condition that does not stop a computation but weakens its conclusion.

    Args:
        kind (str): e.g. "singular_block", "boundary_singular", "monotonicity", "indeterminate_margin"
        message (str): Human readable description
        k (int): Spectrum index concerned, if any
        margin (float): Distance to the violated or grazed inequality
    """
    kind: str = struct.field(pytree_node=False)
    message: str = struct.field(pytree_node=False)
    k: Optional[int] = struct.field(pytree_node=False, default=None)
    margin: float = struct.field(pytree_node=False, default=float("nan"))


@struct.dataclass
class SingularBlock:
    k: int = struct.field(pytree_node=False)
    distance: float = struct.field(pytree_node=False)


@struct.dataclass
class IndexReport:
    """Index i(B) = 1/2 sum_k (sgn(L^k) - sgn(-A)) with its diagnostics.

    Args:
        index (int): The index
        truncation_rank (int): Number of blocks summed
        block_signatures (tuple): sgn(L^k) for k = 1 .. truncation_rank
        singular_blocks (tuple): Blocks with an eigenvalue within tolerance of zero
    """
    index: int = struct.field(pytree_node=False)
    truncation_rank: int = struct.field(pytree_node=False)
    block_signatures: Tuple[int, ...] = struct.field(pytree_node=False)
    singular_blocks: Tuple[SingularBlock, ...] = struct.field(pytree_node=False, default=())

    @property
    def warnings(self) -> Tuple[ReportWarning, ...]:
        return tuple(
            ReportWarning(
                kind="singular_block",
                message=f"Reduced block L^{b.k} has an eigenvalue {b.distance:.3e} from zero",
                k=b.k,
                margin=b.distance,
            )
            for b in self.singular_blocks
        )


@struct.dataclass
class SflResult:
    """Integer spectral flow with the warnings collected while computing it."""
    value: int = struct.field(pytree_node=False)
    warnings: Tuple[ReportWarning, ...] = struct.field(pytree_node=False, default=())
    index_0: Optional[IndexReport] = struct.field(pytree_node=False, default=None)
    index_1: Optional[IndexReport] = struct.field(pytree_node=False, default=None)


@struct.dataclass
class Witness:
    """Eigenvalue interval (lo, hi) containing +alpha_k (block 1) or -alpha_k (block 2).

    Args:
        j (int): 1-based eigenvalue index within the block
        k (int): 1-based spectrum index
        alpha_k (float): Dirichlet eigenvalue alpha_k
        interval (tuple): Open interval (lo, hi)
        block (int): 1 for the p1 block (+alpha_k), 2 for the p2 block (-alpha_k)
        margin (float): min(value - lo, hi - value)
    """
    j: int = struct.field(pytree_node=False)
    k: int = struct.field(pytree_node=False)
    alpha_k: float = struct.field(pytree_node=False)
    interval: Tuple[float, float] = struct.field(pytree_node=False)
    block: int = struct.field(pytree_node=False, default=1)
    margin: float = struct.field(pytree_node=False, default=float("inf"))


@struct.dataclass
class BifurcationVerdict:
    """Outcome of a bifurcation criterion.

    Args:
        outcome (Outcome): Witness found, no witness, or indeterminate
        witness (Witness): Witnessing data when one exists
        clause (str): Which criterion or clause produced the verdict
        warnings (tuple): Warnings collected while checking
        provisos (tuple): Hypotheses the verdict relies on but did not verify
    """
    outcome: Outcome = struct.field(pytree_node=False)
    witness: Optional[Witness] = struct.field(pytree_node=False, default=None)
    clause: str = struct.field(pytree_node=False, default="")
    warnings: Tuple[ReportWarning, ...] = struct.field(pytree_node=False, default=())
    provisos: Tuple[str, ...] = struct.field(pytree_node=False, default=())


@struct.dataclass
class ComparisonPair:
    """Comparison blocks at the path endpoints: C (upper) or D (lower) matrices.

    block_1_* are p1 x p1, block_2_* are p2 x p2; the suffix is the value of lambda.
    """
    role: ComparisonRole = struct.field(pytree_node=False)
    block_1_0: SymmetricMatrix
    block_2_0: SymmetricMatrix
    block_1_1: SymmetricMatrix
    block_2_1: SymmetricMatrix


@struct.dataclass
class EnvelopeBounds:
    """gamma_l = sup of the largest and beta_l = inf of the smallest eigenvalue of B_l(x) over x."""
    gamma_0: float = struct.field(pytree_node=False)
    gamma_1: float = struct.field(pytree_node=False)
    beta_0: float = struct.field(pytree_node=False)
    beta_1: float = struct.field(pytree_node=False)


@struct.dataclass
class Bounds2x2:
    """Entrywise bounds of a 2 x 2 coefficient field over the closure of U (at one lambda)."""
    min_b11: float = struct.field(pytree_node=False)
    max_b11: float = struct.field(pytree_node=False)
    min_b22: float = struct.field(pytree_node=False)
    max_b22: float = struct.field(pytree_node=False)
    max_abs_b12: float = struct.field(pytree_node=False)

    def __post_init__(self):
        if self.min_b11 > self.max_b11 or self.min_b22 > self.max_b22 or self.max_abs_b12 < 0:
            raise ValueError(f"Inconsistent entry bounds: {self}")


@struct.dataclass
class ShrinkProblem:
    """Bifurcation-radius problem on the shrinking family U_r, r in (0, radius].

    Args:
        split (SignatureSplit): Signature split of A
        domain (DomainSpec): The domain U
        B (SymmetricMatrix): Constant coefficient matrix (constant case)
        bounds (Bounds2x2): Entrywise bounds (2 x 2 x-dependent case)
        radial_monotonicity (RadialMonotonicity): Asserted sign of d/dr <B(rx)u, u> at r = 1
        radius (float): Radius r of U_r at which the criterion is evaluated
    """
    split: SignatureSplit
    domain: DomainSpec
    B: Optional[SymmetricMatrix] = None
    bounds: Optional[Bounds2x2] = struct.field(pytree_node=False, default=None)
    radial_monotonicity: RadialMonotonicity = struct.field(
        pytree_node=False, default=RadialMonotonicity.UNKNOWN
    )
    radius: float = struct.field(pytree_node=False, default=1.0)


@struct.dataclass
class CrossingFormReport:
    definite: Definiteness = struct.field(pytree_node=False)
    regular: bool = struct.field(pytree_node=False)


@struct.dataclass
class GalerkinMatrix:
    """Truncation of L = T + K to the first n_blocks Dirichlet modes.

    Row (k - 1) * p + i belongs to basis function f_k e_i.
    """
    n_blocks: int = struct.field(pytree_node=False)
    split: SignatureSplit
    entries: chex.Array


@struct.dataclass
class Crossing:
    """A parameter value where the assembled matrix is singular.

    Args:
        lam (float): Location of the crossing
        kernel_dim (int): Dimension of the numerical kernel
        signature (int): Signature of the crossing form on the kernel
        degenerate (bool): The crossing form has a zero eigenvalue within tolerance
    """
    lam: float = struct.field(pytree_node=False)
    kernel_dim: int = struct.field(pytree_node=False)
    signature: int = struct.field(pytree_node=False)
    degenerate: bool = struct.field(pytree_node=False, default=False)


@struct.dataclass
class CrossingResult:
    value: int = struct.field(pytree_node=False)
    crossings: Tuple[Crossing, ...] = struct.field(pytree_node=False, default=())
    reliable: bool = struct.field(pytree_node=False, default=True)


@struct.dataclass
class ProblemFile:
    """Validated problem file. `data` holds the mode-specific fields as plain (frozen) lists.

    Args:
        schema_version (int): Problem file schema version
        mode (str): Computation to run
        domain (DomainSpec): Domain U
        split (SignatureSplit): Signature split of A
        data (Box): Mode-specific matrices, bounds, samples, field descriptions
        tolerances (Box): zero_tol, witness_tol, truncation_margin overrides
        oracle (Box): n_blocks, n_samples overrides
    """
    schema_version: int = struct.field(pytree_node=False)
    mode: str = struct.field(pytree_node=False)
    domain: DomainSpec = struct.field(pytree_node=False)
    split: SignatureSplit = struct.field(pytree_node=False)
    data: Box = struct.field(pytree_node=False)
    tolerances: Box = struct.field(pytree_node=False, default_factory=lambda: Box(frozen_box=True))
    oracle: Box = struct.field(pytree_node=False, default_factory=lambda: Box(frozen_box=True))


@struct.dataclass
class Report:
    """Outcome of running a problem.

    Args:
        mode (str): Mode of the problem
        provenance (str): Operation and criterion that produced the result
        result (int): Integer result (index or spectral flow), if the mode computes one
        verdict (BifurcationVerdict): Verdict, if the mode decides a criterion
        warnings (tuple): All warnings, including those of the verdict
        echo (dict): The problem as it was parsed
        details (dict): Mode-specific extra output (crossings, block signatures, ...)
    """
    mode: str = struct.field(pytree_node=False)
    provenance: str = struct.field(pytree_node=False)
    result: Optional[int] = struct.field(pytree_node=False, default=None)
    verdict: Optional[BifurcationVerdict] = struct.field(pytree_node=False, default=None)
    warnings: Tuple[ReportWarning, ...] = struct.field(pytree_node=False, default=())
    echo: Optional[dict] = struct.field(pytree_node=False, default=None)
    details: Optional[dict] = struct.field(pytree_node=False, default=None)


MatrixLike = Union[SymmetricMatrix, chex.Array]
