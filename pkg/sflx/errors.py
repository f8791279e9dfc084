"""Exception hierarchy for SFLX.

Failures caused by bad input derive from ``ValueError`` so callers that only know about
builtin exceptions still catch them. Numerical grazing (eigenvalues close to zero,
margins below tolerance) is never an exception: it is reported as a ``ReportWarning``
on the returned report or verdict.
"""


class SFLXError(Exception):
    """Base class of every error raised by the toolkit."""


class NoConvergence(SFLXError, ArithmeticError):
    """Cyclic Jacobi iteration exceeded its sweep limit."""


class DimensionMismatch(SFLXError, ValueError):
    """Matrix or block dimensions disagree with the signature split."""


class AsymmetryError(SFLXError, ValueError):
    """Matrix input is not symmetric within the accepted tolerance."""


class InvalidDomain(SFLXError, ValueError):
    """Domain sizes are nonpositive or a custom spectrum is malformed."""


class OutOfRange(SFLXError, ValueError):
    """Argument outside the supported evaluation range."""


class SpectrumExhausted(OutOfRange):
    """More eigenvalues requested than the spectrum can certify."""


class BracketFailure(SFLXError, RuntimeError):
    """Sign-change scan found fewer zeros than requested (internal error)."""


class InvalidSignatureSplit(SFLXError, ValueError):
    """Signature split (p1, p2) not admissible for the requested criterion."""


class EmptyInput(SFLXError, ValueError):
    """A required sample collection is empty."""


class UnsupportedDomain(SFLXError, ValueError):
    """Operation is only defined for a different kind of domain."""


class SingularEndpoint(SFLXError, ArithmeticError):
    """Assembled operator at an endpoint of the path has a near-zero eigenvalue."""

    def __init__(self, message: str, lam: float = float("nan"), eigenvalue: float = float("nan")):
        super().__init__(message)
        self.lam = lam
        self.eigenvalue = eigenvalue


class DegenerateCrossing(SFLXError, ArithmeticError):
    """Crossing form has a zero eigenvalue within tolerance."""


class SchemaError(SFLXError, ValueError):
    """Problem file is missing fields, has extra fields or has the wrong shape."""
