"""Exception hierarchy.

Every failure mode raised by this package derives from :class:`KahlerLabError`
so callers can catch the whole family at the CLI boundary.
"""

from __future__ import annotations


class KahlerLabError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteIntegrand(KahlerLabError):
    """An integrand evaluated to NaN or infinity at a quadrature node."""


class NoBracket(KahlerLabError):
    """Root finding requested on an interval without a sign change."""


class NoConvergence(KahlerLabError):
    """An iterative method exhausted its iteration budget."""


class RankDeficient(KahlerLabError):
    """A least-squares matrix does not have full column rank."""


class OutOfDomain(KahlerLabError):
    """A parameter lies outside the admissible domain of an operation."""


class SearchFailed(KahlerLabError):
    """A bracketing search could not find the required sign change."""


class NotAdmissible(KahlerLabError):
    """A profile or potential violates positivity/boundary admissibility."""


class NonFiniteCurvature(KahlerLabError):
    """Curvature evaluation produced a non-finite value."""


class BadDirection(KahlerLabError):
    """A probe direction is not supported inside the required region."""


class WeightSignError(KahlerLabError):
    """A quantization weight lambda_j(p) (or C_k) is not positive.

    Signals that the tensor power k is too small for the chosen (p, b0).
    """


class NotTraceless(KahlerLabError):
    """A geodesic direction has a nonzero trace on some block."""


class ConfigError(KahlerLabError):
    """Invalid run configuration (CLI exit code 2)."""
