"""Shared numeric kernels: quadrature, bracketed roots, least squares,
and a small ascending-coefficient polynomial type.

Everything here is pure and immutable after construction; callers are free
to use these objects concurrently. Endpoint-singular integrands are the
caller's responsibility (substitute/desingularize first) — the quadrature
kernel stays generic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoBracket, NoConvergence, NonFiniteIntegrand, RankDeficient
from .tolerances import TOL

__all__ = [
    "QuadratureRule",
    "Polynomial",
    "gauss_legendre",
    "graded_rule",
    "integrate",
    "brent_root",
    "solve_least_squares",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for integration over [lo, hi].

    Invariants (tested): weights sum to hi - lo within 1e-13; nodes strictly
    increasing; Gauss rules integrate polynomials up to degree 2*order - 1
    exactly within 1e-12.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")


@lru_cache(maxsize=64)
def _leggauss_cached(order: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    x, w = np.polynomial.legendre.leggauss(order)
    return tuple(x), tuple(w)


def gauss_legendre(order: int, lo: float = -1.0, hi: float = 1.0) -> QuadratureRule:
    """Gauss–Legendre rule with `order` nodes mapped affinely onto [lo, hi]."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if not hi > lo:
        raise ValueError("need hi > lo")
    x, w = _leggauss_cached(int(order))
    x = np.asarray(x)
    w = np.asarray(w)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return QuadratureRule(nodes=mid + half * x, weights=half * w, order=int(order), lo=lo, hi=hi)


def graded_rule(
    lo: float = -1.0, hi: float = 1.0, order: int = 16, levels: int = 40
) -> QuadratureRule:
    """Composite Gauss rule on a mesh geometrically refined toward lo and hi.

    Panel widths halve toward each endpoint, so bounded integrands whose
    derivatives blow up only at the endpoints (x log x type) are integrated
    to near machine accuracy. The innermost panels have width (hi-lo)/2^levels;
    anything a bounded integrand does there is below roundoff.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    mid = 0.5 * (lo + hi)
    cuts = [mid]
    for j in range(1, levels + 1):
        cuts.append(mid + 0.5 * (hi - lo) * (0.5 - 2.0 ** -(j + 1)) * 2.0)
    # cuts now runs mid, ..., approaching hi; mirror for the lo side
    right = np.array(cuts + [hi])
    left = (lo + hi) - right[::-1]
    breaks = np.concatenate([left[:-1], right])
    nodes = []
    weights = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        panel = gauss_legendre(order, float(a), float(b))
        nodes.append(panel.nodes)
        weights.append(panel.weights)
    return QuadratureRule(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        order=int(order),
        lo=float(lo),
        hi=float(hi),
    )


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sum w_i f(z_i). `f` may be vectorized; scalar callables are handled too."""
    try:
        vals = np.asarray(f(rule.nodes), dtype=float)
    except (TypeError, ValueError):
        vals = np.array([float(f(z)) for z in rule.nodes])
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand is not finite at a quadrature node")
    return float(np.dot(rule.weights, vals))


def brent_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = TOL.brent_tol,
    max_iter: int = 100,
) -> float:
    """Root of f on [lo, hi] by Brent's method. Requires a sign change."""
    flo = float(f(lo))
    fhi = float(f(hi))
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0.0:
        raise NoBracket(f"no sign change on [{lo}, {hi}]: f(lo)={flo:g}, f(hi)={fhi:g}")
    try:
        root, info = brentq(f, lo, hi, xtol=tol, maxiter=max_iter, full_output=True)
    except RuntimeError as exc:  # scipy signals maxiter this way
        raise NoConvergence(str(exc)) from exc
    if not info.converged:
        raise NoConvergence(f"brent did not converge in {max_iter} iterations")
    return float(root)


def solve_least_squares(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize ||Ax - y||_2 for a full-column-rank A (rows >= cols).

    Returns (x, residual). Rank deficiency raises RankDeficient. The residual
    is orthogonal to the column span: ||A^T(Ax-y)|| < 1e-10 ||A|| ||y||.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    r, c = A.shape
    if r < c:
        raise ValueError("need at least as many rows as columns")
    x, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < c:
        raise RankDeficient(f"column rank {rank} < {c}")
    return x, float(np.linalg.norm(A @ x - y))


def _trim(coef: np.ndarray) -> np.ndarray:
    nz = np.nonzero(coef)[0]
    if nz.size == 0:
        return coef[:1] * 0.0
    return coef[: nz[-1] + 1]


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial with ascending real coefficients.

    Trailing zero coefficients are trimmed so the stored degree is exact
    (the zero polynomial keeps a single 0.0 coefficient).
    """

    coef: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coef, dtype=float))
        object.__setattr__(self, "coef", _trim(c))

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    def __call__(self, z):
        """Horner evaluation (vectorized over numpy arrays)."""
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for c in self.coef[::-1]:
            out = out * z + c
        return out if out.ndim else float(out)

    def deriv(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial(np.zeros(1))
        n = np.arange(1, len(self.coef))
        return Polynomial(self.coef[1:] * n)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coef, other.coef
        if len(a) < len(b):
            a, b = b, a
        out = a.copy()
        out[: len(b)] += b
        return Polynomial(out)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coef, other.coef))
        return Polynomial(self.coef * float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coef)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def shift(self, a: float) -> "Polynomial":
        """The polynomial q with q(z) = p(z + a)."""
        out = Polynomial(np.zeros(1))
        za = Polynomial(np.array([a, 1.0]))
        power = Polynomial(np.ones(1))
        for c in self.coef:
            out = out + c * power
            power = power * za
        return out

    def real_roots(self, tol: float = 1e-9) -> np.ndarray:
        """Real roots (imaginary part below tol), ascending."""
        if self.degree == 0:
            return np.array([])
        rts = np.polynomial.polynomial.polyroots(self.coef)
        real = np.sort(rts[np.abs(rts.imag) < tol].real)
        return real

    @staticmethod
    def from_powers_of(a: float, weights: Sequence[float]) -> "Polynomial":
        """Sum_i weights[i] * (z + a)^i as an explicit polynomial in z."""
        out = Polynomial(np.zeros(1))
        base = Polynomial(np.array([a, 1.0]))
        power = Polynomial(np.ones(1))
        for wgt in weights:
            out = out + float(wgt) * power
            power = power * base
        return out
