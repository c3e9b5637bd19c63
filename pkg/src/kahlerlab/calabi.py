"""Momentum profiles on the ruled surface and their weighted curvature.

A Calabi-ansatz metric on the projectivization of O + L over a genus >= 2
curve is encoded by a momentum profile Theta(z) on [-1, 1] with

    Theta(+-1) = 0,   Theta'(-1) = 2,   Theta'(1) = -2,   Theta > 0 inside.

All geometric quantities reduce to one-dimensional expressions in z:

    Scal(z)      = (s_C - ((z+kappa) Theta)'') / (z+kappa)
    Delta_g z    = -Theta'(z) - Theta(z)/(z+kappa)
    |xi|^2_g     = Theta(z)
    vol          ~ (z+kappa) dz          (angular/base factors cancel in ratios)

with s_C = 4(1-genus)/degree the base curvature constant. The weighted scalar
curvature for Killing potential f = z+b and exponent p is

    Scal_{(xi,b,p)} = f^2 Scal - 2(p-1) f Delta_g f - p(p-1) Theta.

Profiles are stored either exactly (numerator polynomial P with
Theta = P/(z+kappa)) or as grid data interpolated through the bounded ratio
G(z) = Theta/(1-z^2); G(+-1) = 1 encodes the boundary conditions, so the grid
representation is tailored to boundary-vanishing profiles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import NonFiniteCurvature, NotAdmissible, OutOfDomain
from .numerics import Polynomial, gauss_legendre, integrate
from .tolerances import TOL

__all__ = [
    "RuledSurfaceData",
    "KillingData",
    "Profile",
    "BoundaryReport",
    "check_boundary",
    "ansatz_scalar_curvature",
    "momentum_laplacian",
    "weighted_scalar_curvature",
    "weighted_average_c",
    "to_symplectic",
    "random_admissible_profile",
]


@dataclass(frozen=True)
class RuledSurfaceData:
    """Base data: genus >= 2 curve, line-bundle degree, Kähler class parameter."""

    genus: int
    degree: int
    kappa: float
    base_scal: float

    def __post_init__(self) -> None:
        if self.genus < 2:
            raise OutOfDomain("genus must be >= 2")
        if self.degree < 1:
            raise OutOfDomain("degree must be >= 1")
        if not self.kappa > 1.0:
            raise OutOfDomain("kappa must be > 1")
        if not self.base_scal < 0.0:
            raise OutOfDomain("base_scal must be negative")

    @staticmethod
    def standard(kappa: float, genus: int = 2, degree: int = 1) -> "RuledSurfaceData":
        """Normalized base curvature s_C = 4(1-genus)/degree."""
        return RuledSurfaceData(
            genus=genus,
            degree=degree,
            kappa=kappa,
            base_scal=4.0 * (1 - genus) / degree,
        )


@dataclass(frozen=True)
class KillingData:
    """Killing potential f(z) = z + b (b > 1 keeps f > 0 on [-1,1]) and weight p."""

    b: float
    p: float = 4.0

    def __post_init__(self) -> None:
        if not self.b > 1.0:
            raise OutOfDomain("b must be > 1 so that f = z+b is positive on [-1,1]")
        if not np.isfinite(self.p):
            raise OutOfDomain("p must be finite")


def _chebpts1(n: int) -> np.ndarray:
    return cheb.chebpts1(n)


class Profile:
    """Momentum profile Theta(z) on [-1, 1].

    Either polynomial kind (exact: numerator P with Theta = P/(z+kappa)) or
    grid kind (Chebyshev interpolant of G = Theta/(1-z^2) through sampled
    values, plus endpoint slope data).
    """

    def __init__(
        self,
        kappa: float,
        *,
        poly: Polynomial | None = None,
        gcoef: np.ndarray | None = None,
        grid_z: np.ndarray | None = None,
        grid_theta: np.ndarray | None = None,
        endpoint_slopes: tuple[float, float] | None = None,
    ):
        if not kappa > 1.0:
            raise OutOfDomain("kappa must be > 1")
        if (poly is None) == (gcoef is None):
            raise ValueError("exactly one of poly/gcoef must be given")
        self.kappa = float(kappa)
        self.poly = poly
        self._gcoef = gcoef
        self._grid_z = grid_z
        self._grid_theta = grid_theta
        self._endpoint_slopes = endpoint_slopes

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_numerator(P: Polynomial, kappa: float) -> "Profile":
        return Profile(kappa, poly=P)

    @staticmethod
    def from_theta_polynomial(theta: Polynomial, kappa: float) -> "Profile":
        """Theta given directly as a polynomial; stores P = (z+kappa) Theta."""
        P = theta * Polynomial(np.array([kappa, 1.0]))
        return Profile(kappa, poly=P)

    @staticmethod
    def from_callable(theta_fn: Callable, kappa: float, n: int = 96) -> "Profile":
        """Sample Theta at n interior Chebyshev nodes and interpolate
        G = Theta/(1-z^2)."""
        z = _chebpts1(n)
        th = np.asarray(theta_fn(z), dtype=float)
        return Profile.from_grid(z, th, kappa)

    @staticmethod
    def from_grid(
        z: np.ndarray,
        theta: np.ndarray,
        kappa: float,
        endpoint_slopes: tuple[float, float] | None = None,
    ) -> "Profile":
        z = np.asarray(z, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(np.abs(z) >= 1.0):
            raise OutOfDomain("grid nodes must lie strictly inside (-1, 1)")
        g = theta / (1.0 - z * z)
        deg = min(len(z) - 1, 96)
        gcoef = cheb.chebfit(z, g, deg)
        prof = Profile(kappa, gcoef=gcoef, grid_z=z, grid_theta=theta)
        if endpoint_slopes is None:
            endpoint_slopes = (prof.dtheta(-1.0), prof.dtheta(1.0))
        prof._endpoint_slopes = (float(endpoint_slopes[0]), float(endpoint_slopes[1]))
        return prof

    @property
    def kind(self) -> str:
        return "polynomial" if self.poly is not None else "grid"

    # -- evaluation ---------------------------------------------------------

    def theta(self, z):
        z = np.asarray(z, dtype=float)
        if self.poly is not None:
            return self.poly(z) / (z + self.kappa)
        return (1.0 - z * z) * cheb.chebval(z, self._gcoef)

    def dtheta(self, z):
        z = np.asarray(z, dtype=float)
        if self.poly is not None:
            P, dP = self.poly, self.poly.deriv()
            t = z + self.kappa
            return (dP(z) * t - P(z)) / t**2
        g = cheb.chebval(z, self._gcoef)
        gp = cheb.chebval(z, cheb.chebder(self._gcoef))
        return -2.0 * z * g + (1.0 - z * z) * gp

    def d2theta(self, z):
        z = np.asarray(z, dtype=float)
        if self.poly is not None:
            P = self.poly
            dP = P.deriv()
            d2P = dP.deriv()
            t = z + self.kappa
            return (d2P(z) * t * t - 2.0 * dP(z) * t + 2.0 * P(z)) / t**3
        c = self._gcoef
        g = cheb.chebval(z, c)
        gp = cheb.chebval(z, cheb.chebder(c))
        gpp = cheb.chebval(z, cheb.chebder(cheb.chebder(c)))
        return -2.0 * g - 4.0 * z * gp + (1.0 - z * z) * gpp

    def numerator(self, z):
        """P(z) = (z+kappa) Theta(z)."""
        z = np.asarray(z, dtype=float)
        if self.poly is not None:
            return self.poly(z)
        return (z + self.kappa) * self.theta(z)

    def d2_numerator(self, z):
        """((z+kappa) Theta)'' = 2 Theta' + (z+kappa) Theta''."""
        z = np.asarray(z, dtype=float)
        if self.poly is not None:
            return self.poly.deriv().deriv()(z)
        return 2.0 * self.dtheta(z) + (z + self.kappa) * self.d2theta(z)

    @cached_property
    def is_admissible(self) -> bool:
        rep = check_boundary(self)
        if not rep.passes:
            return False
        z = gauss_legendre(TOL.quad_order_mabuchi).nodes
        return bool(np.all(self.theta(z) > TOL.interior_positivity))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        if self.poly is not None:
            rec = {"kind": "polynomial", "data": list(self.poly.coef), "kappa": self.kappa}
        else:
            rec = {
                "kind": "grid",
                "data": {
                    "z": list(map(float, self._grid_z)),
                    "theta": list(map(float, self._grid_theta)),
                    "endpoint_slopes": list(self._endpoint_slopes),
                },
                "kappa": self.kappa,
            }
        return json.dumps(rec)

    @staticmethod
    def from_json(text: str) -> "Profile":
        rec = json.loads(text)
        if rec["kind"] == "polynomial":
            return Profile(rec["kappa"], poly=Polynomial(np.array(rec["data"])))
        data = rec["data"]
        return Profile.from_grid(
            np.array(data["z"]),
            np.array(data["theta"]),
            rec["kappa"],
            endpoint_slopes=tuple(data["endpoint_slopes"]),
        )


@dataclass(frozen=True)
class BoundaryReport:
    passes: bool
    defects: tuple[float, float, float, float]


def check_boundary(profile: Profile, tol: float = TOL.boundary_defect) -> BoundaryReport:
    """Defects (Theta(-1), Theta(1), Theta'(-1)-2, Theta'(1)+2)."""
    d = (
        float(profile.theta(-1.0)),
        float(profile.theta(1.0)),
        float(profile.dtheta(-1.0)) - 2.0,
        float(profile.dtheta(1.0)) + 2.0,
    )
    return BoundaryReport(passes=bool(max(abs(x) for x in d) < tol), defects=d)


def ansatz_scalar_curvature(profile: Profile, X: RuledSurfaceData) -> Callable:
    """Scal(z) = (s_C - ((z+kappa) Theta)'') / (z+kappa)."""
    sC = X.base_scal
    kappa = profile.kappa

    def scal(z):
        z = np.asarray(z, dtype=float)
        out = (sC - profile.d2_numerator(z)) / (z + kappa)
        if not np.all(np.isfinite(out)):
            raise NonFiniteCurvature("scalar curvature is not finite on the grid")
        return out if out.ndim else float(out)

    return scal


def momentum_laplacian(profile: Profile, kappa: float | None = None) -> Callable:
    """Delta_g z = -Theta'(z) - Theta(z)/(z+kappa)."""
    kap = profile.kappa if kappa is None else float(kappa)

    def lap(z):
        z = np.asarray(z, dtype=float)
        out = -profile.dtheta(z) - profile.theta(z) / (z + kap)
        return out if out.ndim else float(out)

    return lap


def weighted_scalar_curvature(profile: Profile, X: RuledSurfaceData, k: KillingData) -> Callable:
    """Scal_{(xi,b,p)}(z) = f^2 Scal - 2(p-1) f Delta_g f - p(p-1) |xi|^2,
    with f = z+b, Delta_g f = Delta_g z and |xi|^2 = Theta."""
    scal = ansatz_scalar_curvature(profile, X)
    lap = momentum_laplacian(profile)
    b, p = k.b, k.p

    def wscal(z):
        z = np.asarray(z, dtype=float)
        f = z + b
        out = f * f * scal(z) - 2.0 * (p - 1.0) * f * lap(z) - p * (p - 1.0) * profile.theta(z)
        return out if out.ndim else float(out)

    return wscal


def weighted_average_c(
    profile: Profile,
    X: RuledSurfaceData,
    k: KillingData,
    order: int = TOL.quad_order_default,
) -> float:
    """c = ∫ Scal_p f^{-(p+1)} (z+kappa) dz / ∫ f^{-(p+1)} (z+kappa) dz.

    The reduced volume form is proportional to (z+kappa) dz; constant factors
    cancel in the ratio. Independent of the profile within a fixed class —
    that invariance is a tested property, not an input assumption.
    """
    rule = gauss_legendre(order)
    wscal = weighted_scalar_curvature(profile, X, k)
    kap = profile.kappa

    def weight(z):
        return (z + k.b) ** (-(k.p + 1.0)) * (z + kap)

    num = integrate(rule, lambda z: wscal(z) * weight(z))
    den = integrate(rule, weight)
    return num / den


def to_symplectic(profile: Profile):
    """Fibre-wise symplectic potential: u''(z) = 1/Theta(z).

    Raises NotAdmissible if Theta is not strictly positive at the interior
    sample nodes.
    """
    from .mabuchi import SymplecticPotential  # local import avoids a cycle

    z = _chebpts1(128)
    th = np.asarray(profile.theta(z), dtype=float)
    if np.any(th <= 0.0):
        raise NotAdmissible("Theta must be positive on the interior to invert")
    return SymplecticPotential.from_values(z, 1.0 / th, profile.kappa)


def random_admissible_profile(
    rng: np.random.Generator,
    kappa: float,
    degree: int = 4,
    scale: float = 0.4,
) -> Profile:
    """Random admissible profile Theta = (1-z^2) exp((1-z^2) g(z)).

    The (1-z^2) factors enforce the boundary conditions exactly; positivity
    is automatic. Used by the property tests.
    """
    coefs = rng.normal(size=degree + 1) * scale / (1.0 + np.arange(degree + 1))
    g = Polynomial(coefs)

    def theta_fn(z):
        return (1.0 - z * z) * np.exp((1.0 - z * z) * g(z))

    return Profile.from_callable(theta_fn, kappa)
