"""Constant weighted-curvature solutions, the Futaki obstruction, and kappa_0.

Substituting P = (z+kappa) Theta turns the constancy requirement
Scal_{(xi,b,4)} = c into a linear ODE,

    (z+b)^2 P'' - 6 (z+b) P' + 12 P = s_C (z+b)^2 - c (z+kappa),

whose homogeneous solutions are (z+b)^3 and (z+b)^4 and which has the
quadratic particular solution (with t = z+b)

    P_part(t) = (s_C/2) t^2 - (c/6) t - c (kappa-b)/12.

The four first-order boundary conditions on Theta = P/(z+kappa),

    Theta(-1) = Theta(1) = 0,   Theta'(-1) = 2,   Theta'(1) = -2,

are linear in the unknowns (alpha, beta, c), giving an overdetermined 4x3
system. Its least-squares defect is the numerical Futaki obstruction: it
vanishes exactly on the curve kappa = (1+b^2)/(2b), i.e. at b = b_kappa(kappa),
and is bounded away from zero off the curve. Rows are expressed directly as
the Theta-defects (the same four numbers `check_boundary` reports), which
keeps the obstruction well-scaled uniformly in (kappa, b).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .calabi import Profile, RuledSurfaceData
from .errors import OutOfDomain, SearchFailed
from .numerics import Polynomial, brent_root, solve_least_squares
from .tolerances import TOL

__all__ = [
    "PKappaSolution",
    "ClassLabel",
    "b_kappa",
    "solve_P",
    "futaki_residual",
    "kappa_zero",
    "classify",
    "interior_min",
    "ode_residual",
    "SweepRow",
    "sweep",
    "write_sweep_csv",
    "SWEEP_CSV_HEADER",
]


def _surface(kappa: float, X: RuledSurfaceData | None) -> RuledSurfaceData:
    if X is None:
        return RuledSurfaceData.standard(kappa)
    # The kappa argument is authoritative for the polarization; X supplies
    # the base data (genus, degree, base_scal).
    return RuledSurfaceData(genus=X.genus, degree=X.degree, kappa=kappa, base_scal=X.base_scal)


@dataclass(frozen=True)
class PKappaSolution:
    """Least-squares solution of the boundary system at fixed (kappa, b)."""

    P: Polynomial
    c: float
    futaki_residual: float
    kappa: float
    b: float
    surface: RuledSurfaceData

    def profile(self) -> Profile:
        """Momentum profile Theta = P/(z+kappa) (polynomial kind)."""
        return Profile.from_numerator(self.P, self.kappa)


class ClassLabel(str, enum.Enum):
    EXISTS_CKEM = "ExistsCKEM"
    NEGATIVE_SOMEWHERE = "NegativeSomewhere"
    DOUBLE_ROOT = "DoubleRoot"

    def __str__(self) -> str:  # csv-friendly
        return self.value


def b_kappa(kappa: float) -> float:
    """The unique b > 1 with (1+b^2)/(2b) = kappa."""
    if not kappa > 1.0:
        raise OutOfDomain("b_kappa requires kappa > 1")
    return kappa + math.sqrt(kappa * kappa - 1.0)


def _boundary_system(kappa: float, b: float, sC: float) -> tuple[np.ndarray, np.ndarray]:
    """Theta-form boundary rows, linear in x = (alpha, beta, c).

    P-form residuals r = (P(-1), P(1), P'(-1)-2(kappa-1), P'(1)+2(kappa+1))
    map to Theta-defects d = (Theta(-1), Theta(1), Theta'(-1)-2, Theta'(1)+2)
    by d1 = r1/km, d2 = r2/kp, d3 = r3/km - r1/km^2, d4 = r4/kp - r2/kp^2
    with km = kappa-1, kp = kappa+1.
    """
    tm, tp = b - 1.0, b + 1.0
    km, kp = kappa - 1.0, kappa + 1.0
    # P(z0) = (sC/2) t0^2 + alpha t0^3 + beta t0^4 + c (-t0/6 - (kappa-b)/12)
    # P'(z0) = sC t0 + alpha 3 t0^2 + beta 4 t0^3 + c (-1/6)
    A_p = np.array(
        [
            [tm**3, tm**4, -tm / 6.0 - (kappa - b) / 12.0],
            [tp**3, tp**4, -tp / 6.0 - (kappa - b) / 12.0],
            [3.0 * tm**2, 4.0 * tm**3, -1.0 / 6.0],
            [3.0 * tp**2, 4.0 * tp**3, -1.0 / 6.0],
        ]
    )
    y_p = np.array(
        [
            -sC / 2.0 * tm**2,
            -sC / 2.0 * tp**2,
            2.0 * km - sC * tm,
            -2.0 * kp - sC * tp,
        ]
    )
    T = np.array(
        [
            [1.0 / km, 0.0, 0.0, 0.0],
            [0.0, 1.0 / kp, 0.0, 0.0],
            [-1.0 / km**2, 0.0, 1.0 / km, 0.0],
            [0.0, -1.0 / kp**2, 0.0, 1.0 / kp],
        ]
    )
    return T @ A_p, T @ y_p


def solve_P(kappa: float, b: float, X: RuledSurfaceData | None = None) -> PKappaSolution:
    """Solve the 4x3 boundary system at (kappa, b) by least squares.

    b > 0 is accepted (the system is an algebraic continuation; the Futaki
    scan probes b slightly below 1); geometric admissibility of the resulting
    metric additionally needs b > 1 and a positive profile.
    """
    if not kappa > 1.0:
        raise OutOfDomain("solve_P requires kappa > 1")
    if not b > 0.0:
        raise OutOfDomain("solve_P requires b > 0")
    surf = _surface(kappa, X)
    sC = surf.base_scal
    A, y = _boundary_system(kappa, b, sC)
    # Column equilibration: for large kappa the (alpha, beta, c) columns span
    # many orders of magnitude. Rescaling columns leaves the column space --
    # hence the least-squares residual -- unchanged, but keeps the solve
    # well-conditioned across the whole bisection window.
    scale = np.linalg.norm(A, axis=0)
    x_s, _ = solve_least_squares(A / scale, y)
    x = x_s / scale
    alpha, beta, c = (float(v) for v in x)
    defect = float(np.linalg.norm(A @ x - y))
    P = Polynomial.from_powers_of(
        b, [-c * (kappa - b) / 12.0, -c / 6.0, sC / 2.0, alpha, beta]
    )
    return PKappaSolution(P=P, c=c, futaki_residual=defect, kappa=kappa, b=b, surface=surf)


def futaki_residual(kappa: float, X: RuledSurfaceData | None = None) -> Callable[[float], float]:
    """The boundary-system defect as a function of b (a norm, hence >= 0)."""
    if not kappa > 1.0:
        raise OutOfDomain("futaki_residual requires kappa > 1")
    surf = _surface(kappa, X)

    def residual(b: float) -> float:
        return solve_P(kappa, b, surf).futaki_residual

    return residual


def ode_residual(
    P: Polynomial, c: float, kappa: float, b: float, base_scal: float
) -> Callable:
    """Pointwise residual of (z+b)^2 P'' - 6(z+b) P' + 12 P = s_C (z+b)^2 - c (z+kappa)."""
    dP = P.deriv()
    d2P = dP.deriv()

    def res(z):
        z = np.asarray(z, dtype=float)
        t = z + b
        lhs = t * t * d2P(z) - 6.0 * t * dP(z) + 12.0 * P(z)
        rhs = base_scal * t * t - c * (z + kappa)
        out = lhs - rhs
        return out if out.ndim else float(out)

    return res


def interior_min(
    P: Polynomial, n_scan: int = 512, edge: float = 1e-9
) -> tuple[float, float]:
    """Minimum of P over its interior critical points in (-1, 1).

    Critical points are located by a sign scan of P' followed by bracketed
    root-finding; the endpoints (where P vanishes on the Futaki curve by
    construction) are excluded. Returns (min value, argmin); (+inf, nan)
    if no interior critical point exists.
    """
    dP = P.deriv()
    zs = np.linspace(-1.0 + edge, 1.0 - edge, n_scan + 1)
    vals = dP(zs)
    crits: list[float] = []
    for i in range(n_scan):
        a, fb = vals[i], vals[i + 1]
        if a == 0.0:
            crits.append(float(zs[i]))
        elif a * fb < 0.0:
            crits.append(brent_root(dP, float(zs[i]), float(zs[i + 1])))
    if vals[-1] == 0.0:
        crits.append(float(zs[-1]))
    if not crits:
        return math.inf, math.nan
    pv = [float(P(z)) for z in crits]
    i = int(np.argmin(pv))
    return pv[i], crits[i]


def _m_of_kappa(kappa: float, X: RuledSurfaceData | None) -> tuple[float, float]:
    sol = solve_P(kappa, b_kappa(kappa), X)
    return interior_min(sol.P)


def kappa_zero(
    X: RuledSurfaceData | None = None,
    tol: float = TOL.kappa_zero_tol,
    lo: float = 1.0 + 1e-3,
    hi: float = 1.0e4,
) -> float:
    """Threshold kappa_0: bisection on m(kappa) = interior min of P_kappa.

    At kappa_0 the minimum is an interior double root (P = P' = 0 there).
    The initial window widens automatically if it does not bracket a sign
    change; SearchFailed if widening is exhausted.
    """
    if not tol > 0.0:
        raise OutOfDomain("tol must be positive")
    m_lo, _ = _m_of_kappa(lo, X)
    m_hi, _ = _m_of_kappa(hi, X)
    for _ in range(8):
        if m_lo < 0.0 < m_hi:
            break
        lo = 1.0 + (lo - 1.0) / 10.0
        hi = hi * 10.0
        m_lo, _ = _m_of_kappa(lo, X)
        m_hi, _ = _m_of_kappa(hi, X)
    else:
        raise SearchFailed("no sign change of m(kappa) over the widened window")
    while True:
        mid = 0.5 * (lo + hi)
        m_mid, _ = _m_of_kappa(mid, X)
        if abs(m_mid) < tol:
            return mid
        if m_mid < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            raise SearchFailed("bisection interval collapsed before |m| < tol")


def classify(
    kappa: float, X: RuledSurfaceData | None = None, tol: float = TOL.classify_tol
) -> ClassLabel:
    """Existence classification by the sign pattern of P_kappa on (-1, 1).

    The |min P| <= tol band wins over the sign tests (double-root tie-break).
    """
    m, _ = _m_of_kappa(kappa, X)
    if abs(m) <= tol:
        return ClassLabel.DOUBLE_ROOT
    if m < 0.0:
        return ClassLabel.NEGATIVE_SOMEWHERE
    return ClassLabel.EXISTS_CKEM


SWEEP_CSV_HEADER = "kappa,b_kappa,c,futaki_residual,min_P,argmin_z,label"


@dataclass(frozen=True)
class SweepRow:
    kappa: float
    b_kappa: float
    c: float
    futaki_residual: float
    min_P: float
    argmin_z: float
    label: ClassLabel


def sweep(
    kappas: Iterable[float],
    X: RuledSurfaceData | None = None,
    tol: float = TOL.classify_tol,
) -> list[SweepRow]:
    rows = []
    for kappa in kappas:
        bk = b_kappa(kappa)
        sol = solve_P(kappa, bk, X)
        m, zm = interior_min(sol.P)
        if abs(m) <= tol:
            label = ClassLabel.DOUBLE_ROOT
        elif m < 0.0:
            label = ClassLabel.NEGATIVE_SOMEWHERE
        else:
            label = ClassLabel.EXISTS_CKEM
        rows.append(
            SweepRow(
                kappa=float(kappa),
                b_kappa=bk,
                c=sol.c,
                futaki_residual=sol.futaki_residual,
                min_P=m,
                argmin_z=zm,
                label=label,
            )
        )
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], stream: io.TextIOBase) -> None:
    """Deterministic CSV: repr() floats round-trip and are bit-stable."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_CSV_HEADER.split(","))
    for r in rows:
        writer.writerow(
            [
                repr(r.kappa),
                repr(r.b_kappa),
                repr(r.c),
                repr(r.futaki_residual),
                repr(r.min_P),
                repr(r.argmin_z),
                str(r.label),
            ]
        )
