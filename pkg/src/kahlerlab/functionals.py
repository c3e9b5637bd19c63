"""Quantized functionals on the toy model: I, the Aubin functional, L = I∘Hilb + 𝕀,
Z = 𝕀∘FS + I, geodesics of Hermitian norms, and the almost-balanced gap.

All potential-level integrals run on a fixed log-radial quadrature grid
(uniform Gauss panels on [-30, 30]; every admissible psi'' decays like
e^{-|t|}, so the truncated tail is below 1e-12 of the integrand scale).
Along a straight psi-blend the grid data of the two endpoints combine
affinely — psi, mu = psi', psi'', psi''', psi'''' are each linear in the
blend weight — so path integrals cost vector algebra per path node, with the
endpoint potentials evaluated once.

Conventions: vol_omega = 2 pi dmu, vol_{k omega} = 2 pi k dmu; the reference
potential is the round one and every path functional is normalized to vanish
there. The Aubin 1-form is d𝕀(phi-dot) = 2 k C_k ∫ phi-dot f^{1-p} vol_{k omega};
the toy Mabuchi 1-form is d𝓜(phi-dot) = -∫ phi-dot (Scal_p - c) f^{-(p+1)} vol_omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import NotTraceless, OutOfDomain
from .numerics import gauss_legendre
from .quantization import (
    FSPotential,
    HermitianNorms,
    RadialPotential,
    SpectrumData,
    ToyModel,
    c_k_constant,
    c_top_exact,
    eigenvalues,
    fs,
    hilb,
    round_potential,
)
from .tolerances import TOL

__all__ = [
    "functional_I",
    "aubin_I",
    "aubin_path",
    "functional_L",
    "functional_Z",
    "toy_mabuchi",
    "geodesic",
    "z_prime",
    "AlmostBalancedReport",
    "almost_balanced_check",
]

_T_MAX = 30.0
_T_PANELS = 10
_T_ORDER = 24


@lru_cache(maxsize=1)
def _t_grid() -> tuple[np.ndarray, np.ndarray]:
    cuts = np.linspace(-_T_MAX, _T_MAX, _T_PANELS + 1)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        rule = gauss_legendre(_T_ORDER, float(a), float(b))
        nodes.append(rule.nodes)
        weights.append(rule.weights)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class _EndpointData:
    """One potential sampled on the t-grid (everything a blend needs)."""

    psi: np.ndarray
    mu: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    p4: np.ndarray


def _sample(phi: RadialPotential) -> _EndpointData:
    t, _ = _t_grid()
    return _EndpointData(
        psi=np.asarray(phi.psi(t), dtype=float),
        mu=np.asarray(phi.mu_of_t(t), dtype=float),
        p2=np.asarray(phi.psi2(t), dtype=float),
        p3=np.asarray(phi.psi3(t), dtype=float),
        p4=np.asarray(phi.psi4(t), dtype=float),
    )


def functional_I(H: HermitianNorms, spectrum: SpectrumData) -> float:
    """I(H) = sum_j lambda_j(p) log h_j (the norms are diagonal, so each
    block's log det is the sum of its log h's)."""
    if len(spectrum.lam_p) != H.k + 1:
        raise OutOfDomain("spectrum and norms disagree about k")
    return float(np.dot(spectrum.lam_p, H.log_h))


def aubin_path(
    phi_a: RadialPotential,
    phi_b: RadialPotential,
    k: int,
    model: ToyModel,
    s_order: int = TOL.quad_order_path,
) -> float:
    """Integral of the Aubin 1-form along the straight psi-blend a -> b."""
    ck = c_k_constant(k, model)
    tw = _t_grid()[1]
    da, db = _sample(phi_a), _sample(phi_b)
    dot = 0.5 * (db.psi - da.psi)  # phi-dot = (psi_b - psi_a)/2, fixed along the blend
    srule = gauss_legendre(s_order, 0.0, 1.0)
    total = 0.0
    for s, ws in zip(srule.nodes, srule.weights):
        mu_s = (1.0 - s) * da.mu + s * db.mu
        p2_s = (1.0 - s) * da.p2 + s * db.p2
        inner = float(np.dot(tw, dot * model.f(mu_s) ** (1.0 - model.p) * p2_s))
        total += ws * inner
    return 2.0 * k * ck * 2.0 * math.pi * k * total


def aubin_I(
    phi: RadialPotential,
    k: int,
    model: ToyModel,
    ref: RadialPotential | None = None,
    s_order: int = TOL.quad_order_path,
) -> float:
    """𝕀(phi): Aubin functional, path integral from the reference potential
    (𝕀(reference) = 0)."""
    return aubin_path(round_potential() if ref is None else ref, phi, k, model, s_order)


def functional_L(phi: RadialPotential, k: int, model: ToyModel) -> float:
    """L(phi) = I(hilb(phi)) + 𝕀(phi)."""
    return functional_I(hilb(phi, k, model), eigenvalues(k, model)) + aubin_I(phi, k, model)


def functional_Z(H: HermitianNorms, k: int, model: ToyModel) -> float:
    """Z(H) = 𝕀(fs(H)) + I(H)."""
    return aubin_I(fs(H, k, model), k, model) + functional_I(H, eigenvalues(k, model))


def toy_mabuchi(
    phi: RadialPotential,
    model: ToyModel,
    ref: RadialPotential | None = None,
    s_order: int = TOL.quad_order_path,
) -> float:
    """Weighted Mabuchi energy of the toy, 𝓜(reference) = 0, via the path
    integral of -∫ phi-dot (Scal_p - c) f^{-(p+1)} vol_omega along the
    straight psi-blend. Scal_p on the blend comes from the chain rules in
    the blended psi-derivatives, so no inversions are needed."""
    phi_a = round_potential() if ref is None else ref
    tw = _t_grid()[1]
    da, db = _sample(phi_a), _sample(phi)
    dot = 0.5 * (db.psi - da.psi)
    c = c_top_exact(model)
    p = model.p
    srule = gauss_legendre(s_order, 0.0, 1.0)
    total = 0.0
    for s, ws in zip(srule.nodes, srule.weights):
        mu_s = (1.0 - s) * da.mu + s * db.mu
        p2 = (1.0 - s) * da.p2 + s * db.p2
        p3 = (1.0 - s) * da.p3 + s * db.p3
        p4 = (1.0 - s) * da.p4 + s * db.p4
        S = 2.0 * p2
        d2S = 2.0 * (p4 * p2 - p3 * p3) / p2**3
        if model.xi_zero:
            scal_p = -d2S
        else:
            f = model.f(mu_s)
            dS = 2.0 * p3 / p2
            scal_p = f * f * (-d2S) + 2.0 * (p - 1.0) * f * dS - p * (p - 1.0) * S
        wgt = model.f(mu_s) ** (-(p + 1.0))
        total += ws * float(np.dot(tw, dot * (scal_p - c) * wgt * p2))
    return -2.0 * math.pi * total


def geodesic(H0: HermitianNorms, A: Sequence[float], t: float, model: ToyModel) -> HermitianNorms:
    """h_j(t) = h_j(0) e^{t A_j} for A traceless on each block of equal
    eigenvalues (for a finite weight every block is 1-dimensional, so only
    the xi=0 mode has nontrivial geodesics)."""
    A = np.asarray(A, dtype=float)
    if A.shape != (H0.k + 1,):
        raise OutOfDomain("direction has wrong length")
    spec = eigenvalues(H0.k, model, check_weights=False)
    scale = max(1.0, float(np.max(np.abs(A))))
    for block in spec.blocks:
        if abs(float(np.sum(A[list(block)]))) > 1e-12 * scale:
            raise NotTraceless("direction must be traceless on each eigenvalue block")
    return HermitianNorms(k=H0.k, log_h=H0.log_h + t * A)


def z_prime(H: HermitianNorms, A: Sequence[float], k: int, model: ToyModel) -> float:
    """d/dt Z(geodesic(H, A, t)) at t=0, in closed form:
    Z'(0) = sum_j lambda_j(p) A_j (1 - h'_j/h_j) with h' = hilb(fs(H))
    (the Aubin term contributes -sum lambda(p) A h'/h; I contributes
    sum lambda(p) A). Vanishes at a balanced point, where h' = h."""
    A = np.asarray(A, dtype=float)
    spec = eigenvalues(k, model)
    h_ratio = np.exp(hilb(fs(H, k, model), k, model).log_h - H.log_h)
    return float(np.dot(spec.lam_p, A * (1.0 - h_ratio)))


@dataclass(frozen=True)
class AlmostBalancedReport:
    k_list: tuple[int, ...]
    eps_hat: tuple[float, ...]


def almost_balanced_check(
    phi_star: RadialPotential,
    phi: RadialPotential,
    k_range: Iterable[int],
    model: ToyModel,
) -> AlmostBalancedReport:
    """eps-hat(k) = k^{-1} [Z(hilb(phi)) - Z(hilb(phi_star))]_- (the negative
    part): how far phi_star is from minimizing Z through the quantization, at
    each level k. Decays to 0 when phi_star has constant weighted curvature."""
    ks = sorted(int(k) for k in k_range)
    out = []
    for k in ks:
        diff = functional_Z(hilb(phi, k, model), k, model) - functional_Z(
            hilb(phi_star, k, model), k, model
        )
        out.append(max(0.0, -diff) / k)
    return AlmostBalancedReport(k_list=tuple(ks), eps_hat=tuple(out))
