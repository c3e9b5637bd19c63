"""Energy functional, gradients, probes, and path integrals."""

import numpy as np
import pytest

from kahlerlab.calabi import KillingData, random_admissible_profile, to_symplectic
from kahlerlab.ckem import b_kappa, kappa_zero, solve_P
from kahlerlab.errors import BadDirection, NotAdmissible, OutOfDomain
from kahlerlab.mabuchi import (
    BumpDirection,
    SymplecticPotential,
    fit_probe_slope,
    mabuchi_energy_amt,
    mabuchi_gradient_amt,
    mabuchi_path_integral,
    probe_slope,
    scale_bump_for_slope,
    straight_potential_path,
    straight_theta_path,
    unboundedness_probe,
)


def _sol(kappa):
    return solve_P(kappa, b_kappa(kappa))


def test_reference_energy_is_zero():
    sol = _sol(1.3)
    u = SymplecticPotential.reference(1.3)
    np.testing.assert_allclose(mabuchi_energy_amt(u, sol), 0.0, atol=1e-14)


def test_gradient_vanishes_at_euler_lagrange():
    sol = _sol(1.6)
    u = SymplecticPotential.euler_lagrange(sol)
    rng = np.random.default_rng(7)
    for _ in range(5):
        bump = BumpDirection(rng.uniform(-0.6, 0.6), rng.uniform(0.1, 0.3), rng.uniform(0.5, 2.0))
        assert abs(mabuchi_gradient_amt(u, sol, bump)) < 1e-7


def test_gradient_matches_finite_differences():
    sol = _sol(1.3)
    u = SymplecticPotential.reference(1.3)
    bump = BumpDirection(0.2, 0.25, 0.8)
    grad = mabuchi_gradient_amt(u, sol, bump)
    eps = 1e-5
    fd = (
        mabuchi_energy_amt(u.perturbed(bump, eps), sol)
        - mabuchi_energy_amt(u.perturbed(bump, -eps), sol)
    ) / (2.0 * eps)
    np.testing.assert_allclose(grad, fd, atol=1e-8)


def test_bump_support_validation():
    with pytest.raises(OutOfDomain):
        BumpDirection(0.9, 0.2)
    with pytest.raises(OutOfDomain):
        BumpDirection(0.0, -0.1)


def test_probe_requires_negative_region():
    # kappa in the existence region: P > 0 everywhere, no admissible direction.
    sol = _sol(1.5)
    with pytest.raises(BadDirection):
        unboundedness_probe(sol, BumpDirection(0.0, 0.2), [1.0])


def test_probe_diverges_below_threshold():
    k0 = kappa_zero()
    sol = _sol(0.5 * (1.0 + k0))
    from kahlerlab.ckem import interior_min

    _, zm = interior_min(sol.P)
    bump = scale_bump_for_slope(sol, BumpDirection(zm, 0.08), target=-2.0)
    ks = [float(k) for k in range(0, 33)]
    energies = unboundedness_probe(sol, bump, ks)
    assert energies[0] == 0.0
    assert all(b < a for a, b in zip(energies[1:], energies[2:]))
    fitted = fit_probe_slope(ks, energies)
    np.testing.assert_allclose(fitted, probe_slope(sol, bump), rtol=2e-2)


def test_path_integral_closes_on_loops():
    kappa = 1.25
    sol = _sol(kappa)
    kd = KillingData(b=sol.b, p=4.0)
    rng = np.random.default_rng(11)
    profs = [random_admissible_profile(rng, kappa, degree=3) for _ in range(3)]
    loop = sum(
        mabuchi_path_integral(straight_theta_path(profs[i], profs[(i + 1) % 3]), kd, sol)
        for i in range(3)
    )
    assert abs(loop) < 1e-8


def test_path_independence_theta_vs_potential_paths():
    kappa = 1.25
    sol = _sol(kappa)
    kd = KillingData(b=sol.b, p=4.0)
    rng = np.random.default_rng(13)
    p0 = random_admissible_profile(rng, kappa, degree=3)
    p1 = random_admissible_profile(rng, kappa, degree=3)
    v_theta = mabuchi_path_integral(straight_theta_path(p0, p1), kd, sol)
    v_pot = mabuchi_path_integral(
        straight_potential_path(to_symplectic(p0), to_symplectic(p1)), kd, sol
    )
    np.testing.assert_allclose(v_theta, v_pot, atol=1e-8)


def test_path_integral_equals_amt_energy():
    # The closed-form energy and the 1-form integrated from the reference
    # profile agree with constant exactly 1 in this normalization.
    kappa = 1.25
    sol = _sol(kappa)
    kd = KillingData(b=sol.b, p=4.0)
    ref_prof = SymplecticPotential.reference(kappa).profile()
    rng = np.random.default_rng(17)
    for _ in range(3):
        prof = random_admissible_profile(rng, kappa, degree=3, scale=0.35)
        amt = mabuchi_energy_amt(to_symplectic(prof), sol)
        path = mabuchi_path_integral(straight_theta_path(ref_prof, prof), kd, sol)
        np.testing.assert_allclose(path, amt, rtol=1e-10)


def test_theta_path_requires_matching_kappa():
    rng = np.random.default_rng(19)
    p0 = random_admissible_profile(rng, 1.25)
    p1 = random_admissible_profile(rng, 1.5)
    with pytest.raises(OutOfDomain):
        straight_theta_path(p0, p1)


def test_symplectic_admissibility():
    with pytest.raises(NotAdmissible):
        SymplecticPotential(lambda z: np.asarray(z) * 0.0 - 1.0, 1.5)
