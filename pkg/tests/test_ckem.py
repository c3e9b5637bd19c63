"""Boundary-value solver, Futaki curve, and the existence threshold."""

import io

import numpy as np
import pytest

from kahlerlab.ckem import (
    SWEEP_CSV_HEADER,
    ClassLabel,
    b_kappa,
    classify,
    futaki_residual,
    interior_min,
    kappa_zero,
    solve_P,
    sweep,
    write_sweep_csv,
)
from kahlerlab.numerics import Polynomial
from kahlerlab.errors import OutOfDomain

# Derived once by the bisection test below and frozen as a regression anchor.
KAPPA0 = 1.0270383184529654


def test_b_kappa_inverts_the_curve():
    for b in (1.1, 1.5, 2.0, 3.0, 10.0):
        kappa = (1.0 + b * b) / (2.0 * b)
        np.testing.assert_allclose(b_kappa(kappa), b, rtol=1e-13)


def test_b_kappa_domain():
    with pytest.raises(OutOfDomain):
        b_kappa(1.0)


def test_futaki_vanishes_exactly_on_the_curve():
    for b in (1.1, 1.5, 2.0, 3.0):
        kappa = (1.0 + b * b) / (2.0 * b)
        res = futaki_residual(kappa)
        assert abs(res(b)) < 1e-10
        assert abs(res(b - 0.1)) > 1e-4
        assert abs(res(b + 0.1)) > 1e-4


def test_solve_P_boundary_values():
    # Theta = P/(z+kappa) with Theta(+-1) = 0 and Theta'(+-1) = -+2 forces
    # P(+-1) = 0, P'(-1) = 2(kappa-1), P'(1) = -2(kappa+1).
    kappa = 1.3
    sol = solve_P(kappa, b_kappa(kappa))
    dP = sol.P.deriv()
    np.testing.assert_allclose(sol.P(-1.0), 0.0, atol=1e-11)
    np.testing.assert_allclose(sol.P(1.0), 0.0, atol=1e-11)
    np.testing.assert_allclose(dP(-1.0), 2.0 * (kappa - 1.0), atol=1e-10)
    np.testing.assert_allclose(dP(1.0), -2.0 * (kappa + 1.0), atol=1e-10)


def test_interior_min_of_known_polynomial():
    m, zm = interior_min(Polynomial([-0.25, 0.0, 1.0]))
    np.testing.assert_allclose(m, -0.25, atol=1e-12)
    np.testing.assert_allclose(zm, 0.0, atol=1e-8)


def test_kappa_zero_matches_frozen_value():
    k0 = kappa_zero()
    np.testing.assert_allclose(k0, KAPPA0, atol=1e-6)
    m, zm = interior_min(solve_P(k0, b_kappa(k0)).P)
    assert abs(m) < 1e-8
    assert -1.0 < zm < 1.0


def test_classification_brackets_the_threshold():
    assert classify(1.005) is ClassLabel.NEGATIVE_SOMEWHERE
    assert classify(KAPPA0) is ClassLabel.DOUBLE_ROOT
    assert classify(1.25) is ClassLabel.EXISTS_CKEM


def test_sweep_rows_and_label_transition():
    rows = sweep([1.01, KAPPA0, 1.5])
    labels = [r.label for r in rows]
    assert labels == [
        ClassLabel.NEGATIVE_SOMEWHERE,
        ClassLabel.DOUBLE_ROOT,
        ClassLabel.EXISTS_CKEM,
    ]
    for r in rows:
        assert abs(r.futaki_residual) < 1e-10


def test_sweep_csv_deterministic():
    rows = sweep([1.1, 1.2])
    bufs = []
    for _ in range(2):
        buf = io.StringIO()
        write_sweep_csv(rows, buf)
        bufs.append(buf.getvalue())
    assert bufs[0] == bufs[1]
    header, *lines = bufs[0].splitlines()
    assert header == SWEEP_CSV_HEADER
    assert len(lines) == 2
