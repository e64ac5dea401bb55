import math
from fractions import Fraction

import numpy as np
import pytest

from randlyap.rkf45 import A, B4, B5, C, IntegrationError, rkf45_integrate, rkf45_step, steps_per_unit
from randlyap.ottyorke import TanPoint, rkf45_unit_step

from ld_reference import reference_unit_flow


def test_tableau_consistency():
    for ci, row in zip(C, A):
        assert math.isclose(sum(row), ci, abs_tol=1e-15)
    assert math.isclose(sum(B5), 1.0, abs_tol=1e-15)
    assert math.isclose(sum(B4), 1.0, abs_tol=1e-15)
    # the a63 entry is -3544/2565 (a frequently misprinted coefficient)
    assert A[5][2] == -3544 / 2565


def test_fifth_order_conditions():
    # sum b c^k = 1/(k+1) for k <= 4 with the 5th-order weights
    b = [Fraction(x).limit_denominator(100000) for x in B5]
    c = [Fraction(x).limit_denominator(100000) for x in C]
    for k in range(5):
        assert sum(bi * ci**k for bi, ci in zip(b, c)) == Fraction(1, k + 1)


def test_exponential_field_matches_closed_form():
    def field(q, a):
        return a * q[0], a * q[1]

    q = rkf45_unit_step(TanPoint(1.0, -2.0), 0.03, 0.001, field=field)
    assert abs(q[0] - math.exp(0.03)) < 1e-9
    assert abs(q[1] / -2.0 - 1.0304545339535169) < 1e-9


def test_polynomial_exactness():
    # y' = 1 + 2t + 3t^2 + 4t^3 + 5t^4 (time as a state component), exact at order 5
    rhs = lambda y: np.array([1.0, 1 + 2 * y[0] + 3 * y[0] ** 2 + 4 * y[0] ** 3 + 5 * y[0] ** 4])
    y, _ = rkf45_integrate(rhs, [0.0, 0.0], 0.25, 4)
    assert abs(y[1] - 5.0) < 1e-13


def test_step_returns_error_estimate():
    y5, err = rkf45_step(lambda y: -y, np.array([1.0]), 0.1)
    assert abs(y5[0] - math.exp(-0.1)) < 1e-8
    assert 0 < abs(err[0]) < 1e-6


def test_order_on_transformed_field():
    q0 = (math.tan(1.5), math.tan(1.5))
    ref = reference_unit_flow(q0, 0.03, 100_000)
    e1 = np.linalg.norm(np.array(rkf45_unit_step(q0, 0.03, 0.01)) - ref)
    e2 = np.linalg.norm(np.array(rkf45_unit_step(q0, 0.03, 0.005)) - ref)
    assert e1 / e2 >= 2**4


def test_steps_per_unit():
    assert steps_per_unit(0.001) == 1000
    assert steps_per_unit(0.25) == 4
    for bad in (0.3, 2.0, 0.0007):
        with pytest.raises(ValueError):
            steps_per_unit(bad)


def test_non_finite_state_reports_step():
    with pytest.raises(IntegrationError) as ei, np.errstate(all="ignore"):
        rkf45_integrate(lambda y: y * y, [1.0], 0.5, 100)
    assert ei.value.step >= 1
