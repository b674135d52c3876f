"""Jet arithmetic, the finite-difference oracle, and guarded inversion.

Expected values here are frozen up front: polynomial cases are written out by
hand, transcendental derivatives come from the classical closed forms, and
every jet coefficient is additionally held to the independent FD oracle.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartanlab.errors import ConditioningError, EvaluationDomainError
from cartanlab.jets import (
    ChartPoint,
    Jet,
    exp,
    fd_derivative,
    invert,
    jet_eval,
    log,
    power,
    sqrt,
)


def _pt(x, p):
    return ChartPoint(np.asarray(x, dtype=float), np.asarray(p, dtype=float))


# ---------------------------------------------------------------------------
# chart points


def test_chart_point_validation():
    pt = _pt([1.0, 2.0], [3.0, -1.0])
    assert pt.n == 2
    np.testing.assert_array_equal(pt.coords, [1.0, 2.0, 3.0, -1.0])
    with pytest.raises(EvaluationDomainError):
        _pt([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        _pt([1.0], [1.0])
    with pytest.raises(ValueError):
        _pt([np.nan, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        _pt([0.0, 0.0, 0.0], [1.0, 0.0])


# ---------------------------------------------------------------------------
# jet_eval on polynomials: exact hand values


def test_p1_squared_partials():
    pt = _pt([0.3, -0.8], [0.5, 1.7])
    j = jet_eval(lambda xs, ps: ps[0] * ps[0], pt, 2)
    assert j.value == pytest.approx(0.25, abs=0.0)
    assert j.partial((0, 0, 2, 0)) == 2.0
    assert j.partial((0, 0, 1, 0)) == 1.0  # 2 p_1 at p_1 = 0.5
    for alpha in [(1, 0, 0, 0), (0, 1, 0, 0), (2, 0, 0, 0), (1, 0, 1, 0)]:
        assert j.partial(alpha) == 0.0


def test_flat_k2_hessian_is_twice_identity():
    pt = _pt([1.0, -2.0, 0.5], [0.2, 1.1, -0.7])
    j = jet_eval(lambda xs, ps: sum(q * q for q in ps), pt, 2)
    n = 3
    for a in range(n):
        for b in range(n):
            alpha = [0] * (2 * n)
            alpha[n + a] += 1
            alpha[n + b] += 1
            assert j.partial(alpha) == (2.0 if a == b else 0.0)


def test_conformal_mixed_partial_matches_fd():
    # f = (1 + |x|^2/4)^2 * sum(p_i^2); d/dx1 d/dp1 f at x=(1,0), p=(1,0)
    # equals x1*(1+|x|^2/4) * 2 p1 = 1.25 * 2 = 2.5.
    def f_jets(xs, ps):
        phi = (1 + (xs[0] * xs[0] + xs[1] * xs[1]) / 4) ** 2
        return phi * (ps[0] * ps[0] + ps[1] * ps[1])

    def f_vals(x, p):
        return (1 + (x @ x) / 4.0) ** 2 * (p @ p)

    pt = _pt([1.0, 0.0], [1.0, 0.0])
    j = jet_eval(f_jets, pt, 2)
    assert j.partial((1, 0, 1, 0)) == pytest.approx(2.5, rel=1e-12)
    fd, err = fd_derivative(f_vals, pt, dirs=(0, 2))
    assert abs(j.partial((1, 0, 1, 0)) - fd) <= max(1e-6 * abs(fd), 10 * err)


# ---------------------------------------------------------------------------
# FD oracle basics


def test_fd_bilinear():
    pt = _pt([2.0, -1.0], [0.4, 0.9])
    val, err = fd_derivative(lambda x, p: x[0] * p[0], pt, dirs=(0, 2))
    assert abs(val - 1.0) <= max(err, 1e-9)


def test_fd_flat_k2():
    pt = _pt([0.0, 0.0], [1.0, 2.0])
    val, err = fd_derivative(lambda x, p: p @ p, pt, dirs=(2, 2))
    assert abs(val - 2.0) <= max(err, 1e-7)


def test_fd_error_paths():
    pt = _pt([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        fd_derivative(lambda x, p: 0.0, pt, dirs=(7,))
    with pytest.raises(EvaluationDomainError):
        fd_derivative(lambda x, p: float("nan"), pt, dirs=(0,))
    with pytest.raises(ValueError):
        fd_derivative(lambda x, p: 0.0, pt, dirs=(0,), steps=(1e-4, 1e-3))


def test_fd_jet_contract_on_smooth_field():
    # arbitrary smooth field mixing all primitive kinds
    def f_jets(xs, ps):
        return sqrt(1 + xs[0] * xs[0] + ps[1] * ps[1]) * exp(xs[1] / 10) + log(
            2 + ps[0] * ps[0]
        )

    def f_vals(x, p):
        return math.sqrt(1 + x[0] ** 2 + p[1] ** 2) * math.exp(x[1] / 10) + math.log(
            2 + p[0] ** 2
        )

    rng = np.random.default_rng(7)
    for _ in range(4):
        pt = _pt(rng.uniform(-1, 1, 2), rng.uniform(0.5, 1.5, 2))
        j = jet_eval(f_jets, pt, 3)
        for dirs in [(0,), (2,), (0, 3), (2, 2), (1, 2, 3)]:
            alpha = [0, 0, 0, 0]
            for d in dirs:
                alpha[d] += 1
            fd, err = fd_derivative(f_vals, pt, dirs=dirs)
            assert abs(j.partial(alpha) - fd) <= max(1e-6, 10 * err)


# ---------------------------------------------------------------------------
# exact ring structure


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(-5, 5), min_size=20, max_size=20),
    st.lists(st.integers(-5, 5), min_size=20, max_size=20),
)
def test_leibniz_convolution_exact(fa, fb):
    # order-3 jets in 3 variables have exactly 20 coefficients
    from cartanlab.jets import _tables

    tab = _tables(3, 3)
    assert tab.size == 20
    a = Jet(3, 3, np.array(fa, dtype=float))
    b = Jet(3, 3, np.array(fb, dtype=float))
    prod = a * b
    expect = np.zeros(tab.size)
    for i, ea in enumerate(tab.exps):
        for k, eb in enumerate(tab.exps):
            es = tuple(u + v for u, v in zip(ea, eb))
            if sum(es) <= 3:
                expect[tab.index[es]] += fa[i] * fb[k]
    # integer arithmetic in doubles: exact equality required
    np.testing.assert_array_equal(prod.c, expect)


def test_truncation_commutes_with_product():
    rng = np.random.default_rng(3)
    from cartanlab.jets import _tables

    a = Jet(4, 4, rng.normal(size=_tables(4, 4).size))
    b = Jet(4, 4, rng.normal(size=_tables(4, 4).size))
    full = (a * b).truncate(2)
    low = a.truncate(2) * b.truncate(2)
    np.testing.assert_allclose(full.c, low.c, rtol=0, atol=1e-14)


def test_deriv_consistent_with_partial():
    pt = _pt([0.2, 0.4], [1.0, -0.3])
    j = jet_eval(lambda xs, ps: xs[0] ** 3 * ps[1] ** 2, pt, 5)
    d = j.deriv(0).deriv(3)  # d/dx1 d/dp2
    assert d.value == pytest.approx(j.partial((1, 0, 0, 1)), rel=1e-13)
    assert d.partial((1, 0, 0, 1)) == pytest.approx(j.partial((2, 0, 0, 2)), rel=1e-13)


# ---------------------------------------------------------------------------
# smooth primitives against classical derivative formulas


def test_primitive_derivatives_single_variable():
    z = Jet.variable(0, 4.0, 2, 4)

    s = sqrt(z)
    assert s.value == pytest.approx(2.0, rel=1e-15)
    assert s.partial((1, 0)) == pytest.approx(0.25, rel=1e-13)
    assert s.partial((2, 0)) == pytest.approx(-1.0 / 32.0, rel=1e-13)

    e = exp(z)
    for k in range(5):
        assert e.partial((k, 0)) == pytest.approx(math.exp(4.0), rel=1e-12)

    l = log(z)
    assert l.value == pytest.approx(math.log(4.0), rel=1e-15)
    assert l.partial((1, 0)) == pytest.approx(0.25, rel=1e-13)
    assert l.partial((2, 0)) == pytest.approx(-1.0 / 16.0, rel=1e-13)
    assert l.partial((3, 0)) == pytest.approx(2.0 / 64.0, rel=1e-13)

    pw = power(z, 1.5)
    assert pw.value == pytest.approx(8.0, rel=1e-15)
    assert pw.partial((1, 0)) == pytest.approx(1.5 * 2.0, rel=1e-13)
    assert pw.partial((2, 0)) == pytest.approx(1.5 * 0.5 / 2.0, rel=1e-13)

    inv = 1.0 / z
    assert inv.partial((1, 0)) == pytest.approx(-1.0 / 16.0, rel=1e-13)
    assert inv.partial((2, 0)) == pytest.approx(2.0 / 64.0, rel=1e-13)

    ip = z**-2
    assert ip.value == pytest.approx(1.0 / 16.0, rel=1e-13)
    assert ip.partial((1, 0)) == pytest.approx(-2.0 / 4.0**3, rel=1e-13)


def test_primitive_domain_errors():
    z = Jet.variable(0, -1.0, 2, 3)
    with pytest.raises(EvaluationDomainError):
        sqrt(z)
    with pytest.raises(EvaluationDomainError):
        log(z)
    with pytest.raises(EvaluationDomainError):
        power(z, 0.5)
    zero = Jet.constant(0.0, 2, 3)
    with pytest.raises(EvaluationDomainError):
        _ = 1.0 / zero
    with pytest.raises(EvaluationDomainError):
        sqrt(-2.0)
    with pytest.raises(EvaluationDomainError):
        log(0.0)


# ---------------------------------------------------------------------------
# guarded inversion


def test_invert_identity_and_diagonal():
    np.testing.assert_allclose(invert(np.eye(3)), np.eye(3), atol=1e-14)
    beta = 0.7
    got = invert(np.diag([1 / beta] * 4))
    np.testing.assert_allclose(got, np.diag([beta] * 4), rtol=1e-13)


def test_invert_rejects_asymmetric_and_singular():
    with pytest.raises(ValueError):
        invert(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ConditioningError) as ei:
        invert(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert "pivot" in str(ei.value)
    bad = np.diag([1.0, 1e-15])
    with pytest.raises(ConditioningError):
        invert(bad)


def test_invert_bundle_metric_pair():
    # deformed bundle metric on the flat structure: down components
    # (1/beta) I - c*beta p p^T must invert to beta I + (c beta^3/(1-2c beta^2 tau)) p p^T
    rng = np.random.default_rng(11)
    for c, beta in [(-1.0, 1.0), (-1.0, 0.7), (0.0, 1.3), (1.0, 0.5)]:
        p = rng.normal(size=3)
        tau = 0.5 * (p @ p)
        if 1 - 2 * c * beta**2 * tau <= 1e-3:
            p *= 0.2 / np.linalg.norm(p)
            tau = 0.5 * (p @ p)
        down = (1 / beta) * np.eye(3) - c * beta * np.outer(p, p)
        up = beta * np.eye(3) + (c * beta**3 / (1 - 2 * c * beta**2 * tau)) * np.outer(p, p)
        np.testing.assert_allclose(invert(down), up, rtol=0, atol=1e-10)
        np.testing.assert_allclose(down @ up, np.eye(3), rtol=0, atol=1e-10)
