from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from kcontract.errors import BadNormalization, BadParameter, HorizonTooShort, NonpositiveCoefficient
from kcontract.series import (KernelSpec, build_kernel, builtin_kernel, cauchy_product,
                              essential_normality_diagnostic, nevanlinna_sign_check, reciprocal_coefficients)

# 1/k for a_n = 1/(n+1), from a lower-triangular Toeplitz solve (see test_toeplitz_oracle)
DIRICHLET_C8 = [Fraction(1), Fraction(-1, 2), Fraction(-1, 12), Fraction(-1, 24), Fraction(-19, 720),
                Fraction(-3, 160), Fraction(-863, 60480), Fraction(-275, 24192), Fraction(-33953, 3628800)]


def toeplitz_reciprocal(a):
    n = len(a)
    mat = sla.toeplitz(a, np.r_[a[0], np.zeros(n - 1)])
    return sla.solve_triangular(mat, np.eye(n)[:, 0], lower=True)


def generalized_binomial(nu, n):
    out = Fraction(1)
    for k in range(n):
        out *= (nu + k) / Fraction(k + 1)
    return out


@pytest.mark.parametrize("family, kwargs, N, expected", [
    ("drury_arveson", {}, 6, [1, -1, 0, 0, 0, 0, 0]),
    ("power", {"nu": 2}, 4, [1, -2, 1, 0, 0]),
    ("dirichlet", {}, 2, [1, Fraction(-1, 2), Fraction(-1, 12)]),
    ("dirichlet", {}, 8, DIRICHLET_C8),
])
def test_reciprocal_examples(family, kwargs, N, expected):
    k = builtin_kernel(family, N, **kwargs)
    assert k.exact
    assert list(k.c) == expected


def test_toeplitz_oracle():
    a = [1.0 / (n + 1) for n in range(9)]
    np.testing.assert_allclose(toeplitz_reciprocal(a), [float(v) for v in DIRICHLET_C8], rtol=1e-13)


@pytest.mark.parametrize("nu, N, expected", [
    (2, 3, [1, 2, 3, 4]),
    (1, 3, [1, 1, 1, 1]),
    (Fraction(1, 2), 2, [1, Fraction(1, 2), Fraction(3, 8)]),
    (0.5, 2, [1, Fraction(1, 2), Fraction(3, 8)]),
    ("1/2", 2, [1, Fraction(1, 2), Fraction(3, 8)]),
])
def test_power_family(nu, N, expected):
    assert list(builtin_kernel("power", N, nu=nu).a) == expected


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_power_family_integer_binomials(m):
    from math import comb
    k = builtin_kernel("power", 25, nu=m)
    assert list(k.a) == [comb(m + n - 1, n) for n in range(26)]


def test_power_family_half_matches_binomial_oracle():
    k = builtin_kernel("power", 30, nu="1/2")
    assert list(k.a) == [generalized_binomial(Fraction(1, 2), n) for n in range(31)]


def test_power_one_is_drury_arveson():
    assert builtin_kernel("power", 10, nu=1).a == builtin_kernel("drury_arveson", 10).a


def test_irrational_power_falls_back_to_float():
    k = builtin_kernel("power", 40, nu=np.sqrt(2))
    assert not k.exact
    conv = cauchy_product(k.a_float, k.c_float)
    assert conv[0] == pytest.approx(1.0)
    assert max(abs(v) for v in conv[1:]) <= 1e-12 * max(abs(v) for v in k.a_float)


@pytest.mark.parametrize("family, kwargs", [
    ("drury_arveson", {}), ("power", {"nu": 2}), ("power", {"nu": "1/2"}), ("dirichlet", {}),
    ("power", {"nu": 3}), ("power", {"nu": "7/3"}),
])
def test_reciprocal_identity_exact(family, kwargs):
    k = builtin_kernel(family, 32, **kwargs)
    assert cauchy_product(k.a, k.c) == [1] + [0] * 32


@pytest.mark.parametrize("bad, err", [
    ([1, 1, 0, 1], NonpositiveCoefficient),
    ([1, 1, 1, -1], NonpositiveCoefficient),
    ([2, 1, 1], BadNormalization),
    ([1, float("nan"), 1], NonpositiveCoefficient),
])
def test_build_kernel_rejects(bad, err):
    with pytest.raises(err):
        build_kernel(bad)


def test_build_kernel_horizon_and_params():
    with pytest.raises(HorizonTooShort):
        build_kernel([1, 1, 1], max_degree=5)
    with pytest.raises(BadParameter):
        builtin_kernel("power", 4, nu=0)
    with pytest.raises(BadParameter):
        builtin_kernel("power", 4, nu=-1.5)
    with pytest.raises(BadParameter):
        builtin_kernel("nope", 4)
    with pytest.raises(BadParameter):
        build_kernel(lambda n: 1)


def test_generator_rule_and_names():
    k = build_kernel(lambda n: Fraction(1, 2 ** n), 5, name="geom")
    assert k.name == "geom"
    assert k.c[:3] == (1, Fraction(-1, 2), 0)
    assert builtin_kernel("da", 3).name == "drury-arveson"
    assert builtin_kernel("power", 3, nu=2).name == "K_nu(2)"


def test_ratio_diagnostics():
    k = builtin_kernel("power", 10, nu=2)
    # a_n/a_{n+1} = (n+1)/(n+2)
    assert k.ratio_inf == pytest.approx(0.5)
    assert k.ratio_sup == pytest.approx(10 / 11)
    assert k.r_estimate == pytest.approx(10 / 11)
    assert k.ratio(0) == Fraction(1, 2)


def test_F_coefficients_shift():
    k = builtin_kernel("dirichlet", 12)
    F = k.F_coefficients
    assert len(F) == 12
    # t F(t) + 1 = k(t) as truncated series
    assert [1] + list(F) == list(k.a)
    t = 0.37
    assert t * sum(f * t ** n for n, f in enumerate(F)) + 1 == pytest.approx(k.evaluate(t).real)


@pytest.mark.parametrize("family, kwargs, N, nonneg, nonpos, pivot", [
    ("drury_arveson", {}, 8, 2, 1, 1),
    ("power", {"nu": 2}, 8, 2, 3, 2),
    ("dirichlet", {}, 8, None, 1, 1),
])
def test_sign_check(family, kwargs, N, nonneg, nonpos, pivot):
    rep = nevanlinna_sign_check(builtin_kernel(family, N, **kwargs))
    assert rep.pivot_nonneg == nonneg
    assert rep.pivot_nonpos == nonpos
    assert rep.pivot_index == pivot
    assert rep.eventually_nonneg == (nonneg is not None)
    assert rep.horizon_limited and rep.horizon == N


@pytest.mark.parametrize("family, kwargs, first", [
    ("drury_arveson", {}, 0.0),
    ("dirichlet", {}, -0.5),
    ("power", {"nu": 2}, 1 / 6),
])
def test_essential_normality(family, kwargs, first):
    d = essential_normality_diagnostic(builtin_kernel(family, 40, **kwargs))
    assert d.shape == (39,)
    assert d[0] == pytest.approx(first, abs=1e-15)
    assert abs(d[-1]) < abs(d[0]) or first == 0.0


def test_essential_normality_needs_two():
    with pytest.raises(HorizonTooShort):
        essential_normality_diagnostic(builtin_kernel("dirichlet", 1))


def test_json_round_trip_recomputes_c():
    k = builtin_kernel("dirichlet", 6)
    obj = k.to_json()
    obj["c"] = ["garbage"]
    k2 = KernelSpec.from_json(obj)
    assert k2.c == k.c and k2.a == k.a and k2.name == k.name
    assert KernelSpec.from_json(k.dumps()).c == k.c
    kf = builtin_kernel("power", 6, nu=np.sqrt(3))
    np.testing.assert_allclose(KernelSpec.from_json(kf.dumps()).c_float, kf.c_float, rtol=1e-15)


def test_c_support():
    assert builtin_kernel("da", 20).c_support == 1
    assert builtin_kernel("power", 20, nu=3).c_support == 3
    assert builtin_kernel("dirichlet", 20).c_support is None
    assert builtin_kernel("power", 20, nu="1/2").c_support is None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.fractions(min_value=Fraction(1, 30), max_value=5, max_denominator=30), min_size=1, max_size=12))
def test_reciprocal_property_exact(tail):
    a = [Fraction(1)] + tail
    assert cauchy_product(a, reciprocal_coefficients(a)) == [1] + [0] * len(tail)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=0.05, max_value=3.0), min_size=1, max_size=30))
def test_reciprocal_property_float(tail):
    a = np.array([1.0] + tail)
    c = np.array(reciprocal_coefficients(list(a)))
    np.testing.assert_allclose(c, toeplitz_reciprocal(a), rtol=1e-9, atol=1e-9 * np.abs(c).max())
