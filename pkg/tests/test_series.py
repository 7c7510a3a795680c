from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyaprofile.enumeration import tree_series
from polyaprofile.errors import AccuracyError, DomainError, UsageError
from polyaprofile.series import (
    DOUBLE,
    EXACT,
    MarkedSeries,
    MarkPoly,
    MarkSpec,
    TruncatedSeries,
)


def S(coeffs, order=None, **kw):
    return TruncatedSeries(coeffs, order, **kw)


# ---------------------------------------------------------------------------
# add / mul
# ---------------------------------------------------------------------------

def test_binomial_square():
    a = S([1, 1], 2)
    assert (a * a).coeffs == [1, 2, 1]


def test_multiplicative_identity():
    a = S([3, Fraction(1, 2), 7], 2)
    one = TruncatedSeries.one(2)
    assert (a * one).coeffs == a.coeffs


def test_factorial_times_geometric_coefficient():
    # (sum n! x^n)(sum x^n): coefficient of x^3 is 6+2+1+1 = 10
    a = S([factorial(n) for n in range(4)], 3)
    b = S([1, 1, 1, 1], 3)
    assert (a * b)[3] == 10


def test_mismatch_errors():
    with pytest.raises(UsageError):
        S([1], 2) + S([1], 3)
    with pytest.raises(UsageError):
        S([1], 2) * TruncatedSeries([1.0], 2, ring=DOUBLE)


# ---------------------------------------------------------------------------
# exp
# ---------------------------------------------------------------------------

def test_exp_zero():
    assert TruncatedSeries.zero(4).exp().coeffs == [1, 0, 0, 0, 0]


def test_exp_x():
    e = TruncatedSeries.x(3).exp()
    assert e.coeffs == [1, 1, Fraction(1, 2), Fraction(1, 6)]


def test_exp_x_plus_x2():
    e = S([0, 1, 1, 0], 3).exp()
    assert e[3] == Fraction(7, 6)


def test_exp_requires_zero_constant():
    with pytest.raises(DomainError):
        S([1, 1], 3).exp()


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(-4, 4), min_size=4, max_size=4),
    st.lists(st.integers(-4, 4), min_size=4, max_size=4),
)
def test_exp_is_ring_homomorphism(aa, bb):
    N = 6
    a = S([0] + aa + [0, 0], N)
    b = S([0] + bb + [0, 0], N)
    assert (a + b).exp() == a.exp() * b.exp()


# ---------------------------------------------------------------------------
# substitute_power / polya_exponent
# ---------------------------------------------------------------------------

def test_substitute_power_basic():
    a = S([0, 1, 1], 4)
    assert a.substitute_power(2).coeffs == [0, 0, 1, 0, 1]


def test_substitute_power_identity():
    a = S([2, 3, 5], 2)
    assert a.substitute_power(1) is a


def test_substitute_power_truncates():
    a = S([1, 1, 1, 1], 3)
    assert a.substitute_power(3).coeffs == [1, 0, 0, 1]


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(-3, 3), min_size=3, max_size=3),
    st.integers(1, 3),
    st.integers(1, 3),
)
def test_substitute_power_composes(cs, i, j):
    a = S(cs + [0] * 10, 12)
    assert a.substitute_power(i).substitute_power(j) == a.substitute_power(i * j)


def test_polya_exponent_of_x():
    p = TruncatedSeries.x(3).polya_exponent()
    assert p.coeffs == [0, 1, Fraction(1, 2), Fraction(1, 3)]


def test_polya_exponent_requires_zero_constant():
    with pytest.raises(DomainError):
        S([1, 1], 3).polya_exponent()


def test_tree_function_fixed_point():
    # y(x) = x exp(sum_i y(x^i)/i), coefficient-wise up to order 20
    y = tree_series(20)
    again = y.polya_exponent().exp().shift(1)
    assert again == y


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def test_evaluate_geometric():
    a = S([1] * 31, 30)
    v, err = a.evaluate(0.5)
    assert abs(v - 2.0) <= max(err, 1e-12)


def test_evaluate_tree_series_at_zero():
    assert tree_series(50).evaluate(0.0) == (0.0, 0.0)


def test_evaluate_near_radius_flags_slow_tail():
    # at x0 = rho the tail decays like n^{-1/2}; the estimate must not
    # pretend otherwise: value + err stays an honest window around 1
    y = tree_series(400)
    v, err = y.evaluate(0.3383219)
    assert v < 1.0
    assert abs(1.0 - v) < 0.08
    assert err > 0


def test_evaluate_outside_unit_disk_rejected():
    with pytest.raises(DomainError):
        tree_series(10).evaluate(1.5)


def test_evaluate_divergent_point_raises_accuracy():
    with pytest.raises(AccuracyError):
        tree_series(60).evaluate(0.9)


# ---------------------------------------------------------------------------
# double ring
# ---------------------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(
    st.lists(st.integers(-1000, 1000), min_size=6, max_size=6),
    st.lists(st.integers(-1000, 1000), min_size=6, max_size=6),
)
def test_double_matches_exact(aa, bb):
    N = 10
    ea = S(aa + [0] * 5, N)
    eb = S(bb + [0] * 5, N)
    da = TruncatedSeries(aa + [0] * 5, N, ring=DOUBLE)
    db = TruncatedSeries(bb + [0] * 5, N, ring=DOUBLE)
    prod_exact = (ea * eb).coeffs
    prod_double = (da * db).coeffs
    for pe, pd in zip(prod_exact, prod_double):
        assert abs(pd - pe) <= 1e-12 * max(1.0, abs(pe))


def test_scaled_double_substitute_and_mul():
    scale = 0.25
    e = tree_series(40)
    d = e.to_double(scale)
    for s, ds in ((e * e, d * d), (e.substitute_power(2), d.substitute_power(2))):
        for n in (0, 5, 17, 40):
            want = float(s[n]) * scale**n
            assert abs(ds[n] - want) <= 1e-10 * max(abs(want), 1.0)


def test_exact_ring_rejects_scale():
    with pytest.raises(UsageError):
        TruncatedSeries([1, 2], 1, ring=EXACT, scale=0.5)


@pytest.mark.parametrize("mag,tol", [(20, 1e-12), (1000, 1e-11)])
def test_double_exp_matches_exact_at_order_50(mag, tol):
    # exp of a series with coefficients up to 10^3 reaches ~1e32 by order 50;
    # the accumulated float64 roundoff there is a few 1e-12 relative, hence
    # the slightly wider tolerance for the stress magnitudes
    import random

    rng = random.Random(7)
    N = 50
    coeffs = [0] + [Fraction(rng.randint(-mag, mag), rng.randint(1, 8)) for _ in range(10)]
    e = S(coeffs, N).exp()
    d = TruncatedSeries([float(c) for c in coeffs], N, ring=DOUBLE).exp()
    for n in range(N + 1):
        want = float(e[n])
        assert abs(d[n] - want) <= tol * max(1.0, abs(want))


# ---------------------------------------------------------------------------
# JSON golden serialization
# ---------------------------------------------------------------------------

def test_json_roundtrip():
    a = S([Fraction(1, 3), 2, Fraction(-5, 7)], 2)
    b = TruncatedSeries.from_json(a.to_json())
    assert a == b


def test_json_golden_tree_series(tmp_path):
    y = tree_series(10)
    text = y.to_json()
    assert '"1"' in text
    assert TruncatedSeries.from_json(text) == y


# ---------------------------------------------------------------------------
# marked series
# ---------------------------------------------------------------------------

def test_marked_polya_exponent_example():
    # a = u x at order 2: polya gives u x + u^2 x^2 / 2
    spec = MarkSpec((2,), ("u",))
    a = MarkedSeries.zero(2, spec)
    a.coeffs[1] = MarkPoly.var(spec, 0, 1)
    p = a.polya_exponent()
    assert p[1].c == (0, 1, 0)
    assert p[2].c == (0, 0, Fraction(1, 2))


def test_marked_collapse_at_one_matches_tree_series():
    from polyaprofile.profile import level_degree_series

    for d, k in ((1, 0), (2, 1), (3, 2)):
        s = level_degree_series(d, k, 12, mode="full")
        assert s.at_one() == tree_series(12)


def test_marked_u_degree_bounded_by_n():
    from polyaprofile.profile import level_degree_series

    s = level_degree_series(1, 1, 8, mode="full")
    for n, poly in enumerate(s.coeffs):
        for (j,), _ in poly.monomials():
            assert j <= n


def test_eps_mode_tracks_negative_powers():
    spec = MarkSpec((3,), ("eps",))
    inv = MarkPoly.var(spec, 0, -1)
    # (1+eps)^{-1} = 1 - eps + eps^2 - eps^3
    assert inv.c == (1, -1, 1, -1)
    # power_map(2) sends it to (1+eps)^{-2} = 1 - 2eps + 3eps^2 - 4eps^3
    assert inv.power_map(2).c == (1, -2, 3, -4)
