from fractions import Fraction

import pytest

from polyaprofile.enumeration import (
    degree_series,
    enumerate_trees_exhaustive,
    multiset_cap_series,
    tree_series,
)
from polyaprofile.errors import UsageError
from polyaprofile.profile import (
    TOTAL,
    exact_distribution,
    factorial_moments_from_marked,
    finite_covariance,
    gamma_series,
    gamma_series_progression,
    joint_distribution,
    level_degree_series,
    level_difference_moment,
    level_mean,
    mixed_gamma_series,
    mixed_moment_from_marked,
    second_factorial_series,
    two_level_series,
)
from polyaprofile.sampling import PolyaTree, extract_profile


def brute_profiles(n):
    return [
        extract_profile(PolyaTree.from_shape(s), d_max=n)
        for s in enumerate_trees_exhaustive(n)
    ]


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

def test_distribution_examples():
    d = exact_distribution(3, 1, 1)
    assert d.probs == {0: Fraction(1, 2), 2: Fraction(1, 2)}
    d = exact_distribution(2, 1, 1)
    assert d.probs == {1: Fraction(1, 1)}


def test_distribution_sums_to_one_and_support():
    for n in (4, 6, 8):
        for k in (0, 1, 3):
            dist = exact_distribution(n, 2, k)
            assert sum(dist.probs.values()) == 1
            assert all(0 <= l <= n for l in dist.probs)


def test_level_zero_has_at_most_one_node():
    for n in (3, 5, 7):
        for d in (1, 2, 3):
            dist = exact_distribution(n, d, 0)
            assert set(dist.probs) <= {0, 1}


def test_root_degree_distribution_matches_enumeration():
    for n in range(2, 9):
        trees = enumerate_trees_exhaustive(n)
        y_n = len(trees)
        for d in (1, 2, 3):
            dist = exact_distribution(n, d, 0)
            brute = sum(1 for s in trees if len(s) == d - 1)
            assert dist.probs.get(1, Fraction(0)) == Fraction(brute, y_n)


def test_requires_order_at_least_n():
    series = level_degree_series(1, 1, 6, mode="full")
    with pytest.raises(UsageError):
        exact_distribution(8, 1, 1, series=series, N=6)


def test_mean_zero_beyond_height():
    # no level k >= n in a tree of size n
    for n in (3, 5):
        g = gamma_series(1, n, 8)
        assert g[n] == 0


# ---------------------------------------------------------------------------
# gamma route vs distribution route
# ---------------------------------------------------------------------------

def test_gamma_matches_distribution_means_small():
    y = tree_series(12)
    for d in (1, 2, 3):
        for k in (0, 1, 2, 4):
            g = gamma_series(d, k, 12)
            for n in range(1, 13):
                dist = exact_distribution(n, d, k, N=12)
                assert dist.mean() == Fraction(g[n], y[n])


def test_eps_route_matches_gamma_and_second_factorial():
    y = tree_series(10)
    for d in (1, 2):
        for k in (1, 3):
            moments = [
                factorial_moments_from_marked(n, d, k, order=2, N=10)
                for n in range(1, 11)
            ]
            g = gamma_series(d, k, 10)
            g2 = second_factorial_series(d, k, 10)
            for n in range(1, 11):
                assert moments[n - 1][1] == Fraction(g[n], y[n])
                assert moments[n - 1][2] == Fraction(g2[n], y[n])


def test_gamma_level_sum_is_degree_series():
    # sum_k gamma_k^{(d)} = D^{(d)} coefficient-wise
    N = 30
    for d in (1, 2, 3):
        D = degree_series(d, N).D
        total = [0] * (N + 1)
        for k, g in gamma_series_progression(d, N, N):
            for n in range(N + 1):
                total[n] += g[n]
        assert total == list(D.coeffs)


@pytest.mark.parametrize("x0,N,k_max", [(0.25, 80, 8), (0.3, 200, 6)])
def test_gamma_normalized_stabilizes_at_interior_point(x0, N, k_max):
    # gamma_k(x)/y(x)^{k+d} approaches a limit geometrically; N is chosen so
    # the truncation tail (amplified by y^{-k}) stays below the signal
    y = tree_series(N)
    yv, _ = y.evaluate(x0)
    d = 2
    vals = []
    for k, g in gamma_series_progression(d, k_max, N):
        gv, _ = g.evaluate(x0)
        vals.append(gv / yv ** (k + d))
    diffs = [abs(b - a) for a, b in zip(vals, vals[1:])]
    assert diffs[-1] < diffs[3] < diffs[1]
    assert diffs[-1] / diffs[-3] < 0.5


def test_second_factorial_vanishes_beyond_height():
    # no level k >= n in a size-n tree: gamma and gamma2 coefficients vanish
    for n in (3, 5):
        g = gamma_series(1, n, 8)
        g2 = second_factorial_series(1, n, 8)
        assert g[n] == 0 and g2[n] == 0


# ---------------------------------------------------------------------------
# mixed moments and variance
# ---------------------------------------------------------------------------

def test_mixed_gamma_initial_is_zero():
    g = mixed_gamma_series(1, 2, 0, 8)
    assert all(c == 0 for c in g.coeffs)


def test_mixed_requires_distinct_degrees():
    with pytest.raises(UsageError):
        mixed_gamma_series(2, 2, 1, 8)


def test_mixed_moment_nonnegative():
    y = tree_series(12)
    for k in (1, 2):
        g = mixed_gamma_series(1, 2, k, 12)
        for n in range(1, 13):
            assert Fraction(g[n], y[n]) >= 0


def test_mixed_and_second_factorial_match_brute_force():
    for n in range(2, 9):
        profiles = brute_profiles(n)
        y_n = len(profiles)
        for k in (0, 1, 2):
            for d1, d2 in ((1, 2), (1, 3), (2, 3)):
                g = mixed_gamma_series(d1, d2, k, n)
                want = Fraction(
                    sum(p.degree_count(d1, k) * p.degree_count(d2, k) for p in profiles),
                    y_n,
                )
                assert Fraction(g[n], y_n) == want
            for d in (1, 2):
                g2 = second_factorial_series(d, k, n)
                want = Fraction(
                    sum(
                        p.degree_count(d, k) * (p.degree_count(d, k) - 1)
                        for p in profiles
                    ),
                    y_n,
                )
                assert Fraction(g2[n], y_n) == want


def test_variance_nonnegative():
    for n in (6, 10):
        for k in (1, 2, 3):
            tab = finite_covariance(1, 1, n, k)
            assert tab.var1 >= 0


def test_covariance_diagonal_equals_variance():
    tab = finite_covariance(2, 2, 8, 1)
    assert tab.covariance == tab.var1 == tab.var2
    assert tab.correlation == 1.0 or tab.correlation is None


def test_covariance_brute_force():
    for n in (6, 8):
        profiles = brute_profiles(n)
        y_n = len(profiles)
        for k in (1, 2):
            tab = finite_covariance(1, 2, n, k)
            e1 = Fraction(sum(p.degree_count(1, k) for p in profiles), y_n)
            e2 = Fraction(sum(p.degree_count(2, k) for p in profiles), y_n)
            e12 = Fraction(
                sum(p.degree_count(1, k) * p.degree_count(2, k) for p in profiles), y_n
            )
            assert tab.covariance == e12 - e1 * e2


def test_degenerate_correlation_reported_as_none():
    # at k=0 the degree-4 count in tiny trees is constant zero
    tab = finite_covariance(1, 4, 3, 0)
    assert tab.correlation is None


# ---------------------------------------------------------------------------
# two-level series
# ---------------------------------------------------------------------------

def test_two_level_marginals_collapse():
    N = 8
    d, k, h = 2, 2, 1
    s = two_level_series(d, k, h, N, mode="full")
    # u1 = 1 leaves the level-(k+h) marking: marginalize and compare
    for n in range(1, N + 1):
        joint = joint_distribution(n, d, k, h, series=s, N=N)
        m2 = {}
        m1 = {}
        for (l1, l2), p in joint.items():
            m2[l2] = m2.get(l2, Fraction(0)) + p
            m1[l1] = m1.get(l1, Fraction(0)) + p
        d2 = exact_distribution(n, d, k + h, N=N)
        d1 = exact_distribution(n, d, k, N=N)
        assert m2 == {l: p for l, p in d2.probs.items()}
        assert m1 == {l: p for l, p in d1.probs.items()}


def test_two_level_joint_matches_enumeration_n4():
    joint = joint_distribution(4, 1, 1, 1)
    assert joint == {
        (0, 0): Fraction(1, 4),
        (0, 2): Fraction(1, 4),
        (1, 1): Fraction(1, 4),
        (3, 0): Fraction(1, 4),
    }


def test_two_level_mixed_moment_route():
    for n in (5, 7):
        profiles = brute_profiles(n)
        y_n = len(profiles)
        for (k, h) in ((1, 1), (0, 2)):
            got = mixed_moment_from_marked(n, 1, k, h, N=n)
            want = Fraction(
                sum(p.degree_count(1, k) * p.degree_count(1, k + h) for p in profiles),
                y_n,
            )
            assert got == want


def test_fourth_difference_moment_matches_brute_force():
    for n in (5, 8):
        profiles = brute_profiles(n)
        y_n = len(profiles)
        for (r, h) in ((0, 1), (1, 1), (1, 2)):
            got = level_difference_moment(n, r, h, power=4)
            want = Fraction(
                sum((p.total(r) - p.total(r + h)) ** 4 for p in profiles), y_n
            )
            assert got == want
            got2 = level_difference_moment(n, r, h, power=2)
            want2 = Fraction(
                sum((p.total(r) - p.total(r + h)) ** 2 for p in profiles), y_n
            )
            assert got2 == want2


def test_mixed_degree_eps_route_matches_gamma_route():
    # two fully independent routes to E[X^{(d1)}(k) X^{(d2)}(k)]
    from polyaprofile.profile import mixed_degree_moment_from_marked

    N = 20
    y = tree_series(N)
    for d1, d2 in ((1, 2), (2, 3)):
        for k in (0, 1, 3):
            g = mixed_gamma_series(d1, d2, k, N)
            for n in (5, 12, 20):
                assert mixed_degree_moment_from_marked(n, d1, d2, k, N=N) == Fraction(
                    g[n], y[n]
                )


def test_mixed_degree_joint_law_matches_enumeration():
    from polyaprofile.profile import mixed_degree_series

    N = 7
    y = tree_series(N)
    s = mixed_degree_series(1, 2, 1, N, mode="full")
    for n in (4, 6, 7):
        profiles = brute_profiles(n)
        brute = {}
        for p in profiles:
            key = (p.degree_count(1, 1), p.degree_count(2, 1))
            brute[key] = brute.get(key, 0) + 1
        got = {key: v for key, v in s[n].monomials()}
        assert got == brute


def test_total_profile_distribution():
    # d=TOTAL marks every node on the level
    s = level_degree_series(TOTAL, 1, 6, mode="full")
    y = tree_series(6)
    for n in (3, 5, 6):
        profiles = brute_profiles(n)
        brute = {}
        for p in profiles:
            c = p.total(1)
            brute[c] = brute.get(c, 0) + 1
        poly = s[n]
        got = {l: v for (l,), v in poly.monomials()}
        assert got == brute


def test_double_ring_moments_match_exact():
    n, k = 60, 5
    exact = finite_covariance(1, 2, n, k, ring="exact")
    dbl = finite_covariance(1, 2, n, k, ring="double", scale=0.3383218568992077)
    for attr in ("mean1", "mean2", "mixed", "var1", "var2", "covariance"):
        e = float(getattr(exact, attr))
        g = getattr(dbl, attr)
        assert abs(g - e) <= 1e-10 * max(1.0, abs(e))
