"""Exact finite-n laws of the degree-restricted level profile.

Let L_n^{(d)}(k) be the number of degree-d vertices at distance k from the
root in a uniform random unlabelled rooted tree of size n (planted degrees,
root at level 0).  Two independent computation routes are implemented, and
the test suite holds them to exact rational equality:

1. Marking recurrences.  The level-k marked series is built bottom-up:

       y_0(x,u)     = y(x) + (u-1) x Z_{d-1}(y(x), ..., y(x^{d-1}))
       y_{k+1}(x,u) = x exp( sum_{i>=1} y_k(x^i, u^i) / i )

   with the total-profile variant y_0 = u y(x).  In full-u mode the x^n
   coefficient is the whole distribution: P(L = l) = [x^n u^l] / y_n.  In
   moments mode u = 1 + eps with eps nilpotent, which carries all
   u-derivatives at u = 1 up to a fixed order through the same recurrence.
   The two-level series marks levels k and k+h with separate variables.

2. Derivative recurrences.  Differentiating the exp recurrence once, twice,
   and in two variables and setting the marks to 1 gives univariate
   integer-coefficient recurrences for the expectation numerators:

       gamma_{k+1}   = y (gamma_k + G_k),                G_k = sum_{i>=2} gamma_k(x^i)
       gamma2_{k+1}  = y ((gamma_k+G_k)^2 + gamma2_k
                          + sum_{i>=2} i gamma2_k(x^i)
                          + sum_{i>=2} (i-1) gamma_k(x^i))
       mixed_{k+1}   = y ((gamma_k^{d1}+G_k^{d1})(gamma_k^{d2}+G_k^{d2})
                          + mixed_k + sum_{i>=2} i mixed_k(x^i))

   with gamma_0 = x Z_{d-1}(y(x),...), gamma2_0 = mixed_0 = 0.  These give
   E[X], E[X(X-1)] and E[X^{(d1)} X^{(d2)}] exactly, hence covariance,
   variance and correlation.  They run in the exact ring, or in the rescaled
   double ring for large n where exact arithmetic is needlessly slow.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt, sqrt

from .enumeration import multiset_cap_series, tree_series
from .errors import UsageError
from .series import (
    DOUBLE,
    EXACT,
    MarkedSeries,
    MarkPoly,
    MarkSpec,
    TruncatedSeries,
)

TOTAL = None  # degree argument meaning "count every node on the level"


# ---------------------------------------------------------------------------
# marked-series route
# ---------------------------------------------------------------------------

def _as_marked(series, spec):
    return MarkedSeries.from_scalar_series(series, spec)

def _level_step(s):
    """One level of the recurrence: x exp(sum_i s(x^i, u^i)/i)."""
    return s.polya_exponent().exp().shift(1)


def _base_level_series(d, N, spec, mark, inner=None, z_base=None):
    """y_0 with the given mark value attached at level 0.

    ``inner`` replaces the plain tree series when deeper levels already carry
    marks (the two-level recurrence).  ``z_base`` feeds the cycle-index
    arguments of the root decomposition; the root's children see the tree's
    level h as their level h-1, so for a two-level base marking levels 0 and
    h the z_base must be the (h-1)-level marked series, not the h-level one
    (exhaustive enumeration pins this down; see the two-level tests).
    """
    y = inner if inner is not None else _as_marked(tree_series(N), spec)
    if d is TOTAL:
        return y * mark
    one = MarkPoly.const(spec, 1)
    zsub = multiset_cap_series(d, N, base=z_base if z_base is not None else y)
    return y + zsub * (mark - one)


def level_series_progression(d, k_max, N, spec, mark, inner=None):
    """Yield (k, y_k) for k = 0..k_max, reusing each level for the next."""
    cur = _base_level_series(d, N, spec, mark, inner)
    yield 0, cur
    for k in range(1, k_max + 1):
        cur = _level_step(cur)
        yield k, cur


def level_degree_series(d, k, N, mode="full", order=2, u_cap=None):
    """The one-level marked series y_k^{(d)}(x, u) truncated at x-order N.

    mode 'full': coefficients are polynomials in u (cap min(N, u_cap)), the
    complete distribution.  mode 'moments': u = 1+eps nilpotent of the given
    order, carrying factorial moments E[X (X-1) ... (X-j+1)] for j <= order.
    """
    if k < 0 or (d is not TOTAL and d < 1):
        raise UsageError("level_degree_series requires k >= 0 and d >= 1")
    if mode == "full":
        spec = MarkSpec((min(N, u_cap) if u_cap else N,), ("u",))
    elif mode == "moments":
        spec = MarkSpec((order,), ("eps",))
    else:
        raise UsageError(f"unknown mode {mode!r}")
    mark = MarkPoly.var(spec, 0, 1)
    for kk, s in level_series_progression(d, k, N, spec, mark):
        if kk == k:
            return s
    raise AssertionError


def two_level_series(d, k, h, N, mode="full", order=2, u_cap=None):
    """Joint marked series for levels k and k+h.

    mode 'full': two u-variables, exact joint distributions (small n only).
    mode 'moments': two nilpotent marks of the given per-variable order
    (order 1 suffices for E[L(k) L(k+h)]).
    mode 'tightness': one nilpotent mark of order 4 with level k weighted by
    u and level k+h by 1/u, so the x^n coefficient is
    E-numerators of binomials C(L(k) - L(k+h), j), j <= 4.
    """
    if k < 0 or h < 0:
        raise UsageError("two_level_series requires k, h >= 0")
    if mode == "full":
        cap = min(N, u_cap) if u_cap else N
        spec = MarkSpec((cap, cap), ("u", "u"))
        mark1 = MarkPoly.var(spec, 0, 1)
        mark2 = MarkPoly.var(spec, 1, 1)
    elif mode == "moments":
        spec = MarkSpec((order, order), ("eps", "eps"))
        mark1 = MarkPoly.var(spec, 0, 1)
        mark2 = MarkPoly.var(spec, 1, 1)
    elif mode == "tightness":
        spec = MarkSpec((4,), ("eps",))
        mark1 = MarkPoly.var(spec, 0, 1)
        mark2 = MarkPoly.var(spec, 0, -1)
    else:
        raise UsageError(f"unknown mode {mode!r}")
    if h == 0:
        # both marks sit on the same level: one marking variable u1 u2
        base = _base_level_series(d, N, spec, mark1 * mark2)
    else:
        inner = None
        prev = None
        for kk, s in level_series_progression(d, h, N, spec, mark2):
            if kk == h - 1:
                prev = s
            inner = s
        base = _base_level_series(d, N, spec, mark1, inner=inner, z_base=prev)
    cur = base
    for _ in range(k):
        cur = _level_step(cur)
    return cur


def two_level_series_progression(d, k_max, h, N, mode="full", order=2, u_cap=None):
    """Yield (k, y_{k,h}) for k = 0..k_max, reusing each level for the next."""
    first = two_level_series(d, 0, h, N, mode=mode, order=order, u_cap=u_cap)
    yield 0, first
    cur = first
    for k in range(1, k_max + 1):
        cur = _level_step(cur)
        yield k, cur


def mixed_degree_series(d1, d2, k, N, mode="full", order=1, u_cap=None):
    """Joint marked series for degrees d1 and d2 on the same level k.

    Base case: y + (u-1) x Z_{d1-1}(y(x), ...) + (v-1) x Z_{d2-1}(y(x), ...),
    then the usual exp recurrence.  The nilpotent mode is the independent
    cross-check of mixed_gamma_series: E[X^{(d1)} X^{(d2)}] is the (1,1)
    eps-coefficient over y_n.
    """
    if d1 == d2:
        raise UsageError("mixed-degree series needs distinct degrees")
    if mode == "full":
        cap = min(N, u_cap) if u_cap else N
        spec = MarkSpec((cap, cap), ("u", "u"))
    elif mode == "moments":
        spec = MarkSpec((order, order), ("eps", "eps"))
    else:
        raise UsageError(f"unknown mode {mode!r}")
    mark1 = MarkPoly.var(spec, 0, 1)
    mark2 = MarkPoly.var(spec, 1, 1)
    one = MarkPoly.const(spec, 1)
    y = _as_marked(tree_series(N), spec)
    z1 = multiset_cap_series(d1, N, base=y)
    z2 = multiset_cap_series(d2, N, base=y)
    cur = y + z1 * (mark1 - one) + z2 * (mark2 - one)
    for _ in range(k):
        cur = _level_step(cur)
    return cur


def mixed_degree_moment_from_marked(n, d1, d2, k, N=None):
    """E[X^{(d1)}(k) X^{(d2)}(k)] via the nilpotent two-variable marking."""
    N = N if N is not None else n
    s = mixed_degree_series(d1, d2, k, N, mode="moments", order=1)
    yn = tree_series(N)[n]
    return Fraction(s[n].coefficient(1, 1), yn)


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileDistribution:
    n: int
    d: object
    k: int
    probs: dict  # count l -> exact Fraction

    def mean(self):
        return sum(l * p for l, p in self.probs.items())

    def second_factorial(self):
        return sum(l * (l - 1) * p for l, p in self.probs.items())


def exact_distribution(n, d, k, series=None, N=None):
    """P(L_n^{(d)}(k) = l) as exact rationals (probabilities sum to 1)."""
    N = N if N is not None else n
    if n > N:
        raise UsageError("n exceeds the series truncation order")
    if series is None:
        series = level_degree_series(d, k, N, mode="full")
    yn = tree_series(N)[n]
    poly = series[n]
    probs = {}
    for (l,), v in poly.monomials():
        probs[l] = Fraction(v, yn)
    total = sum(probs.values())
    if total != 1:
        raise AssertionError("distribution does not sum to 1")
    return ProfileDistribution(n, d, k, probs)


def joint_distribution(n, d, k, h, series=None, N=None):
    """P(L(k) = l1, L(k+h) = l2) as exact rationals."""
    N = N if N is not None else n
    if n > N:
        raise UsageError("n exceeds the series truncation order")
    if series is None:
        series = two_level_series(d, k, h, N, mode="full")
    yn = tree_series(N)[n]
    probs = {}
    for (l1, l2), v in series[n].monomials():
        probs[(l1, l2)] = Fraction(v, yn)
    if sum(probs.values()) != 1:
        raise AssertionError("joint distribution does not sum to 1")
    return probs


# ---------------------------------------------------------------------------
# derivative-recurrence route
# ---------------------------------------------------------------------------

def _gamma0(d, N, ring=EXACT, scale=1.0):
    """gamma_0^{(d)} = x Z_{d-1}(y(x), ..., y(x^{d-1})), integer coefficients.

    For the total profile gamma_0 = y (every tree has one root at level 0).
    """
    if d is TOTAL:
        return tree_series(N, ring, scale)
    g = multiset_cap_series(d, N)
    ints = []
    for c in g.coeffs:
        f = Fraction(c)
        assert f.denominator == 1, "root-degree series must be integral"
        ints.append(int(f))
    out = TruncatedSeries(ints, N, EXACT)
    if ring == DOUBLE:
        out = out.to_double(scale)
    return out


def _sub_sum(g, weight=None):
    """sum_{i>=2} w(i) g(x^i); weight=None means w(i)=1."""
    N = g.order
    acc = None
    for i in range(2, N + 1):
        s = g.substitute_power(i)
        nonzero = s.coeffs.any() if g.ring == DOUBLE else any(s.coeffs)
        if not nonzero:
            if i > 2:
                break
            s = s  # keep scanning: valuation can skip i=2 when g starts deep
        term = s if weight is None else s * weight(i)
        acc = term if acc is None else acc + term
    return acc if acc is not None else TruncatedSeries.zero(N, g.ring, g.scale)


def gamma_series(d, k, N, ring=EXACT, scale=1.0):
    """First-derivative series: E L_n^{(d)}(k) = [x^n] gamma / y_n."""
    y = tree_series(N, ring, scale)
    g = _gamma0(d, N, ring, scale)
    for _ in range(k):
        g = y * (g + _sub_sum(g))
    return g


def gamma_series_progression(d, k_max, N, ring=EXACT, scale=1.0):
    y = tree_series(N, ring, scale)
    g = _gamma0(d, N, ring, scale)
    yield 0, g
    for k in range(1, k_max + 1):
        g = y * (g + _sub_sum(g))
        yield k, g


def second_factorial_series(d, k, N, ring=EXACT, scale=1.0):
    """Series of E[X(X-1)] numerators for X = L_n^{(d)}(k)."""
    y = tree_series(N, ring, scale)
    g = _gamma0(d, N, ring, scale)
    g2 = TruncatedSeries.zero(N, ring, scale)
    for _ in range(k):
        S = g + _sub_sum(g)
        g2 = y * (S * S + g2 + _sub_sum(g2, lambda i: i) + _sub_sum(g, lambda i: i - 1))
        g = y * S
    return g2


def mixed_gamma_series(d1, d2, k, N, ring=EXACT, scale=1.0):
    """Series of E[X^{(d1)} X^{(d2)}] numerators (same level k), d1 != d2."""
    if d1 == d2:
        raise UsageError("mixed series needs distinct degrees; use the variance path")
    y = tree_series(N, ring, scale)
    g1 = _gamma0(d1, N, ring, scale)
    g2 = _gamma0(d2, N, ring, scale)
    gt = TruncatedSeries.zero(N, ring, scale)
    for _ in range(k):
        S1 = g1 + _sub_sum(g1)
        S2 = g2 + _sub_sum(g2)
        gt = y * (S1 * S2 + gt + _sub_sum(gt, lambda i: i))
        g1 = y * S1
        g2 = y * S2
    return gt


# ---------------------------------------------------------------------------
# moments and covariance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentTable:
    n: int
    d1: object
    d2: object
    k: int
    mean1: object
    mean2: object
    second_factorial1: object
    second_factorial2: object
    mixed: object
    var1: object
    var2: object
    covariance: object
    correlation: object  # float, or None when a variance vanishes


def level_mean(d, n, k, ring=EXACT, scale=1.0):
    g = gamma_series(d, k, n, ring, scale)
    y = tree_series(n, ring, scale)
    if ring == DOUBLE:
        return g[n] / y[n]
    return Fraction(g[n], y[n])


def finite_covariance(d1, d2, n, k, ring=EXACT, scale=1.0):
    """Exact (or double-ring) covariance table for X^{(d1)}(k), X^{(d2)}(k)."""
    y = tree_series(n, ring, scale)
    yn = y[n]

    def ratio(series):
        v = series[n]
        return v / yn if ring == DOUBLE else Fraction(v, yn)

    m1 = ratio(gamma_series(d1, k, n, ring, scale))
    f1 = ratio(second_factorial_series(d1, k, n, ring, scale))
    var1 = f1 + m1 - m1 * m1
    if d1 == d2:
        m2, f2, var2, mixed = m1, f1, var1, f1 + m1  # E[X^2]
        cov = var1
    else:
        m2 = ratio(gamma_series(d2, k, n, ring, scale))
        f2 = ratio(second_factorial_series(d2, k, n, ring, scale))
        var2 = f2 + m2 - m2 * m2
        mixed = ratio(mixed_gamma_series(d1, d2, k, n, ring, scale))
        cov = mixed - m1 * m2
    if var1 > 0 and var2 > 0:
        corr = float(cov) / sqrt(float(var1) * float(var2))
    else:
        corr = None
    return MomentTable(
        n=n, d1=d1, d2=d2, k=k,
        mean1=m1, mean2=m2,
        second_factorial1=f1, second_factorial2=f2,
        mixed=mixed, var1=var1, var2=var2,
        covariance=cov, correlation=corr,
    )


def factorial_moments_from_marked(n, d, k, order=2, N=None):
    """Factorial moments E[X^(j)] via the nilpotent marking route, j = 0..order."""
    N = N if N is not None else n
    s = level_degree_series(d, k, N, mode="moments", order=order)
    yn = tree_series(N)[n]
    poly = s[n]
    out = []
    fact = 1
    for j in range(order + 1):
        if j:
            fact *= j
        out.append(Fraction(poly.coefficient(j) * fact, yn))
    return out


def mixed_moment_from_marked(n, d, k, h, N=None):
    """E[L(k) L(k+h)] via the two-variable nilpotent marking route."""
    N = N if N is not None else n
    s = two_level_series(d, k, h, N, mode="moments", order=1)
    yn = tree_series(N)[n]
    return Fraction(s[n].coefficient(1, 1), yn)


_STIRLING_WEIGHTS = {1: (1,), 2: (1, 2), 3: (1, 6, 6), 4: (1, 14, 36, 24)}


def level_difference_moment(n, r, h, N=None, power=4, d=TOTAL):
    """E[(L(r) - L(r+h))^power] for power in {1,2,3,4}, exact rationals.

    Works through the u / 1/u two-level marking: the eps-coefficients are
    E[C(Delta, j)] and Delta^p = sum_j S(p,j) j! C(Delta,j) (Stirling numbers
    of the second kind; the identity is polynomial so negative Delta is fine).
    """
    if power not in _STIRLING_WEIGHTS:
        raise UsageError("power must be in 1..4")
    N = N if N is not None else n
    s = two_level_series(d, r, h, N, mode="tightness")
    yn = tree_series(N)[n]
    poly = s[n]
    cs = [Fraction(poly.coefficient(j), yn) for j in range(5)]
    weights = _STIRLING_WEIGHTS[power]
    return sum(w * cs[j + 1] for j, w in enumerate(weights))


# ---------------------------------------------------------------------------
# helpers used by the limit/Monte-Carlo comparisons
# ---------------------------------------------------------------------------

def scaled_level_mean(d, n, kappa, scale):
    """E l_n^{(d)}(kappa) = E L_n^{(d)}(floor(kappa sqrt(n))) / sqrt(n), double ring."""
    k = int(kappa * sqrt(n))
    return level_mean(d, n, k, ring=DOUBLE, scale=scale) / sqrt(n)


def level_grid_for(n):
    """The (r, h) tightness grid used in acceptance runs."""
    rt = isqrt(n)
    return [0, rt, 2 * rt], [1, max(rt // 2, 1), rt]
