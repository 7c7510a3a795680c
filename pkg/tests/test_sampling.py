import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyaprofile.enumeration import count_trees, degree_series, tree_series
from polyaprofile.errors import UsageError
from polyaprofile.profile import level_grid_for
from polyaprofile.sampling import (
    MonteCarloSpec,
    PolyaTree,
    TreeSampler,
    canonical_key,
    chi_square_uniform,
    derive_rng,
    extract_profile,
    monte_carlo,
    sample_class_counts,
)

TABLE_64 = count_trees(64)


def test_size_one_and_two_deterministic():
    s = TreeSampler(TABLE_64)
    rng = derive_rng(0, 0)
    t1 = s.sample_tree(1, rng)
    assert t1.parent == (-1,) and t1.child_count == (0,)
    for _ in range(5):
        t2 = s.sample_tree(2, rng)
        assert t2.parent == (-1, 0)


def test_size_outside_table_rejected():
    s = TreeSampler(TABLE_64)
    with pytest.raises(UsageError):
        s.sample_tree(65, derive_rng(0, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(0, 10**6))
def test_exact_size_and_wellformed(n, seed):
    s = TreeSampler(TABLE_64)
    tree = s.sample_tree(n, derive_rng(seed, 0))
    assert tree.n == n
    # parent indices form a forest rooted at 0 with parents preceding children
    assert tree.parent[0] == -1
    assert all(0 <= tree.parent[i] < i for i in range(1, n))
    # child counts consistent with parents
    counts = [0] * n
    for i in range(1, n):
        counts[tree.parent[i]] += 1
    assert counts == list(tree.child_count)


def test_same_seed_same_stream():
    s = TreeSampler(TABLE_64)
    a = [s.sample_shape(20, derive_rng(123, 5)) for _ in range(10)]
    b = [s.sample_shape(20, derive_rng(123, 5)) for _ in range(10)]
    assert a == b
    c = [s.sample_shape(20, derive_rng(124, 5)) for _ in range(10)]
    assert a != c


def test_profile_single_node():
    prof = extract_profile(PolyaTree.from_shape(()), d_max=3)
    assert prof.total(0) == 1
    assert prof.degree_count(1, 0) == 1


def test_profile_path_of_three():
    prof = extract_profile(PolyaTree.from_shape((((),),)), d_max=3)
    assert prof.degree_count(2, 0) == 1
    assert prof.degree_count(2, 1) == 1
    assert prof.degree_count(1, 2) == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10**6))
def test_profile_partitions_nodes(n, seed):
    s = TreeSampler(TABLE_64)
    tree = s.sample_tree(n, derive_rng(seed, 1))
    prof = extract_profile(tree, d_max=n)
    assert int(prof.level_counts.sum()) == n
    # per level, degree counts partition the level total (d_max = n covers all)
    for k in range(prof.height + 1):
        assert int(prof.degree_level_counts[:, k].sum()) == prof.total(k)


def test_chi_square_uniformity_n5():
    table = count_trees(7)
    rng = derive_rng(31337, 0)
    counts = sample_class_counts(5, 20000, rng, table)
    assert len(counts) == table.y[5] == 9
    stat, dof, p = chi_square_uniform(counts, 9, 20000)
    assert p >= 1e-3


def test_chi_square_detects_bias():
    # a deliberately skewed histogram must fail the same test
    counts = {i: 1000 + (500 if i == 0 else 0) for i in range(9)}
    stat, dof, p = chi_square_uniform(counts, 9, sum(counts.values()))
    assert p < 1e-3


def test_canonical_key_identifies_isomorphic_presentations():
    a = (((),), ())           # root with children: path-2 and leaf
    b = ((), ((),))           # same multiset, different order
    assert canonical_key(a) == canonical_key(b)


# ---------------------------------------------------------------------------
# monte carlo
# ---------------------------------------------------------------------------

def test_monte_carlo_deterministic_and_chunk_invariant():
    spec = MonteCarloSpec(
        n=50, degrees=(1, 2), kappas=(0.5, 1.0), t_values=(0.5,),
        samples=300, seed=99, tightness_grid=level_grid_for(50),
    )
    r1 = monte_carlo(spec, table=TABLE_64)
    r2 = monte_carlo(spec, table=TABLE_64)
    assert r1.sums == r2.sums and r1.count == r2.count == 300


def test_monte_carlo_threads_do_not_change_results():
    spec = MonteCarloSpec(n=40, degrees=(1,), kappas=(1.0,), samples=240, seed=5)
    r1 = monte_carlo(spec, table=TABLE_64, threads=1)
    r4 = monte_carlo(spec, table=TABLE_64, threads=4)
    assert r1.sums == r4.sums


def test_char_function_at_zero_is_one():
    spec = MonteCarloSpec(
        n=30, degrees=(1,), kappas=(1.0,), t_values=(0.0, 0.7), samples=200, seed=3
    )
    r = monte_carlo(spec, table=TABLE_64)
    z, _ = r.char_function(1, 1.0, 0.0)
    assert z == 1.0 + 0.0j
    z2, _ = r.char_function(1, 1.0, 0.7)
    assert abs(z2) <= 1.0


def test_degree_total_bookkeeping_matches_exact(table_400, cache_dir):
    # E X_n^{(d)} at n = 200 within 3 standard errors of d_n^{(d)}/y_n
    n = 200
    spec = MonteCarloSpec(
        n=n, degrees=(1,), kappas=(1.0,), samples=4000, seed=77, d_max_totals=3
    )
    r = monte_carlo(spec, table=table_400)
    y_n = tree_series(n)[n]
    for d in (1, 2, 3):
        est, se = r.degree_total(d)
        exact = float(Fraction(degree_series(d, n).D[n], y_n))
        assert abs(est - exact) <= 3.0 * se


def test_sampled_level_law_matches_exact_distribution():
    # beyond the enumerable range: the empirical law of L_12^{(1)}(2) must
    # match the exact series distribution (chi-square over its support)
    from scipy.stats import chi2

    from polyaprofile.profile import exact_distribution

    n, d, k, S = 12, 1, 2, 20000
    dist = exact_distribution(n, d, k)
    s = TreeSampler(TABLE_64)
    rng = derive_rng(4242, 0)
    observed = {}
    for _ in range(S):
        prof = extract_profile(s.sample_tree(n, rng), d_max=d)
        c = prof.degree_count(d, k)
        observed[c] = observed.get(c, 0) + 1
    # pool cells with tiny expectation into the largest-count cell
    stat = 0.0
    dof = -1
    pooled_obs = 0
    pooled_exp = 0.0
    for l, p in sorted(dist.probs.items()):
        e = float(p) * S
        o = observed.pop(l, 0)
        if e < 10.0:
            pooled_obs += o
            pooled_exp += e
            continue
        stat += (o - e) ** 2 / e
        dof += 1
    if pooled_exp > 0:
        stat += (pooled_obs - pooled_exp) ** 2 / pooled_exp
        dof += 1
    assert not observed  # nothing outside the exact support
    assert float(chi2.sf(stat, dof)) >= 1e-3


def test_mean_matches_exact_small_n():
    # exact series mean at n = 50 within 3 standard errors
    from polyaprofile.profile import level_mean

    n, kappa = 50, 1.0
    k = int(kappa * math.sqrt(n))
    spec = MonteCarloSpec(n=n, degrees=(1,), kappas=(kappa,), samples=6000, seed=11)
    r = monte_carlo(spec, table=TABLE_64)
    est, se = r.mean(1, kappa)
    exact = float(level_mean(1, n, k)) / math.sqrt(n)
    assert abs(est - exact) <= 3.0 * se
