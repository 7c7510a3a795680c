"""Uniform random generation of unlabelled rooted trees and profile statistics.

The sampler is the classical recursive decomposition driven by the
Euler-transform identity

    (n-1) y_n = sum_{j d <= n-1} d y_d y_{n-jd}:

pick (j, d) with probability d y_d y_{n-jd} / ((n-1) y_n), sample a tree T'
of size n - jd and one tree D of size d, and attach j identical copies of D
to the root of T'.  Induction gives a uniform isomorphism class of size n.
Selection walks exact big-integer cumulative weights (no floating point), so
uniformity is exact; the walk is ordered j = 1, d descending, which covers
the probability mass in O(sqrt(n)) expected steps.

Profile statistics use the planted degree convention (degree = 1 + number of
children, root included) and level 0 at the root, matching the exact series
in :mod:`polyaprofile.profile`.
"""

from __future__ import annotations

import hashlib
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .enumeration import CountTable, count_trees
from .errors import UsageError

_MEMO_CUTOFF = 64  # sizes with a precomputed cumulative selection table


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyaTree:
    """Flat tree: parent[i] < i for i >= 1, parent[0] = -1."""

    parent: tuple
    child_count: tuple

    @property
    def n(self):
        return len(self.parent)

    @classmethod
    def from_shape(cls, shape):
        parent = [-1]
        child_count = [len(shape)]
        stack = [(c, 0) for c in reversed(shape)]
        while stack:
            t, p = stack.pop()
            idx = len(parent)
            parent.append(p)
            child_count.append(len(t))
            stack.extend((c, idx) for c in reversed(t))
        return cls(tuple(parent), tuple(child_count))

    def levels(self):
        """level[i] = distance from the root (parents precede children)."""
        lev = np.zeros(self.n, dtype=np.int64)
        par = self.parent
        for i in range(1, self.n):
            lev[i] = lev[par[i]] + 1
        return lev

    def degrees(self):
        return np.asarray(self.child_count, dtype=np.int64) + 1


def canonical_key(shape):
    """Canonical hashable key of a nested-tuple tree (children sorted)."""
    return tuple(sorted(canonical_key(c) for c in shape))


@dataclass(frozen=True)
class ProfileSample:
    """Per-level totals and per-degree counts for one tree."""

    n: int
    level_counts: np.ndarray          # L(k), k = 0..height
    degree_level_counts: np.ndarray   # [d-1, k] for d = 1..d_max
    d_max: int

    @property
    def height(self):
        return len(self.level_counts) - 1

    def total(self, k):
        return int(self.level_counts[k]) if 0 <= k <= self.height else 0

    def degree_count(self, d, k):
        if 1 <= d <= self.d_max and 0 <= k <= self.height:
            return int(self.degree_level_counts[d - 1, k])
        return 0


def extract_profile(tree, d_max):
    """BFS level decomposition with per-degree counts (degree = children + 1)."""
    lev = tree.levels()
    deg = tree.degrees()
    height = int(lev.max()) if tree.n else 0
    level_counts = np.bincount(lev, minlength=height + 1)
    dl = np.zeros((d_max, height + 1), dtype=np.int64)
    mask = deg <= d_max
    if mask.any():
        flat = (deg[mask] - 1) * (height + 1) + lev[mask]
        counts = np.bincount(flat, minlength=d_max * (height + 1))
        dl = counts.reshape(d_max, height + 1)
    return ProfileSample(tree.n, level_counts, dl, d_max)


# ---------------------------------------------------------------------------
# sampler
# ---------------------------------------------------------------------------

class TreeSampler:
    """Exact-size uniform sampler over isomorphism classes."""

    def __init__(self, table: CountTable):
        self.table = table
        self.y = table.y
        self._dy = tuple(i * v for i, v in enumerate(table.y))
        self._memo = {}

    def _selection_table(self, n):
        tab = self._memo.get(n)
        if tab is None:
            cums = []
            pairs = []
            acc = 0
            for j in range(1, n):
                top = (n - 1) // j
                if top < 1:
                    break
                for d in range(top, 0, -1):
                    acc += int(self._dy[d] * self.y[n - j * d])
                    cums.append(acc)
                    pairs.append((j, d))
            tab = (cums, pairs)
            self._memo[n] = tab
        return tab

    def _choose(self, n, rng):
        total = (n - 1) * self.y[n]
        R = rng.randrange(int(total))
        if n <= _MEMO_CUTOFF:
            cums, pairs = self._selection_table(n)
            return pairs[bisect_right(cums, R)]
        acc = 0
        y = self.y
        dy = self._dy
        for j in range(1, n):
            top = (n - 1) // j
            if top < 1:
                break
            for d in range(top, 0, -1):
                acc += dy[d] * y[n - j * d]
                if R < acc:
                    return j, d
        raise AssertionError("selection walk exhausted the weight total")

    def sample_shape(self, n, rng):
        """Nested-tuple tree of exactly n nodes, uniform over classes."""
        if n < 1 or n > self.table.n_max:
            raise UsageError(f"size {n} outside the count table (<= {self.table.n_max})")
        # frame: [remaining, children, pending_copies]; the recursive chain
        # T(n) = T(n - jd) + j copies of D(d) always attaches to the same
        # root, so a frame collects subtree samples until remaining == 1.
        stack = [[n, [], 0]]
        done = None
        while stack:
            frame = stack[-1]
            if done is not None:
                frame[1].extend([done] * frame[2])
                done = None
            if frame[0] == 1:
                done = tuple(frame[1])
                stack.pop()
                continue
            j, d = self._choose(frame[0], rng)
            frame[0] -= j * d
            frame[2] = j
            stack.append([d, [], 0])
        return done

    def sample_tree(self, n, rng):
        return PolyaTree.from_shape(self.sample_shape(n, rng))


def sample_tree(n, rng, table=None, cache_dir=None):
    """One uniform tree of size n (convenience wrapper)."""
    if table is None:
        table = count_trees(n, cache_dir=cache_dir)
    return TreeSampler(table).sample_tree(n, rng)


def derive_rng(seed, stream_index):
    """Independent deterministic stream for (seed, worker index)."""
    digest = hashlib.sha256(f"{seed}:{stream_index}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloSpec:
    n: int
    degrees: tuple = (1, 2)
    kappas: tuple = (0.5, 1.0)
    t_values: tuple = ()
    samples: int = 1000
    seed: int = 0
    tightness_grid: tuple = ()  # ((r...), (h...)) or () to skip
    d_max_totals: int = 0       # accumulate total degree-d counts for d <= this
    chunks: int = 16            # fixed chunk count keeps results thread-invariant

    def level_of(self, kappa):
        return int(kappa * math.sqrt(self.n))


class _Accumulator:
    def __init__(self, spec):
        self.spec = spec
        self.count = 0
        g = {}
        for d in spec.degrees:
            for kap in spec.kappas:
                g[("m", d, kap)] = 0.0
                g[("m2", d, kap)] = 0.0
                for t in spec.t_values:
                    g[("cos", d, kap, t)] = 0.0
                    g[("sin", d, kap, t)] = 0.0
        for i, d1 in enumerate(spec.degrees):
            for d2 in spec.degrees[i + 1 :]:
                for kap in spec.kappas:
                    g[("xy", d1, d2, kap)] = 0.0
        if spec.tightness_grid:
            rs, hs = spec.tightness_grid
            for r in rs:
                for h in hs:
                    g[("t4", r, h)] = 0.0
                    g[("t8", r, h)] = 0.0
        for d in range(1, spec.d_max_totals + 1):
            g[("tot", d)] = 0.0
            g[("tot2", d)] = 0.0
        self.g = g

    def add_tree(self, profile):
        spec = self.spec
        g = self.g
        self.count += 1
        sq = math.sqrt(spec.n)
        for kap in spec.kappas:
            k = spec.level_of(kap)
            vals = {}
            for d in spec.degrees:
                v = profile.degree_count(d, k) / sq
                vals[d] = v
                g[("m", d, kap)] += v
                g[("m2", d, kap)] += v * v
                for t in spec.t_values:
                    g[("cos", d, kap, t)] += math.cos(t * v)
                    g[("sin", d, kap, t)] += math.sin(t * v)
            for i, d1 in enumerate(spec.degrees):
                for d2 in spec.degrees[i + 1 :]:
                    g[("xy", d1, d2, kap)] += vals[d1] * vals[d2]
        if spec.tightness_grid:
            rs, hs = spec.tightness_grid
            for r in rs:
                for h in hs:
                    delta = profile.total(r) - profile.total(r + h)
                    w = float(delta) ** 4
                    g[("t4", r, h)] += w
                    g[("t8", r, h)] += w * w
        for d in range(1, spec.d_max_totals + 1):
            tot = float(profile.degree_level_counts[d - 1].sum())
            g[("tot", d)] += tot
            g[("tot2", d)] += tot * tot

    def merge(self, other):
        self.count += other.count
        for key, v in other.g.items():
            self.g[key] += v


@dataclass(frozen=True)
class MonteCarloResult:
    spec: MonteCarloSpec
    count: int
    sums: dict = field(repr=False)

    def _mean_se(self, key_m, key_m2):
        S = self.count
        m = self.sums[key_m] / S
        var = max(self.sums[key_m2] / S - m * m, 0.0)
        return m, math.sqrt(var / S)

    def mean(self, d, kappa):
        """(estimate, stderr) of E l_n^{(d)}(kappa)."""
        return self._mean_se(("m", d, kappa), ("m2", d, kappa))

    def variance(self, d, kappa):
        S = self.count
        m = self.sums[("m", d, kappa)] / S
        return max(self.sums[("m2", d, kappa)] / S - m * m, 0.0)

    def covariance(self, d1, d2, kappa):
        S = self.count
        m1 = self.sums[("m", d1, kappa)] / S
        m2 = self.sums[("m", d2, kappa)] / S
        return self.sums[("xy", d1, d2, kappa)] / S - m1 * m2

    def char_function(self, d, kappa, t):
        """(complex estimate, stderr) of E exp(i t l_n^{(d)}(kappa))."""
        S = self.count
        re = self.sums[("cos", d, kappa, t)] / S
        im = self.sums[("sin", d, kappa, t)] / S
        # each component bounded by 1; conservative componentwise stderr
        se = math.sqrt((1.0 - re * re) / S) + math.sqrt((1.0 - im * im) / S)
        return complex(re, im), se

    def tightness_ratio(self, r, h):
        """(estimate, stderr) of E(L(r) - L(r+h))^4 / (h^2 n)."""
        S = self.count
        m, se = self._mean_se(("t4", r, h), ("t8", r, h))
        scale = h * h * self.spec.n
        return m / scale, se / scale

    def tightness_max(self):
        rs, hs = self.spec.tightness_grid
        best = None
        for r in rs:
            for h in hs:
                est, se = self.tightness_ratio(r, h)
                if best is None or est > best[0]:
                    best = (est, se, r, h)
        return best

    def degree_total(self, d):
        """(estimate, stderr) of E X_n^{(d)} (total degree-d vertices)."""
        return self._mean_se(("tot", d), ("tot2", d))

    def rows(self):
        """Flat rows for CSV output: one per estimated quantity."""
        out = []
        for d in self.spec.degrees:
            for kap in self.spec.kappas:
                est, se = self.mean(d, kap)
                out.append(
                    {"kind": "mean", "n": self.spec.n, "d": d, "kappa": kap,
                     "t": "", "r": "", "h": "", "estimate": est, "stderr": se,
                     "samples": self.count}
                )
                for t in self.spec.t_values:
                    z, se = self.char_function(d, kap, t)
                    out.append(
                        {"kind": "ecf_re", "n": self.spec.n, "d": d, "kappa": kap,
                         "t": t, "r": "", "h": "", "estimate": z.real,
                         "stderr": se, "samples": self.count}
                    )
                    out.append(
                        {"kind": "ecf_im", "n": self.spec.n, "d": d, "kappa": kap,
                         "t": t, "r": "", "h": "", "estimate": z.imag,
                         "stderr": se, "samples": self.count}
                    )
        if self.spec.tightness_grid:
            rs, hs = self.spec.tightness_grid
            for r in rs:
                for h in hs:
                    est, se = self.tightness_ratio(r, h)
                    out.append(
                        {"kind": "tightness", "n": self.spec.n, "d": "", "kappa": "",
                         "t": "", "r": r, "h": h, "estimate": est, "stderr": se,
                         "samples": self.count}
                    )
        for d in range(1, self.spec.d_max_totals + 1):
            est, se = self.degree_total(d)
            out.append(
                {"kind": "degree_total", "n": self.spec.n, "d": d, "kappa": "",
                 "t": "", "r": "", "h": "", "estimate": est, "stderr": se,
                 "samples": self.count}
            )
        return out


def _chunk_sizes(total, chunks):
    base = total // chunks
    sizes = [base + (1 if c < total % chunks else 0) for c in range(chunks)]
    return [s for s in sizes if s > 0]


def _run_chunk(sampler, spec, chunk_index, chunk_size):
    rng = derive_rng(spec.seed, chunk_index)
    acc = _Accumulator(spec)
    d_max = max(
        [*spec.degrees, spec.d_max_totals] if spec.degrees or spec.d_max_totals else [1]
    )
    for _ in range(chunk_size):
        tree = sampler.sample_tree(spec.n, rng)
        acc.add_tree(extract_profile(tree, max(d_max, 1)))
    return acc


_FORK_STATE = {}


def _forked_chunk(args):
    chunk_index, chunk_size = args
    sampler, spec = _FORK_STATE["sampler"], _FORK_STATE["spec"]
    acc = _run_chunk(sampler, spec, chunk_index, chunk_size)
    return acc.count, acc.g


def monte_carlo(spec, table=None, threads=1, cache_dir=None):
    """Run the experiment; deterministic for a fixed seed and any thread count.

    Work is split into ``spec.chunks`` independent streams derived from
    (seed, chunk index); results are merged in chunk order, so the estimates
    do not depend on how chunks are scheduled.
    """
    if spec.samples < 1:
        raise UsageError("samples must be >= 1")
    if table is None:
        table = count_trees(spec.n, cache_dir=cache_dir)
    sampler = TreeSampler(table)
    sizes = _chunk_sizes(spec.samples, spec.chunks)
    total = _Accumulator(spec)
    if threads > 1:
        import multiprocessing as mp

        try:
            ctx = mp.get_context("fork")
        except ValueError:
            ctx = None
        if ctx is not None:
            _FORK_STATE["sampler"] = sampler
            _FORK_STATE["spec"] = spec
            try:
                with ctx.Pool(min(threads, len(sizes))) as pool:
                    parts = pool.map(_forked_chunk, list(enumerate(sizes)))
            finally:
                _FORK_STATE.clear()
            for cnt, g in parts:
                total.count += cnt
                for key, v in g.items():
                    total.g[key] += v
            return MonteCarloResult(spec, total.count, total.g)
    for idx, size in enumerate(sizes):
        total.merge(_run_chunk(sampler, spec, idx, size))
    return MonteCarloResult(spec, total.count, total.g)


# ---------------------------------------------------------------------------
# uniformity diagnostics
# ---------------------------------------------------------------------------

def sample_class_counts(n, samples, rng, table=None):
    """Histogram of canonical isomorphism classes over many samples."""
    if table is None:
        table = count_trees(n)
    sampler = TreeSampler(table)
    counts = {}
    for _ in range(samples):
        key = canonical_key(sampler.sample_shape(n, rng))
        counts[key] = counts.get(key, 0) + 1
    return counts


def chi_square_uniform(counts, n_classes, samples):
    """(statistic, dof, p_value) against the uniform distribution."""
    from scipy.stats import chi2

    expected = samples / n_classes
    stat = sum((c - expected) ** 2 for c in counts.values()) / expected
    stat += expected * (n_classes - len(counts))  # classes never observed
    dof = n_classes - 1
    return stat, dof, float(chi2.sf(stat, dof))
