import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergomet.measures import (
    Bernoulli,
    Markov,
    bernoulli,
    block_distribution,
    empirical_measure,
    periodic,
    symmetric_markov,
)
from ergomet.orbit import (
    CHUNK,
    CoupledSource,
    CouplingRule,
    besicovitch,
    besicovitch_density,
    mismatch_offsets,
    quasigeneric_check,
    sample_coupled,
    sample_generic,
)
from ergomet.symbolic import (
    Point,
    Subsequence,
    cantor_values,
    finite_point,
    mechanical_point,
    periodic_point,
    shift,
)

from oracles import besicovitch_direct, cantor_direct, density_scan

short_words = st.lists(st.integers(0, 1), min_size=1, max_size=6)


def disagreement(p, q, n):
    return float(np.mean(p.window(0, n) != q.window(0, n)))


class TestBesicovitchExamples:
    def test_identical(self):
        p = mechanical_point(Fraction(2, 7))
        assert besicovitch(p, p, horizon=500).value == 0.0
        assert besicovitch_density(p, p, horizon=500).value == 0.0

    def test_alternating(self):
        p, q = periodic_point([0, 1]), periodic_point([1, 0])
        assert besicovitch(p, q, Subsequence.stride(2), 1000).value == 1.0

    @pytest.mark.parametrize("horizon", [3, 300, 3000])
    def test_period_three(self, horizon):
        p, q = periodic_point([0]), periodic_point([1, 0, 0])
        ns = Subsequence.stride(3)
        assert besicovitch(p, q, ns, horizon).value == 7 / 12
        assert besicovitch_density(p, q, ns, horizon).value == 0.5

    def test_empty_subsequence(self):
        p = periodic_point([0, 1])
        with pytest.raises(ValueError, match="no n_k"):
            besicovitch(p, p, Subsequence.explicit([50]), 10)

    def test_trace(self):
        p, q = periodic_point([0]), periodic_point([1, 0, 0])
        est = besicovitch(p, q, Subsequence.geometric(3), 81)
        assert [n for n, _ in est.rows()] == [3, 9, 27, 81]
        assert est.value == max(v for _, v in est.rows())


class TestBesicovitchOracle:
    @settings(max_examples=40, deadline=None)
    @given(short_words, short_words, st.lists(st.integers(0, 1), max_size=20), st.integers(1, 12))
    def test_average_matches_direct(self, a, b, prefix, res):
        p = Point(2, periodic_point(a).rule, tuple(prefix))
        q = periodic_point(b)
        H = 60
        d = cantor_direct(p.window(0, H + res - 1).tolist(), q.window(0, H + res - 1).tolist(), res)
        est = besicovitch(p, q, Subsequence.all(), H, res)
        assert est.value == pytest.approx(besicovitch_direct(d, range(1, H + 1)), abs=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(short_words, short_words, st.lists(st.integers(0, 1), max_size=20), st.integers(1, 6))
    def test_density_matches_exhaustive(self, a, b, prefix, res):
        """Candidates: 0, every attained distance, every density i/n; the
        infimum is a candidate that is admissible itself or just above."""
        p = Point(2, periodic_point(a).rule, tuple(prefix))
        q = periodic_point(b)
        H = 30
        d = cantor_direct(p.window(0, H + res - 1).tolist(), q.window(0, H + res - 1).tolist(), res)
        nks = list(range(1, H + 1))
        cands = sorted({0.0, *d, *(i / n for n in nks for i in range(n + 1))})
        nexts = cands[1:] + [2.0]
        expected = None
        for c, nxt in zip(cands, nexts):
            if c > 0 and density_scan(d, nks, [c]) == c:
                expected = c
                break
            mid = (c + nxt) / 2
            if density_scan(d, nks, [mid]) == mid:
                expected = c
                break
        assert besicovitch_density(p, q, Subsequence.all(), H, res).value == pytest.approx(expected, abs=1e-15)

    def test_density_random_set(self):
        rng = np.random.default_rng(5)
        H = 100_000
        flips = (rng.random(H + 63) < 0.1).astype(np.int64)
        p = finite_point(np.zeros(H + 63, dtype=int), 2)
        q = finite_point(flips, 2)
        nks = np.arange(1, H + 1)
        d = cantor_values(mismatch_offsets(p, q, H, 64), 64)
        # F(delta) is constant between attained levels; scan a fine delta grid
        levels = np.unique(d[d > 0])
        F = np.array([np.max(np.cumsum(d >= u)[nks - 1] / nks) for u in levels])
        grid = np.arange(1, 100_001) / 100_000
        idx = np.searchsorted(levels, grid, side="left")
        Fgrid = np.where(idx < levels.size, F[np.minimum(idx, levels.size - 1)], 0.0)
        oracle = grid[np.argmax(Fgrid < grid)]
        est = besicovitch_density(p, q, Subsequence.all(), H).value
        assert abs(est - oracle) <= 1e-5


class TestBesicovitchProperties:
    @settings(max_examples=30, deadline=None)
    @given(short_words, short_words, short_words)
    def test_pseudometric(self, a, b, c):
        x, y, z = periodic_point(a), periodic_point(b), periodic_point(c)
        H = 200
        dxy = besicovitch(x, y, horizon=H).value
        assert dxy == besicovitch(y, x, horizon=H).value
        assert dxy <= besicovitch(x, z, horizon=H).value + besicovitch(z, y, horizon=H).value + 1e-12

    @settings(max_examples=30, deadline=None)
    @given(short_words, short_words, st.lists(st.integers(0, 1), max_size=10))
    def test_shift_invariance(self, a, b, prefix):
        x = Point(2, periodic_point(a).rule, tuple(prefix))
        y = periodic_point(b)
        H = 500
        ns = Subsequence.stride(50)
        lhs = besicovitch(x, y, ns, H).value
        rhs = besicovitch(shift(x, 1), shift(y, 1), ns, H).value
        assert abs(lhs - rhs) <= 2 / 50 + 1e-12

    @settings(max_examples=30, deadline=None)
    @given(short_words, short_words)
    def test_dominates_hamming(self, a, b):
        x, y = periodic_point(a), periodic_point(b)
        H = 300
        est = besicovitch(x, y, Subsequence.all(), H)
        assert np.all(est.trace[-1] >= disagreement(x, y, H) - 1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5))
    def test_envelope(self, seed, rate):
        H = 2000
        x, y = sample_coupled([bernoulli(0.5), bernoulli(0.5 + rate)], "monotone", seed, H + 64)
        avg = besicovitch(x, y, horizon=H).value
        dens = besicovitch_density(x, y, horizon=H).value
        assert dens ** 2 <= avg + 10 / H
        assert avg <= 2 * dens + 10 / H


class TestSamplers:
    def test_periodic_is_orbit_point(self):
        p = sample_generic(periodic("011"), 0, 10)
        assert p == periodic_point([0, 1, 1])

    @pytest.mark.parametrize("m, seed", [(bernoulli(0.5), 1), (symmetric_markov(0.9), 2)])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_generic(self, m, seed, k):
        p = sample_generic(m, seed, 100_000)
        assert quasigeneric_check(p, m, Subsequence.geometric(2), 100_000, k, 0.02).verdict

    @pytest.mark.parametrize("m", [bernoulli(0.3), Bernoulli((0.2, 0.3, 0.5)), symmetric_markov(0.8)])
    def test_empirical_convergence_rate(self, m):
        n = 100_000
        p = sample_generic(m, 4, n + 3)
        for k in (1, 2, 3):
            tv = empirical_measure(p, n, k).tv(block_distribution(m, k))
            assert tv <= 5 * np.sqrt(m.alphabet ** k / n)

    def test_reducible_rejected(self):
        with pytest.raises(ValueError, match="not ergodic"):
            sample_generic(Markov(((1.0, 0.0), (0.0, 1.0)), (0.5, 0.5)), 0, 10)

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError, match="alphabet mismatch"):
            sample_coupled([bernoulli(0.5), Bernoulli((0.2, 0.3, 0.5))], "independent", 0, 10)

    def test_seeded(self):
        a = sample_generic(symmetric_markov(0.7), 9, 1000).window(0, 1000)
        b = sample_generic(symmetric_markov(0.7), 9, 1000).window(0, 1000)
        c = sample_generic(symmetric_markov(0.7), 10, 1000).window(0, 1000)
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    @pytest.mark.parametrize("m", [bernoulli(0.4), symmetric_markov(0.9)])
    def test_random_access_across_windows(self, m):
        seq = CoupledSource((m,), "independent", 3).window(0, 0, 3 * CHUNK)
        late = CoupledSource((m,), "independent", 3).window(0, 2 * CHUNK - 7, 2 * CHUNK + 9)
        assert np.array_equal(late, seq[2 * CHUNK - 7: 2 * CHUNK + 9])

    def test_point_json_roundtrip(self):
        x, y = sample_coupled([symmetric_markov(0.9), symmetric_markov(0.8)], "maximal-per-step", 6, 100)
        y2 = Point.from_json(json.loads(json.dumps(y.to_json())))
        assert np.array_equal(y.window(0, 5000), y2.window(0, 5000))


class TestCouplings:
    def test_monotone_rate(self):
        x, y = sample_coupled([bernoulli(0.5), bernoulli(0.6)], "monotone", 0, 100_000)
        assert abs(disagreement(x, y, 100_000) - 0.1) <= 0.01
        wx, wy = x.window(0, 100_000), y.window(0, 100_000)
        assert np.all(wx <= wy)

    def test_independent_self(self):
        m = Bernoulli((0.2, 0.3, 0.5))
        x, y = sample_coupled([m, m], "independent", 1, 100_000)
        expected = sum(p * (1 - p) for p in m.probs)
        assert abs(disagreement(x, y, 100_000) - expected) <= 0.01

    @pytest.mark.parametrize("m", [bernoulli(0.3), symmetric_markov(0.9)])
    def test_maximal_self_identical(self, m):
        x, y = sample_coupled([m, m], "maximal-per-step", 2, 50_000)
        assert disagreement(x, y, 50_000) == 0.0

    def test_maximal_bernoulli_tv(self):
        x, y = sample_coupled([bernoulli(0.2), bernoulli(0.7)], "maximal-per-step", 3, 100_000)
        assert abs(disagreement(x, y, 100_000) - 0.5) <= 0.01

    @pytest.mark.parametrize("rule", list(CouplingRule))
    def test_marginals_generic(self, rule):
        specs = [symmetric_markov(0.9), symmetric_markov(0.6), bernoulli(0.5)]
        pts = sample_coupled(specs, rule, 8, 100_000)
        for p, m in zip(pts, specs):
            assert quasigeneric_check(p, m, Subsequence.geometric(2), 100_000, 2, 0.02).verdict


class TestGenericity:
    def test_periodic_exact(self):
        rep = quasigeneric_check(periodic_point([0, 1]), periodic("01"), Subsequence.stride(2), 100, 2, 0.0)
        assert np.all(rep.discrepancies == 0) and rep.verdict

    def test_switching_point_fails(self):
        p = Point(2, periodic_point([1]).rule, prefix=(0,) * 5000)
        rep = quasigeneric_check(p, bernoulli(0.5), Subsequence.geometric(2), 100_000, 2, 0.1)
        assert not rep.verdict

    def test_bernoulli_geometric(self):
        p = sample_generic(bernoulli(0.3), 0, 2**17 + 1)
        rep = quasigeneric_check(p, bernoulli(0.3), Subsequence.geometric(2), 2**17, 2, 0.02)
        assert rep.verdict
        assert np.all((rep.discrepancies >= 0) & (rep.discrepancies <= 1))
