"""Two-sided bounds on the joining metric between shift-invariant measures.

Lower bounds come from exact optimal transport between ``k``-block laws
(any joining restricts to a coupling of its ``k``-block marginals), upper
bounds from explicit stationary couplings sampled along an orbit, and an
entropy-gap lower bound from Fano's inequality.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .measures import (
    Bernoulli,
    BlockDistribution,
    Markov,
    MeasureSpec,
    block_distribution,
    decode,
    entropy_estimate,
    format_word,
)
from .orbit import CouplingRule, mismatch_offsets, sample_coupled, sample_generic
from .symbolic import DEFAULT_RESOLUTION, cantor_values

MAX_WORDS = 4096
PIVOT_TOL = 1e-12
MIN_UPPER_HORIZON = 10_000


class InstanceTooLarge(ValueError):
    pass


def cost_matrix(k: int, alphabet: int, cost: str = "hamming-rate") -> np.ndarray:
    """Pairwise cost between all ``k``-words.

    ``hamming-rate``: fraction of disagreeing positions. ``cantor``:
    ``2^-i`` at the first disagreement ``i``, 0 for equal words.
    """
    n = alphabet ** k
    digits = np.array([decode(c, k, alphabet) for c in range(n)], dtype=np.int64).reshape(n, k)
    neq = digits[:, None, :] != digits[None, :, :]
    if cost == "hamming-rate":
        return neq.sum(axis=2) / k
    if cost == "cantor":
        any_neq = neq.any(axis=2)
        first = np.argmax(neq, axis=2)
        return np.where(any_neq, np.ldexp(1.0, -first), 0.0)
    raise ValueError(f"unknown cost {cost!r}")


def _northwest(supply, demand):
    m, n = len(supply), len(demand)
    s, d = supply.copy(), demand.copy()
    flow = np.zeros((m, n))
    basis = []
    i = j = 0
    while True:
        x = min(s[i], d[j])
        flow[i, j] = x
        basis.append((i, j))
        s[i] -= x
        d[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1 or s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return flow, basis


def _potentials(cost, adj, m, n):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for other in adj[node]:
            if node < m:
                j = other - m
                if np.isnan(v[j]):
                    v[j] = cost[node, j] - u[node]
                    queue.append(other)
            else:
                i = other
                if np.isnan(u[i]):
                    u[i] = cost[i, node - m] - v[node - m]
                    queue.append(other)
    return u, v


def _tree_path(adj, start, goal):
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for other in adj[node]:
            if other not in prev:
                prev[other] = node
                queue.append(other)
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def transportation_simplex(supply, demand, cost, tol: float = PIVOT_TOL, max_iter: int | None = None):
    """Exact minimum-cost transportation plan (MODI / network simplex).

    Starts from the northwest-corner basis and pivots on the most negative
    reduced cost; after a run of degenerate pivots it switches to the
    lowest-index entering rule until progress resumes, which rules out
    cycling. Returns the flow matrix.
    """
    supply = np.asarray(supply, dtype=np.float64)
    demand = np.asarray(demand, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    m, n = cost.shape
    demand = demand * (supply.sum() / demand.sum())
    flow, basis = _northwest(supply, demand)
    adj = [set() for _ in range(m + n)]
    for i, j in basis:
        adj[i].add(m + j)
        adj[m + j].add(i)
    max_iter = max_iter or 50 * (m + n) * max(m, n) + 1000
    degenerate_run = 0
    for _ in range(max_iter):
        u, v = _potentials(cost, adj, m, n)
        reduced = cost - u[:, None] - v[None, :]
        if degenerate_run > m + n:
            neg = np.flatnonzero(reduced.ravel() < -tol)
            if neg.size == 0:
                return flow
            ie, je = divmod(int(neg[0]), n)
        else:
            flat = int(np.argmin(reduced))
            ie, je = divmod(flat, n)
            if reduced[ie, je] >= -tol:
                return flow
        path = _tree_path(adj, m + je, ie)  # column je ... row ie
        cells = []
        for a, b in zip(path, path[1:]):
            cells.append((a, b - m) if a < m else (b, a - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(flow[c] for c in minus)
        leave = min((c for c in minus if flow[c] == theta), key=lambda c: c[0] * n + c[1])
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[ie, je] += theta
        flow[leave] = 0.0
        li, lj = leave
        adj[li].discard(m + lj)
        adj[m + lj].discard(li)
        adj[ie].add(m + je)
        adj[m + je].add(ie)
        degenerate_run = degenerate_run + 1 if theta <= tol else 0
    raise RuntimeError("transportation simplex did not converge")


@dataclass(frozen=True, eq=False)
class CouplingPlan:
    """Sparse joint law of a pair of ``k``-words."""

    k: int
    alphabet: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    def dense(self) -> np.ndarray:
        size = self.alphabet ** self.k
        out = np.zeros((size, size))
        np.add.at(out, (self.rows, self.cols), self.weights)
        return out

    def marginals(self) -> tuple:
        size = self.alphabet ** self.k
        return (
            np.bincount(self.rows, weights=self.weights, minlength=size),
            np.bincount(self.cols, weights=self.weights, minlength=size),
        )

    def expected_cost(self, cost: str) -> float:
        c = cost_matrix(self.k, self.alphabet, cost)
        return float(np.sum(self.weights * c[self.rows, self.cols]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word_a", "word_b", "weight"])
        for r, c, x in zip(self.rows, self.cols, self.weights):
            w.writerow([
                format_word(decode(int(r), self.k, self.alphabet), self.alphabet),
                format_word(decode(int(c), self.k, self.alphabet), self.alphabet),
                repr(float(x)),
            ])
        return buf.getvalue()


def ot_block(a: BlockDistribution, b: BlockDistribution, cost: str = "hamming-rate"):
    """Optimal coupling of two ``k``-block laws under the given word cost.

    Returns ``(value, plan)``.
    """
    if a.k != b.k:
        raise ValueError(f"block lengths differ: {a.k} vs {b.k}")
    if a.alphabet != b.alphabet:
        raise ValueError("block distributions over different alphabets")
    size = a.alphabet ** a.k
    if size > MAX_WORDS:
        raise InstanceTooLarge(f"instance too large: {size} words per side (limit {MAX_WORDS})")
    full = cost_matrix(a.k, a.alphabet, cost)
    ra = np.flatnonzero(a.probs > 0)
    cb = np.flatnonzero(b.probs > 0)
    flow = transportation_simplex(a.probs[ra], b.probs[cb], full[np.ix_(ra, cb)])
    ii, jj = np.nonzero(flow > 0)
    weights = flow[ii, jj]
    plan = CouplingPlan(a.k, a.alphabet, ra[ii], cb[jj], weights)
    value = float(np.sum(weights * full[ra[ii], cb[jj]]))
    return value, plan


def dbar_lower(a: MeasureSpec, b: MeasureSpec, kmax: int) -> list:
    """``[(k, OT_k)]`` for ``k = 1..kmax`` with per-symbol Hamming cost."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    return [
        (k, ot_block(block_distribution(a, k), block_distribution(b, k), "hamming-rate")[0])
        for k in range(1, kmax + 1)
    ]


def coupled_pair(a: MeasureSpec, b: MeasureSpec, coupling, seed: int, horizon: int):
    """Two points whose joint orbit realizes a stationary joining of ``a`` and ``b``.

    Chain-type specs are coupled step by step; a periodic spec contributes
    its orbit point at phase 0 (paired independently with the other side).
    """
    if isinstance(a, (Bernoulli, Markov)) and isinstance(b, (Bernoulli, Markov)):
        return tuple(sample_coupled([a, b], coupling, seed, horizon))
    return sample_generic(a, seed, horizon), sample_generic(b, seed + 1, horizon)


def dbar_upper(a: MeasureSpec, b: MeasureSpec, coupling="maximal-per-step", seed: int = 0,
               horizon: int = 100_000) -> float:
    """Hamming disagreement density of a coupled sample over ``horizon`` steps."""
    if horizon < MIN_UPPER_HORIZON:
        raise ValueError(f"horizon must be >= {MIN_UPPER_HORIZON}")
    x, y = coupled_pair(a, b, coupling, seed, horizon)
    return int(np.count_nonzero(x.window(0, horizon) != y.window(0, horizon))) / horizon


def cantor_upper(a: MeasureSpec, b: MeasureSpec, coupling, seed: int, horizon: int,
                 resolution: int = DEFAULT_RESOLUTION) -> float:
    """Orbit average of the Cantor distance along a coupled sample."""
    x, y = coupled_pair(a, b, coupling, seed, horizon)
    return float(cantor_values(mismatch_offsets(x, y, horizon, resolution), resolution).sum() / horizon)


@dataclass(frozen=True)
class DbarBound:
    lower: float
    upper: float
    lower_method: str
    upper_method: str

    def __post_init__(self):
        if self.lower > self.upper + 1e-9:
            raise ValueError(f"inconsistent bounds: lower {self.lower} > upper {self.upper}")


def rho_bar_bounds(a: MeasureSpec, b: MeasureSpec, kmax: int, seed: int = 0,
                   horizon: int = 100_000, coupling=None) -> DbarBound:
    """Bounds for the joining metric with the Cantor cost.

    The lower side is block OT at order ``kmax``. The upper side is the
    smallest orbit-averaged Cantor distance over the tried couplings
    (``coupling`` alone if given, else monotone and maximal-per-step).
    """
    if horizon < MIN_UPPER_HORIZON:
        raise ValueError(f"horizon must be >= {MIN_UPPER_HORIZON}")
    lower, _ = ot_block(block_distribution(a, kmax), block_distribution(b, kmax), "cantor")
    rules = [CouplingRule(coupling)] if coupling else [CouplingRule.MONOTONE, CouplingRule.MAXIMAL]
    best, best_rule = math.inf, None
    for rule in rules:
        val = cantor_upper(a, b, rule, seed, horizon)
        if val < best:
            best, best_rule = val, rule
    return DbarBound(
        lower=lower,
        upper=best,
        lower_method=f"block-ot(k={kmax},cost=cantor)",
        upper_method=f"coupled-sample({best_rule.value},seed={seed},horizon={horizon})",
    )


def _binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log(x) - (1 - x) * math.log(1 - x)


def fano_dbar_lower(a: MeasureSpec, b: MeasureSpec, k: int, tol: float = 1e-13) -> float:
    """Largest ``delta`` in ``[0, 1/2]`` with ``H_b(delta) + delta log(|A|-1)``
    at most the entropy gap at order ``k``."""
    if a.alphabet != b.alphabet:
        raise ValueError("measures live on different alphabets")
    gap = abs(entropy_estimate(a, k) - entropy_estimate(b, k))
    extra = math.log(a.alphabet - 1)

    def f(d):
        return _binary_entropy(d) + d * extra

    slack = 1e-12
    if gap <= 0.0:
        return 0.0
    if f(0.5) <= gap + slack:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) <= gap:
            lo = mid
        else:
            hi = mid
    return lo
