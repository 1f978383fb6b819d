"""Empirical joinings of orbit tuples and the cylinder form of the factor
estimate.

For a tuple ``(x, x_1, ..., x_M)`` the empirical joining at horizon ``n`` is
the frequency of each tuple of ``k``-words read simultaneously at positions
``j < n``. Its weak* limit points are joinings of the measures the
components are generic for.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .measures import BlockDistribution, decode, encode, format_word, parse_word
from .orbit import _usable, mismatch_offsets
from .symbolic import DEFAULT_RESOLUTION, Point, Subsequence, cantor_values
from .transport import cost_matrix


def _codes(points, start: int, n: int, k: int) -> np.ndarray:
    A = points[0].alphabet
    return np.stack([kernels.block_codes(p.window(start, start + n + k - 1), k, A, n) for p in points])


def _tuple_counts(codes: np.ndarray, size: int):
    """Distinct columns of ``codes`` (lexicographic) with multiplicities."""
    width = codes.shape[0]
    if width * math.log2(max(size, 2)) < 62:
        combined = np.zeros(codes.shape[1], dtype=np.int64)
        for row in codes:
            combined = combined * size + row
        uniq, counts = np.unique(combined, return_counts=True)
        keys = np.empty((uniq.size, width), dtype=np.int64)
        rest = uniq.copy()
        for i in range(width - 1, -1, -1):
            rest, keys[:, i] = np.divmod(rest, size)
        return keys, counts
    keys, counts = np.unique(codes.T, axis=0, return_counts=True)
    return keys.astype(np.int64), counts


@dataclass(frozen=True, eq=False)
class EmpiricalJoining:
    components: tuple
    n: int
    k: int
    keys: np.ndarray
    counts: np.ndarray

    @property
    def alphabet(self) -> int:
        return self.components[0].alphabet

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def dist(self) -> dict:
        A = self.alphabet
        return {
            tuple(format_word(decode(int(c), self.k, A), A) for c in key): float(w)
            for key, w in zip(self.keys, self.probs)
        }

    def marginal_counts(self, i: int) -> np.ndarray:
        size = self.alphabet ** self.k
        out = np.zeros(size, dtype=np.int64)
        np.add.at(out, self.keys[:, i], self.counts)
        return out

    def marginal(self, i: int) -> BlockDistribution:
        return BlockDistribution(self.k, self.alphabet, self.marginal_counts(i) / self.n)

    def pair_cost(self, i: int, j: int, cost: str = "hamming-rate") -> float:
        """Expected word cost between components ``i`` and ``j``."""
        c = cost_matrix(self.k, self.alphabet, cost)
        if cost == "hamming-rate" and self.k == 1:
            return int(self.counts[self.keys[:, i] != self.keys[:, j]].sum()) / self.n
        return float(np.sum(self.counts * c[self.keys[:, i], self.keys[:, j]]) / self.n)

    def to_csv(self) -> str:
        A = self.alphabet
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"w{i}" for i in range(len(self.components))] + ["probability"])
        for key, p in zip(self.keys, self.probs):
            w.writerow([format_word(decode(int(c), self.k, A), A) for c in key] + [repr(float(p))])
        return buf.getvalue()


def empirical_joining(points, ns: Subsequence | None = None, horizon: int = 10_000, k: int = 1) -> EmpiricalJoining:
    """Empirical joining over ``j < n_K``, ``n_K`` the largest usable term."""
    points = tuple(points)
    if len(points) < 2:
        raise ValueError("need at least two components")
    if len({p.alphabet for p in points}) != 1:
        raise ValueError("components over different alphabets")
    ns = ns or Subsequence.all()
    n = int(_usable(ns, horizon, minimum=k)[-1])
    keys, counts = _tuple_counts(_codes(points, 0, n, k), points[0].alphabet ** k)
    return EmpiricalJoining(points, n, k, keys, counts)


def invariance_defect(j: EmpiricalJoining) -> float:
    """TV distance between the joining and the one read from position 1."""
    shifted = _codes(j.components, 1, j.n, j.k)
    keys1, counts1 = _tuple_counts(shifted, j.alphabet ** j.k)
    allkeys = np.concatenate([j.keys, keys1])
    signed = np.concatenate([j.counts, -counts1])
    _, inv = np.unique(allkeys, axis=0, return_inverse=True)
    net = np.zeros(inv.max() + 1, dtype=np.int64)
    np.add.at(net, inv.ravel(), signed)
    return 0.5 * int(np.abs(net).sum()) / j.n


@dataclass(frozen=True)
class FactorConditionReport:
    cylinder: str
    component: int
    n: int
    delta: float
    symdiff_density: float
    mismatch_density: float
    applies: bool
    pointwise: bool

    @property
    def holds(self) -> bool:
        return self.symdiff_density <= self.mismatch_density + 1e-12

    def as_dict(self) -> dict:
        return {
            "cylinder": self.cylinder,
            "component": self.component,
            "n": self.n,
            "delta": self.delta,
            "symdiff_density": self.symdiff_density,
            "mismatch_density": self.mismatch_density,
            "applies": self.applies,
            "holds": self.holds,
            "pointwise": self.pointwise,
        }


def factor_condition(
    x: Point,
    xN: Point,
    B,
    delta: float,
    ns: Subsequence | None = None,
    horizon: int = 10_000,
    component: int = 1,
    resolution: int = DEFAULT_RESOLUTION,
) -> FactorConditionReport:
    """Frequency of ``j`` where exactly one of ``T^j x``, ``T^j xN`` lies in the
    cylinder ``[B]``, against the frequency of ``d(T^j x, T^j xN) >= delta``.

    For ``delta <= 2^-(|B|-1)`` the first set is contained in the second, index
    by index; ``pointwise`` records that containment.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    A = x.alphabet
    word = parse_word(B, A) if isinstance(B, str) else tuple(int(s) for s in B)
    if not word:
        raise ValueError("cylinder word must be nonempty")
    L = len(word)
    ns = ns or Subsequence.all()
    n = int(_usable(ns, horizon, minimum=L)[-1])
    target = encode(word, A)
    in_x = kernels.block_codes(x.window(0, n + L - 1), L, A, n) == target
    in_y = kernels.block_codes(xN.window(0, n + L - 1), L, A, n) == target
    sym = in_x ^ in_y
    far = cantor_values(mismatch_offsets(x, xN, n, resolution), resolution) >= delta
    return FactorConditionReport(
        cylinder=format_word(word, A),
        component=component,
        n=n,
        delta=float(delta),
        symdiff_density=int(sym.sum()) / n,
        mismatch_density=int(far.sum()) / n,
        applies=delta <= math.ldexp(1.0, -(L - 1)),
        pointwise=not bool(np.any(sym & ~far)),
    )
