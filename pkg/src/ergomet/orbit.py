"""Orbit-level machinery: the Besicovitch pseudometric along a subsequence
(averaged and density-threshold forms), seeded samplers of generic points,
coupled samplers for tuples of orbits, and a quasi-genericity check.

The limsup over ``n_k`` is replaced by the maximum over the ``n_k`` that fit
in the horizon; every estimate carries its per-``n_k`` trace.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .measures import (
    Bernoulli,
    Markov,
    MeasureSpec,
    Periodic,
    block_distribution,
    measure_from_json,
)
from .symbolic import (
    DEFAULT_RESOLUTION,
    Point,
    Rule,
    Subsequence,
    cantor_values,
    periodic_point,
    register_rule,
)

CHUNK = 1 << 16


class CouplingRule(str, enum.Enum):
    INDEPENDENT = "independent"
    MONOTONE = "monotone"
    MAXIMAL = "maximal-per-step"

    @property
    def code(self) -> int:
        return {
            CouplingRule.INDEPENDENT: kernels.INDEPENDENT,
            CouplingRule.MONOTONE: kernels.MONOTONE,
            CouplingRule.MAXIMAL: kernels.MAXIMAL,
        }[self]


def _transition_rows(spec: MeasureSpec) -> np.ndarray:
    """Rows ``0..A-1`` are transition laws, row ``A`` is the initial law."""
    A = spec.alphabet
    if isinstance(spec, Bernoulli):
        return np.tile(np.asarray(spec.probs), (A + 1, 1))
    if isinstance(spec, Markov):
        return np.vstack([spec.P, np.asarray(spec.stationary)])
    raise TypeError(f"cannot sample a chain from {type(spec).__name__}")


def _cdf(rows: np.ndarray) -> np.ndarray:
    c = np.cumsum(rows, axis=-1)
    c[..., -1] = 1.0
    return c


@dataclass(frozen=True)
class CoupledSource:
    """Jointly sampled symbol streams for a tuple of Bernoulli/Markov specs.

    The stream is cut into windows of ``CHUNK`` steps; window ``c`` draws its
    uniforms from ``SeedSequence(seed, spawn_key=(c,))`` so every window is
    reproducible on its own. Markov windows still depend on the previous
    window's last state and are produced in order.
    """

    specs: tuple
    rule: CouplingRule
    seed: int
    _chunks: dict = field(default_factory=dict, compare=False, repr=False)
    _ends: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "rule", CouplingRule(self.rule))
        if not self.specs:
            raise ValueError("need at least one spec")
        alphabets = {s.alphabet for s in self.specs}
        if len(alphabets) != 1:
            raise ValueError(f"alphabet mismatch among coupled specs: {sorted(alphabets)}")
        for s in self.specs:
            if not isinstance(s, (Bernoulli, Markov)):
                raise TypeError(f"coupled sampling needs Bernoulli or Markov specs, got {type(s).__name__}")
            if isinstance(s, Markov) and not s.is_irreducible():
                raise ValueError("not ergodic: reducible Markov chain")

    @property
    def alphabet(self) -> int:
        return self.specs[0].alphabet

    @cached_property
    def _tables(self):
        rows = np.stack([_transition_rows(s) for s in self.specs])  # (C, S+1, A)
        C, S1, A = rows.shape
        cdf = _cdf(rows)
        acc = np.zeros((C, S1, S1, A))
        rcdf = np.zeros((C, S1, S1, A))
        for i in range(C):
            for s0 in range(S1):
                p0 = rows[0, s0]
                for si in range(S1):
                    pi = rows[i, si]
                    overlap = np.minimum(p0, pi)
                    acc[i, s0, si] = np.divide(overlap, p0, out=np.zeros(A), where=p0 > 0)
                    resid = pi - overlap
                    total = resid.sum()
                    if total > 1e-15:
                        rcdf[i, s0, si] = _cdf(resid / total)
                    else:
                        rcdf[i, s0, si] = cdf[i, si]
        iid = bool(np.all(rows == rows[:, -1:, :]))
        return cdf, acc, rcdf, iid

    def _uniforms(self, c: int) -> np.ndarray:
        ss = np.random.SeedSequence(self.seed, spawn_key=(c,))
        return np.random.default_rng(ss).random((CHUNK, 2 * len(self.specs)))

    def _run(self, c: int, state: np.ndarray) -> np.ndarray:
        cdf, acc, rcdf, iid = self._tables
        return kernels.coupled_chain(cdf, acc, rcdf, self.rule.code, self._uniforms(c), state, iid)

    def chunk(self, c: int) -> np.ndarray:
        with self._lock:
            if c in self._chunks:
                return self._chunks[c]
            init = np.full(len(self.specs), self.alphabet, dtype=np.int64)
            if self._tables[3]:
                self._chunks[c] = self._run(c, init)
                return self._chunks[c]
            start = max([b for b in self._chunks if b < c], default=-1)
            for b in range(start + 1, c + 1):
                state = self._ends[b - 1].copy() if b > 0 else init.copy()
                self._chunks[b] = self._run(b, state)
                self._ends[b] = state
            return self._chunks[c]

    def window(self, component: int, start: int, stop: int) -> np.ndarray:
        if stop <= start:
            return np.empty(0, dtype=np.int64)
        parts = []
        for c in range(start // CHUNK, (stop - 1) // CHUNK + 1):
            lo = max(start - c * CHUNK, 0)
            hi = min(stop - c * CHUNK, CHUNK)
            parts.append(self.chunk(c)[component, lo:hi])
        return parts[0].copy() if len(parts) == 1 else np.concatenate(parts)

    def points(self) -> list:
        return [Point(self.alphabet, SampledRule(self, i)) for i in range(len(self.specs))]


@register_rule("markov-sample")
@dataclass(frozen=True)
class SampledRule(Rule):
    """Component ``component`` of a :class:`CoupledSource`."""

    source: CoupledSource
    component: int = 0

    def symbols(self, start, stop):
        return self.source.window(self.component, start, stop)

    def to_json(self):
        return {
            "type": self.tag,
            "specs": [s.to_json() for s in self.source.specs],
            "coupling": self.source.rule.value,
            "seed": self.source.seed,
            "component": self.component,
        }

    @classmethod
    def from_json(cls, obj):
        specs = tuple(measure_from_json(s) for s in obj["specs"])
        src = CoupledSource(specs, obj.get("coupling", "independent"), int(obj["seed"]))
        return cls(src, int(obj.get("component", 0)))


def sample_generic(m: MeasureSpec, seed: int, length: int) -> Point:
    """A point generic for ``m``: the orbit point for periodic measures, a
    seeded sample path otherwise (pre-generated up to ``length``)."""
    if isinstance(m, Periodic):
        return periodic_point(m.word, m.alphabet)
    if not isinstance(m, (Bernoulli, Markov)):
        raise TypeError(f"cannot sample from {type(m).__name__}")
    (p,) = CoupledSource((m,), CouplingRule.INDEPENDENT, seed).points()
    p.window(0, length)
    return p


def sample_coupled(specs, coupling, seed: int, length: int) -> list:
    """Jointly sampled points, one per spec, under the given coupling rule."""
    pts = CoupledSource(tuple(specs), CouplingRule(coupling), seed).points()
    if pts:
        pts[0].rule.source.window(0, 0, length)
    return pts


@dataclass(frozen=True, eq=False)
class BesicovitchEstimate:
    horizon: int
    value: float
    form: str
    subsequence: Subsequence
    ns: np.ndarray
    trace: np.ndarray

    def rows(self):
        return [(int(n), float(v)) for n, v in zip(self.ns, self.trace)]


def _usable(ns: Subsequence, horizon: int, minimum: int = 1) -> np.ndarray:
    nks = ns.upto(horizon)
    nks = nks[nks >= minimum]
    if nks.size == 0:
        raise ValueError(f"no n_k of the subsequence fits within horizon {horizon}")
    return nks


def mismatch_offsets(p: Point, q: Point, n: int, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """First-disagreement offsets of ``T^j p`` and ``T^j q`` for ``j < n``."""
    if p.alphabet != q.alphabet:
        raise ValueError("points over different alphabets")
    L = n + resolution - 1
    return kernels.first_mismatch(p.window(0, L), q.window(0, L), n, resolution)


def besicovitch(
    p: Point,
    q: Point,
    ns: Subsequence | None = None,
    horizon: int = 10_000,
    resolution: int = DEFAULT_RESOLUTION,
) -> BesicovitchEstimate:
    """Averaged form: ``max_k (1/n_k) sum_{j<n_k} d(T^j p, T^j q)``."""
    ns = ns or Subsequence.all()
    nks = _usable(ns, horizon)
    d = cantor_values(mismatch_offsets(p, q, int(nks[-1]), resolution), resolution)
    avg = np.cumsum(d)[nks - 1] / nks
    return BesicovitchEstimate(horizon, float(avg.max()), "average", ns, nks, avg)


def besicovitch_density(
    p: Point,
    q: Point,
    ns: Subsequence | None = None,
    horizon: int = 10_000,
    resolution: int = DEFAULT_RESOLUTION,
) -> BesicovitchEstimate:
    """Density form: ``inf{delta : max_k |{j < n_k : d_j >= delta}| / n_k < delta}``.

    The admissible set is an up-set, and on each interval between consecutive
    attained distances the density is constant, so the infimum is the first
    admissible interval's left end point (or the density itself). The scan
    runs over those intervals for every ``n_k`` at once; the overall value is
    the max of the per-``n_k`` infima.
    """
    ns = ns or Subsequence.all()
    nks = _usable(ns, horizon)
    offs = mismatch_offsets(p, q, int(nks[-1]), resolution)
    levels = np.unique(offs[offs < resolution])  # ascending offset = descending distance
    values = np.ldexp(1.0, -levels)
    order = np.argsort(values)  # ascending distance
    per_n = np.full(nks.size, np.nan)
    lower = 0.0
    for idx in order:
        u = values[idx]
        frac = np.cumsum(offs <= levels[idx])[nks - 1] / nks
        cand = np.maximum(lower, frac)
        hit = np.isnan(per_n) & (cand < u)
        per_n[hit] = cand[hit]
        lower = u
    per_n[np.isnan(per_n)] = lower
    return BesicovitchEstimate(horizon, float(per_n.max()), "density-threshold", ns, nks, per_n)


@dataclass(frozen=True, eq=False)
class GenericityReport:
    max_block_order: int
    ns: np.ndarray
    discrepancies: np.ndarray
    tol: float
    verdict: bool

    def rows(self):
        return [(int(n), float(v)) for n, v in zip(self.ns, self.discrepancies)]


def prefix_counts(codes: np.ndarray, nks: np.ndarray, size: int):
    """Yield ``(k, counts of codes[:nks[k]])`` for increasing ``k``."""
    counts = np.zeros(size, dtype=np.int64)
    prev = 0
    for i, n in enumerate(nks):
        counts += np.bincount(codes[prev:n], minlength=size)
        prev = int(n)
        yield i, counts


def quasigeneric_check(
    p: Point,
    m: MeasureSpec,
    ns: Subsequence | None = None,
    horizon: int = 10_000,
    k: int = 2,
    tol: float = 0.02,
) -> GenericityReport:
    """Total-variation gap between the ``k``-block empirical law of ``p`` at
    each usable ``n_k`` and the ``k``-block law of ``m``."""
    ns = ns or Subsequence.all()
    nks = _usable(ns, horizon, minimum=k)
    target = block_distribution(m, k).probs
    A = p.alphabet
    N = int(nks[-1])
    codes = kernels.block_codes(p.window(0, N + k - 1), k, A, N)
    disc = np.empty(nks.size)
    for i, counts in prefix_counts(codes, nks, A ** k):
        disc[i] = 0.5 * np.abs(counts / nks[i] - target).sum()
    return GenericityReport(k, nks, disc, tol, bool(disc[-1] <= tol))
