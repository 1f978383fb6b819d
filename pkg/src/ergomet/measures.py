"""Shift-invariant measures and their finite-block fingerprints.

A measure is represented by a :class:`MeasureSpec` (Bernoulli, Markov,
periodic orbit, or stored empirical block data). Everything downstream works
with :class:`BlockDistribution`, the exact law of the first ``k`` symbols.
Entropies are in nats.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .symbolic import Alphabet, Point

PROB_TOL = 1e-12
STATIONARY_TOL = 1e-10
EMPIRICAL_CONSISTENCY_TOL = 1e-3


class InsufficientOrder(ValueError):
    pass


def encode(word, alphabet: int) -> int:
    code = 0
    for s in word:
        code = code * alphabet + int(s)
    return code


def decode(code: int, k: int, alphabet: int) -> tuple:
    out = []
    for _ in range(k):
        code, s = divmod(code, alphabet)
        out.append(s)
    return tuple(reversed(out))


def format_word(word, alphabet: int) -> str:
    sep = "" if alphabet <= 10 else "."
    return sep.join(str(s) for s in word)


def parse_word(text: str, alphabet: int) -> tuple:
    if alphabet <= 10:
        return tuple(int(c) for c in text.strip())
    return tuple(int(c) for c in text.strip().split("."))


@dataclass(frozen=True, eq=False)
class BlockDistribution:
    """Probability of each length-``k`` word, indexed by lexicographic code."""

    k: int
    alphabet: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (self.alphabet ** self.k,):
            raise ValueError(f"expected {self.alphabet ** self.k} probabilities, got {probs.shape}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __getitem__(self, word) -> float:
        if isinstance(word, str):
            word = parse_word(word, self.alphabet)
        if len(word) != self.k:
            raise KeyError(word)
        return float(self.probs[encode(word, self.alphabet)])

    def items(self):
        for code, p in enumerate(self.probs):
            yield decode(code, self.k, self.alphabet), float(p)

    def as_dict(self) -> dict:
        return {format_word(w, self.alphabet): p for w, p in self.items()}

    def drop_last(self) -> "BlockDistribution":
        if self.k == 1:
            raise ValueError("cannot marginalize a 1-block distribution")
        return BlockDistribution(self.k - 1, self.alphabet, self.probs.reshape(-1, self.alphabet).sum(axis=1))

    def drop_first(self) -> "BlockDistribution":
        if self.k == 1:
            raise ValueError("cannot marginalize a 1-block distribution")
        return BlockDistribution(self.k - 1, self.alphabet, self.probs.reshape(self.alphabet, -1).sum(axis=0))

    def consistency_defect(self) -> float:
        """Largest disagreement between the two one-step marginals."""
        if self.k == 1:
            return 0.0
        return float(np.max(np.abs(self.drop_first().probs - self.drop_last().probs)))

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-np.sum(p * np.log(p)))

    def tv(self, other: "BlockDistribution") -> float:
        if (self.k, self.alphabet) != (other.k, other.alphabet):
            raise ValueError("block distributions of different shape")
        return 0.5 * float(np.sum(np.abs(self.probs - other.probs)))

    def to_csv(self, fh=None) -> str | None:
        """Write ``word,probability`` rows in lexicographic order."""
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "probability"])
        for word, p in self.items():
            w.writerow([format_word(word, self.alphabet), repr(p)])
        return buf.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, text: str, alphabet: int) -> "BlockDistribution":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        words = [parse_word(r[0], alphabet) for r in rows if r]
        k = len(words[0])
        probs = np.zeros(alphabet ** k)
        for word, r in zip(words, rows):
            probs[encode(word, alphabet)] = float(r[1])
        return cls(k, alphabet, probs)


class MeasureSpec:
    """Base class of the built-in shift-invariant measures."""

    alphabet: int

    def to_json(self) -> dict:
        raise NotImplementedError


def _prob_vector(values, name: str) -> tuple:
    vals = tuple(float(v) for v in values)
    if any(v < 0 for v in vals) or abs(sum(vals) - 1.0) > PROB_TOL:
        raise ValueError(f"{name} is not a probability vector: {vals}")
    return vals


@dataclass(frozen=True)
class Bernoulli(MeasureSpec):
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "probs", _prob_vector(self.probs, "Bernoulli weights"))
        Alphabet(len(self.probs))

    @property
    def alphabet(self) -> int:
        return len(self.probs)

    def to_json(self):
        return {"type": "bernoulli", "probs": list(self.probs)}


def bernoulli(p: float) -> Bernoulli:
    """Binary Bernoulli measure with ``P(1) = p``."""
    return Bernoulli((1.0 - p, p))


@dataclass(frozen=True)
class Markov(MeasureSpec):
    matrix: tuple
    stationary: tuple

    def __post_init__(self):
        rows = tuple(_prob_vector(r, "transition row") for r in self.matrix)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("transition matrix must be square")
        Alphabet(len(rows))
        pi = _prob_vector(self.stationary, "stationary vector")
        if len(pi) != len(rows):
            raise ValueError("stationary vector has wrong length")
        P, v = np.asarray(rows), np.asarray(pi)
        if np.max(np.abs(v @ P - v)) > STATIONARY_TOL:
            raise ValueError("stationary vector does not satisfy pi P = pi")
        object.__setattr__(self, "matrix", rows)
        object.__setattr__(self, "stationary", pi)

    @property
    def alphabet(self) -> int:
        return len(self.matrix)

    @property
    def P(self) -> np.ndarray:
        return np.asarray(self.matrix)

    @classmethod
    def from_matrix(cls, matrix) -> "Markov":
        """Attach the stationary vector (unique for irreducible chains)."""
        P = np.asarray(matrix, dtype=np.float64)
        n = P.shape[0]
        a = np.vstack([P.T - np.eye(n), np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        return cls(tuple(map(tuple, P)), tuple(pi))

    def is_irreducible(self) -> bool:
        reach = (self.P > 0).astype(np.int64)
        n = reach.shape[0]
        closure = np.eye(n, dtype=np.int64) | reach
        for _ in range(n):
            closure = ((closure @ closure) > 0).astype(np.int64)
        return bool(closure.all())

    def to_json(self):
        return {"type": "markov", "matrix": [list(r) for r in self.matrix], "stationary": list(self.stationary)}


def symmetric_markov(stay: float) -> Markov:
    """Binary chain that keeps its symbol with probability ``stay``."""
    return Markov(((stay, 1 - stay), (1 - stay, stay)), (0.5, 0.5))


@dataclass(frozen=True)
class Periodic(MeasureSpec):
    """Uniform measure on the shift orbit of ``word^inf``."""

    word: tuple
    alphabet: int = 2

    def __post_init__(self):
        word = tuple(int(s) for s in self.word)
        if not word:
            raise ValueError("periodic word must be nonempty")
        object.__setattr__(self, "word", word)
        Alphabet(self.alphabet).check(word)

    def to_json(self):
        return {"type": "periodic", "word": list(self.word), "alphabet": self.alphabet}


def periodic(word, alphabet: int | None = None) -> Periodic:
    if isinstance(word, str):
        word = tuple(int(c) for c in word)
    word = tuple(word)
    return Periodic(word, alphabet or max(2, max(word) + 1))


@dataclass(frozen=True)
class EmpiricalBlock(MeasureSpec):
    """Measure known only through its ``k``-block law (no extension beyond ``k``)."""

    dist: BlockDistribution
    tol: float = EMPIRICAL_CONSISTENCY_TOL

    def __post_init__(self):
        if abs(self.dist.probs.sum() - 1.0) > 1e-10:
            raise ValueError("block distribution does not sum to 1")
        if self.dist.consistency_defect() > self.tol:
            raise ValueError("block distribution is not shift-consistent")

    @property
    def k(self) -> int:
        return self.dist.k

    @property
    def alphabet(self) -> int:
        return self.dist.alphabet

    def to_json(self):
        return {"type": "empirical-block", "k": self.k, "alphabet": self.alphabet, "probs": self.dist.as_dict()}


def de_bruijn(alphabet: int, order: int) -> tuple:
    """Lexicographically least de Bruijn cycle B(alphabet, order)."""
    a = [0] * (alphabet * order)
    seq = []

    def db(t, p):
        if t > order:
            if order % p == 0:
                seq.extend(a[1:p + 1])
        else:
            a[t] = a[t - p]
            db(t + 1, p)
            for j in range(a[t - p] + 1, alphabet):
                a[t] = j
                db(t + 1, t)

    db(1, 1)
    return tuple(seq)


def measure_from_json(obj: dict) -> MeasureSpec:
    kind = obj.get("type")
    if kind == "bernoulli":
        if "p" in obj:
            return bernoulli(float(obj["p"]))
        return Bernoulli(tuple(obj["probs"]))
    if kind == "markov":
        if "stationary" in obj:
            return Markov(tuple(map(tuple, obj["matrix"])), tuple(obj["stationary"]))
        return Markov.from_matrix(obj["matrix"])
    if kind == "periodic":
        return periodic(obj["word"], obj.get("alphabet"))
    if kind == "de-bruijn":
        alpha = int(obj.get("alphabet", 2))
        return Periodic(de_bruijn(alpha, int(obj["order"])), alpha)
    if kind == "empirical-block":
        alpha = int(obj["alphabet"])
        k = int(obj["k"])
        probs = np.zeros(alpha ** k)
        for word, p in obj["probs"].items():
            probs[encode(parse_word(word, alpha), alpha)] = float(p)
        return EmpiricalBlock(BlockDistribution(k, alpha, probs))
    raise ValueError(f"unknown measure type {kind!r}")


def block_distribution(m: MeasureSpec, k: int) -> BlockDistribution:
    """Exact law of ``x_0 .. x_{k-1}`` under ``m``."""
    if k < 1:
        raise ValueError("block length must be >= 1")
    A = m.alphabet
    if isinstance(m, Bernoulli):
        p = np.asarray(m.probs)
        out = p
        for _ in range(k - 1):
            out = np.outer(out, p).ravel()
        return BlockDistribution(k, A, out)
    if isinstance(m, Markov):
        P = m.P
        out = np.asarray(m.stationary)
        codes = np.arange(A)
        for _ in range(k - 1):
            out = (out[:, None] * P[codes % A]).ravel()
            codes = np.arange(out.size)
        return BlockDistribution(k, A, out)
    if isinstance(m, Periodic):
        w = np.asarray(m.word, dtype=np.int64)
        L = len(w)
        ext = np.concatenate([w] * (1 + -(-(k - 1) // L)))
        codes = kernels.block_codes(ext, k, A, L)
        return BlockDistribution(k, A, np.bincount(codes, minlength=A ** k) / L)
    if isinstance(m, EmpiricalBlock):
        if k > m.k:
            raise InsufficientOrder(f"insufficient order: requested k={k}, stored order {m.k}")
        d = m.dist
        while d.k > k:
            d = d.drop_last()
        return d
    raise TypeError(f"unsupported measure {m!r}")


def empirical_counts(p: Point, n: int, k: int) -> np.ndarray:
    """Integer counts of each ``k``-word at positions ``0 <= j < n`` of ``p``."""
    if n < k:
        raise ValueError("need n >= k")
    codes = kernels.block_codes(p.window(0, n + k - 1), k, p.alphabet, n)
    return np.bincount(codes, minlength=p.alphabet ** k)


def empirical_measure(p: Point, n: int, k: int) -> BlockDistribution:
    """Frequencies of ``k``-words over the first ``n`` positions of the orbit."""
    return BlockDistribution(k, p.alphabet, empirical_counts(p, n, k) / n)


def empirical_spec(p: Point, n: int, k: int) -> EmpiricalBlock:
    return EmpiricalBlock(empirical_measure(p, n, k))


def entropy_estimate(m: MeasureSpec, k: int) -> float:
    """Conditional block entropy ``H_k - H_{k-1}`` in nats."""
    if k < 2:
        raise ValueError("entropy_estimate needs k >= 2")
    hk = block_distribution(m, k).entropy()
    hk1 = block_distribution(m, k - 1).entropy()
    return max(hk - hk1, 0.0)


def weakstar_distance(a: MeasureSpec, b: MeasureSpec, K: int) -> float:
    """Sum over ``k <= K`` of ``2^-k`` times the ``k``-block total variation."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if a.alphabet != b.alphabet:
        raise ValueError("measures live on different alphabets")
    return sum(
        math.ldexp(block_distribution(a, k).tv(block_distribution(b, k)), -k) for k in range(1, K + 1)
    )
