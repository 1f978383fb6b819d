"""One-sided full shifts: alphabets, lazily generated points, the shift map
and the two per-position costs (Cantor metric and Hamming cost).

A :class:`Point` is an infinite sequence ``x_0 x_1 ...`` described by a finite
``prefix`` followed by the output of a generator ``rule`` read from position
``offset`` onward. Nothing beyond the requested window is ever materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, ClassVar

import numpy as np

from . import kernels

DEFAULT_RESOLUTION = 64

_RULES: dict[str, Callable[[dict], "Rule"]] = {}


def register_rule(tag: str):
    """Class decorator making a rule type loadable from JSON by its tag."""

    def wrap(cls):
        cls.tag = tag
        _RULES[tag] = cls.from_json
        return cls

    return wrap


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.size!r}")

    def __contains__(self, symbol) -> bool:
        return 0 <= symbol < self.size

    def check(self, symbols) -> None:
        arr = np.asarray(symbols)
        if arr.size and (arr.min() < 0 or arr.max() >= self.size):
            raise ValueError(f"symbols outside alphabet 0..{self.size - 1}")


class Rule:
    """Generator of the tail of a point.

    Subclasses implement ``symbols(start, stop)`` returning an int64 array,
    and the JSON round trip.
    """

    tag: ClassVar[str] = ""

    def symbols(self, start: int, stop: int) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_json(cls, obj: dict) -> "Rule":
        raise NotImplementedError


@register_rule("periodic-extension")
@dataclass(frozen=True)
class PeriodicRule(Rule):
    """The word repeated forever."""

    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(s) for s in self.word))
        if not self.word:
            raise ValueError("periodic word must be nonempty")

    def symbols(self, start, stop):
        w = np.asarray(self.word, dtype=np.int64)
        return w[np.arange(start, stop, dtype=np.int64) % len(w)]

    def rotate(self, j: int) -> "PeriodicRule":
        j %= len(self.word)
        return PeriodicRule(self.word[j:] + self.word[:j])

    def to_json(self):
        return {"type": self.tag, "word": list(self.word)}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["word"]))


@register_rule("explicit-finite")
@dataclass(frozen=True)
class FiniteRule(Rule):
    """Constant ``fill`` after the explicit prefix of the point."""

    fill: int = 0

    def symbols(self, start, stop):
        return np.full(max(stop - start, 0), self.fill, dtype=np.int64)

    def to_json(self):
        return {"type": self.tag, "fill": self.fill}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj.get("fill", 0)))


def _as_slope(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    return float(value)


@register_rule("mechanical-word")
@dataclass(frozen=True)
class MechanicalRule(Rule):
    """Lower mechanical word ``s(n) = floor((n+1)a + b) - floor(n a + b)``.

    Rational slope and intercept (``Fraction``) are evaluated in exact integer
    arithmetic; floats fall back to IEEE floor.
    """

    slope: Fraction | float
    intercept: Fraction | float = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "slope", _as_slope(self.slope))
        object.__setattr__(self, "intercept", _as_slope(self.intercept))
        if not 0 <= self.slope <= 1:
            raise ValueError("mechanical slope must lie in [0, 1]")

    @property
    def exact(self) -> bool:
        return isinstance(self.slope, Fraction) and isinstance(self.intercept, Fraction)

    def symbols(self, start, stop):
        n = np.arange(start, stop, dtype=np.int64)
        if self.exact:
            p, q = self.slope.numerator, self.slope.denominator
            r, s = self.intercept.numerator, self.intercept.denominator
            num = n * (p * s) + r * q
            den = q * s
            return (num + p * s) // den - num // den
        a, b = float(self.slope), float(self.intercept)
        nf = n.astype(np.float64)
        return (np.floor((nf + 1.0) * a + b) - np.floor(nf * a + b)).astype(np.int64)

    def to_json(self):
        def enc(v):
            return str(v) if isinstance(v, Fraction) else v

        return {"type": self.tag, "slope": enc(self.slope), "intercept": enc(self.intercept)}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["slope"], obj.get("intercept", Fraction(0)))


@dataclass(frozen=True)
class Point:
    """Infinite one-sided sequence: ``prefix`` then ``rule`` from ``offset``."""

    alphabet: int
    rule: Rule
    prefix: tuple = ()
    offset: int = 0

    def __post_init__(self):
        Alphabet(self.alphabet)
        object.__setattr__(self, "prefix", tuple(int(s) for s in self.prefix))
        Alphabet(self.alphabet).check(self.prefix)
        if isinstance(self.rule, PeriodicRule):
            Alphabet(self.alphabet).check(self.rule.word)
        elif isinstance(self.rule, FiniteRule):
            Alphabet(self.alphabet).check([self.rule.fill])
        if self.offset < 0:
            raise ValueError("offset must be non-negative")

    def window(self, start: int, stop: int) -> np.ndarray:
        """Symbols ``x_start .. x_{stop-1}`` as an int64 array."""
        if start < 0 or stop < start:
            raise ValueError(f"bad window [{start}, {stop})")
        lp = len(self.prefix)
        parts = []
        if start < lp:
            parts.append(np.asarray(self.prefix[start:min(stop, lp)], dtype=np.int64))
        if stop > lp:
            lo = max(start, lp) - lp + self.offset
            parts.append(self.rule.symbols(lo, stop - lp + self.offset))
        if not parts:
            return np.empty(0, dtype=np.int64)
        return parts[0] if len(parts) == 1 else np.concatenate(parts)

    def symbol_at(self, i: int) -> int:
        return int(self.window(i, i + 1)[0])

    def __getitem__(self, i: int) -> int:
        return self.symbol_at(i)

    def to_json(self) -> dict:
        gen = self.rule.to_json()
        if self.offset:
            gen["offset"] = self.offset
        return {"alphabet": self.alphabet, "generator": gen, "prefix": list(self.prefix)}

    @classmethod
    def from_json(cls, obj: dict) -> "Point":
        gen = dict(obj["generator"])
        tag = gen.get("type")
        if tag not in _RULES:
            raise ValueError(f"unknown generator type {tag!r}")
        offset = int(gen.pop("offset", 0))
        return cls(int(obj["alphabet"]), _RULES[tag](gen), tuple(obj.get("prefix", ())), offset)


def periodic_point(word, alphabet: int | None = None) -> Point:
    word = tuple(int(s) for s in word)
    return Point(alphabet or max(2, max(word) + 1), PeriodicRule(word))


def finite_point(word, alphabet: int | None = None, fill: int = 0) -> Point:
    word = tuple(int(s) for s in word)
    return Point(alphabet or max(2, max(word + (fill,)) + 1), FiniteRule(fill), word)


def mechanical_point(slope, intercept=Fraction(0)) -> Point:
    return Point(2, MechanicalRule(slope, intercept))


def shift(p: Point, j: int) -> Point:
    """``T^j p``: drop the first ``j`` symbols."""
    if j < 0:
        raise ValueError("shift is one-sided; j must be >= 0")
    if j == 0:
        return p
    lp = len(p.prefix)
    if j <= lp:
        return Point(p.alphabet, p.rule, p.prefix[j:], p.offset)
    offset = p.offset + j - lp
    if isinstance(p.rule, PeriodicRule):
        return Point(p.alphabet, p.rule.rotate(offset), (), 0)
    return Point(p.alphabet, p.rule, (), offset)


def cantor_distance(p: Point, q: Point, resolution: int = DEFAULT_RESOLUTION) -> float:
    """``2^-m`` with ``m`` the first index where ``p`` and ``q`` differ; 0 if
    they agree on ``[0, resolution)``."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    m = int(kernels.first_mismatch(p.window(0, resolution), q.window(0, resolution), 1, resolution)[0])
    return 0.0 if m >= resolution else math.ldexp(1.0, -m)


def cantor_values(offsets: np.ndarray, resolution: int) -> np.ndarray:
    """Map first-mismatch offsets to Cantor distances (offset ``resolution`` -> 0)."""
    vals = np.ldexp(1.0, -np.minimum(offsets, resolution).astype(np.int64))
    vals[offsets >= resolution] = 0.0
    return vals


def hamming_cost(p: Point, q: Point) -> int:
    return int(p.symbol_at(0) != q.symbol_at(0))


@dataclass(frozen=True)
class Subsequence:
    """Strictly increasing ``n_1 < n_2 < ...`` with ``n_1 >= 1``.

    ``kind`` is one of ``all`` (n_k = k), ``explicit``, ``stride`` (n_k = s k)
    or ``geometric`` (n_k = b^k).
    """

    kind: str = "all"
    param: object = None

    def __post_init__(self):
        if self.kind == "all":
            return
        if self.kind == "explicit":
            vals = tuple(int(v) for v in self.param)
            if not vals or vals[0] < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("explicit subsequence must be strictly increasing with n_1 >= 1")
            object.__setattr__(self, "param", vals)
        elif self.kind == "stride":
            if int(self.param) < 1:
                raise ValueError("stride must be >= 1")
        elif self.kind == "geometric":
            if int(self.param) < 2:
                raise ValueError("geometric base must be >= 2")
        else:
            raise ValueError(f"unknown subsequence kind {self.kind!r}")

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def explicit(cls, values):
        return cls("explicit", tuple(values))

    @classmethod
    def stride(cls, s: int):
        return cls("stride", int(s))

    @classmethod
    def geometric(cls, base: int):
        return cls("geometric", int(base))

    def upto(self, horizon: int) -> np.ndarray:
        """All ``n_k <= horizon`` in increasing order."""
        if self.kind == "all":
            return np.arange(1, horizon + 1, dtype=np.int64)
        if self.kind == "explicit":
            return np.asarray([v for v in self.param if v <= horizon], dtype=np.int64)
        if self.kind == "stride":
            s = int(self.param)
            return np.arange(s, horizon + 1, s, dtype=np.int64)
        b = int(self.param)
        out, v = [], b
        while v <= horizon:
            out.append(v)
            v *= b
        return np.asarray(out, dtype=np.int64)

    def to_json(self):
        if self.kind == "all":
            return "all"
        if self.kind == "explicit":
            return {"explicit": list(self.param)}
        return {self.kind: self.param}

    @classmethod
    def from_json(cls, obj) -> "Subsequence":
        if obj is None or obj == "all":
            return cls.all()
        if isinstance(obj, (list, tuple)):
            return cls.explicit(obj)
        if isinstance(obj, dict) and len(obj) == 1:
            ((kind, param),) = obj.items()
            return cls(kind, tuple(param) if kind == "explicit" else int(param))
        raise ValueError(f"cannot parse subsequence {obj!r}")
