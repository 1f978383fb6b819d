"""Seeded experiment scenarios wiring the library into end-to-end checks.

Each scenario reads an :class:`ExperimentConfig`, produces a table (CSV) and
an audit report (JSON), and lists named checks. Outputs depend only on the
config, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .joinings import empirical_joining, factor_condition, invariance_defect
from .measures import (
    Bernoulli,
    MeasureSpec,
    Periodic,
    bernoulli,
    de_bruijn,
    empirical_measure,
    empirical_spec,
    entropy_estimate,
    measure_from_json,
    weakstar_distance,
)
from .orbit import CouplingRule, besicovitch, sample_coupled, sample_generic
from .symbolic import Subsequence, mechanical_point, shift
from .transport import dbar_lower, fano_dbar_lower

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIOS = ("separation", "besicovitch-limit", "closedness", "joining-audit")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int
    params: dict
    source: str = "<dict>"

    def require(self, name: str):
        if name not in self.params:
            raise ConfigError(f"missing config field: {name}")
        return self.params[name]

    def get(self, name: str, default):
        return self.params.get(name, default)

    def positive(self, name: str, default=None) -> float:
        value = self.require(name) if default is None else self.get(name, default)
        if not value > 0:
            raise ConfigError(f"config field {name} must be > 0, got {value!r}")
        return value

    @classmethod
    def from_dict(cls, data: dict, scenario: str | None = None, source: str = "<dict>") -> "ExperimentConfig":
        data = dict(data)
        name = scenario or data.get("scenario")
        if name is None:
            raise ConfigError("missing config field: scenario")
        if data.get("scenario", name) != name:
            raise ConfigError(f"config is for scenario {data['scenario']!r}, not {name!r}")
        if name not in SCENARIOS:
            raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
        if "seed" not in data:
            raise ConfigError("missing config field: seed")
        seed = data.pop("seed")
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("config field seed must be a non-negative integer")
        data.pop("scenario", None)
        return cls(name, seed, data, source)

    @classmethod
    def load(cls, path, scenario: str | None = None) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_bytes()
        data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text.decode())
        return cls.from_dict(data, scenario, str(path))


@dataclass(frozen=True)
class ClassMembershipOracle:
    """Zero-entropy membership by conditional block entropy at a fixed order."""

    class_id: str = "zero-entropy"
    k: int = 8
    threshold: float = 0.02

    def __post_init__(self):
        if self.class_id != "zero-entropy":
            raise ValueError(f"unsupported class {self.class_id!r}")
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")

    def entropy(self, m: MeasureSpec) -> float:
        return entropy_estimate(m, self.k)

    def contains(self, m: MeasureSpec) -> bool:
        return self.entropy(m) <= self.threshold


@dataclass
class ScenarioResult:
    scenario: str
    header: list
    rows: list
    report: dict
    checks: list = field(default_factory=list)
    files: dict = field(default_factory=dict)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def json_text(self) -> str:
        body = dict(self.report)
        body["checks"] = self.checks
        body["passed"] = self.passed
        return json.dumps(body, indent=2, default=_json_default) + "\n"

    def write(self, out_dir) -> tuple:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = self.scenario.replace("-", "_")
        csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
        csv_path.write_text(self.csv_text())
        json_path.write_text(self.json_text())
        for name, text in self.files.items():
            (out / name).write_text(text)
        return csv_path, json_path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def derive_seed(master: int, row: int) -> int:
    """Deterministic per-row seed from ``(master, row)``."""
    return int(np.random.SeedSequence(master, spawn_key=(row,)).generate_state(1, np.uint32)[0])


def _pmap(fn, items, jobs: int):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _subsequence(cfg: ExperimentConfig, default="all") -> Subsequence:
    try:
        return Subsequence.from_json(cfg.get("subsequence", default))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad subsequence: {exc}") from exc


def _measure(obj, name: str) -> MeasureSpec:
    try:
        return measure_from_json(obj)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad measure in field {name}: {exc}") from exc


def _base_report(cfg: ExperimentConfig, tolerances: dict) -> dict:
    return {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "config": cfg.params,
        "tolerances": tolerances,
    }


def run_separation(cfg: ExperimentConfig, jobs: int = 1) -> ScenarioResult:
    """Periodic de Bruijn measures approach the uniform Bernoulli measure in
    the weak* metric while staying at d-bar distance 1/2 from it."""
    kmax = int(cfg.require("kmax"))
    kmin = int(cfg.get("kmin", 2))
    if kmax < 2 or kmin < 2:
        raise ConfigError("need order >= 2")
    if kmin > kmax:
        raise ConfigError("kmin must not exceed kmax")
    A = int(cfg.get("alphabet", 2))
    extra = int(cfg.get("weakstar_extra_levels", 4))
    fano_tol = float(cfg.positive("fano_tol", 1e-6))
    target = Bernoulli(tuple([1.0 / A] * A))

    def row(k):
        per = Periodic(de_bruijn(A, k), A)
        ws = weakstar_distance(per, target, k + extra)
        fl = fano_dbar_lower(per, target, k + 1)
        return k, ws, math.ldexp(1.0, -k), fl

    rows = _pmap(row, range(kmin, kmax + 1), jobs)
    res = ScenarioResult(
        cfg.scenario,
        ["k", "weakstar", "weakstar_bound", "fano_lower"],
        rows,
        _base_report(cfg, {"fano_tol": fano_tol}),
    )
    for k, ws, bound, fl in rows:
        res.check(f"weakstar<=2^-{k}", ws <= bound, f"{ws!r} <= {bound!r}")
        res.check(f"fano_lower(k={k})=1/2", abs(fl - 0.5) <= fano_tol, f"{fl!r}")
    return res


def _ladder(cfg: ExperimentConfig):
    """Limit measure and the path ``mu_1, mu_2, ...`` from the config."""
    if "ladder" in cfg.params:
        lad = cfg.params["ladder"]
        base = float(lad.get("base", 0.5))
        m_max = int(lad.get("m_max", 12))
        if m_max < 1:
            raise ConfigError("ladder.m_max must be >= 1")
        limit = bernoulli(base)
        path = [(m, bernoulli(base + math.ldexp(1.0, -m))) for m in range(1, m_max + 1)]
        return limit, path
    limit = _measure(cfg.require("limit"), "limit")
    path = [(i + 1, _measure(obj, f"path[{i}]")) for i, obj in enumerate(cfg.require("path"))]
    if not path:
        raise ConfigError("config field path must be nonempty")
    return limit, path


def run_besicovitch_limit(cfg: ExperimentConfig, jobs: int = 1) -> ScenarioResult:
    """Orbits coupled to a fixed reference orbit along a convergent path of
    measures; tracks Besicovitch distance, empirical block laws and an
    ergodicity proxy of the reference."""
    horizon = int(cfg.positive("horizon"))
    k = int(cfg.get("block_order", 2))
    coupling = CouplingRule(cfg.get("coupling", "monotone"))
    ns = _subsequence(cfg, {"stride": max(horizon // 10, 1)})
    slack = float(cfg.positive("besicovitch_slack", 0.01))
    tv_final = float(cfg.positive("tv_final", 0.02))
    ergo_tol = float(cfg.positive("ergodicity_tol", 0.03))
    limit, path = _ladder(cfg)

    if isinstance(limit, Periodic):
        raise ConfigError("limit measure must be Bernoulli or Markov for coupled sampling")
    half = horizon // 2

    def row(item):
        m, spec = item
        x, xm = sample_coupled([limit, spec], coupling, cfg.seed, horizon + 64)
        b = besicovitch(x, xm, ns, horizon).value
        ex, em = empirical_spec(x, horizon, k), empirical_spec(xm, horizon, k)
        ws = weakstar_distance(em, ex, k)
        tv = em.dist.tv(ex.dist)
        proxy = empirical_measure(x, half, k).tv(empirical_measure(shift(x, half), half, k))
        bound = dbar_lower(spec, limit, 1)[0][1]
        p1 = spec.probs[1] if isinstance(spec, Bernoulli) and spec.alphabet == 2 else float("nan")
        return m, p1, b, bound, ws, tv, proxy

    rows = _pmap(row, path, jobs)
    res = ScenarioResult(
        cfg.scenario,
        ["m", "p_m", "besicovitch", "dbar_k1", "weakstar", "tv_blocks", "ergodicity_proxy"],
        rows,
        _base_report(
            cfg,
            {"besicovitch_slack": slack, "tv_final": tv_final, "ergodicity_tol": ergo_tol},
        ),
    )
    res.report.update({"horizon": horizon, "block_order": k, "subsequence": ns.to_json()})
    for m, _, b, bound, _, _, proxy in rows:
        res.check(f"besicovitch(m={m})<=dbar+slack", b <= bound + slack, f"{b!r} <= {bound + slack!r}")
        res.check(f"ergodicity_proxy(m={m})", proxy <= ergo_tol, f"{proxy!r}")
    tvs = [r[5] for r in rows]
    res.check("tv_blocks non-increasing", all(b <= a for a, b in zip(tvs, tvs[1:])), repr(tvs))
    res.check("tv_blocks final", tvs[-1] <= tv_final, f"{tvs[-1]!r} <= {tv_final!r}")
    return res


def golden_convergents(min_q: int = 2, max_q: int = 10_000):
    """Ratios ``F_n / F_{n+1}`` of consecutive Fibonacci numbers."""
    a, b = 1, 2
    out = []
    while b <= max_q:
        if b >= min_q:
            out.append(Fraction(a, b))
        a, b = b, a + b
    return out


def _parse_slope(text) -> Fraction:
    if isinstance(text, str) and "/" in text:
        p, q = (int(t) for t in text.split("/"))
        if q <= 0 or math.gcd(p, q) != 1:
            raise ConfigError(f"slope {text} is not a reduced fraction p/q")
        return Fraction(p, q)
    raise ConfigError(f"slope {text!r} must be written as p/q")


def run_closedness(cfg: ExperimentConfig, jobs: int = 1) -> ScenarioResult:
    """Periodic mechanical words with slopes ``p/q`` approaching an irrational
    slope, compared with the limit word in the Besicovitch pseudometric, and
    the zero-entropy verdict on each row and on the limit."""
    horizon = int(cfg.positive("horizon"))
    ns = _subsequence(cfg)
    oracle = ClassMembershipOracle(
        "zero-entropy", int(cfg.get("order", 8)), float(cfg.positive("threshold", 0.02))
    )
    bes_tol = float(cfg.positive("besicovitch_tol", 0.05))
    ratio = float(cfg.positive("control_ratio", 30.0))
    limit_slope = cfg.get("limit_slope", "golden")
    alpha = GOLDEN if limit_slope == "golden" else float(limit_slope)
    if "slopes" in cfg.params:
        slopes = [_parse_slope(s) for s in cfg.params["slopes"]]
    else:
        if limit_slope != "golden":
            raise ConfigError("missing config field: slopes")
        min_q = int(cfg.get("min_q", math.isqrt(horizon - 1) + 1))
        slopes = golden_convergents(min_q, int(cfg.get("max_q", 10_000)))
    if not slopes:
        raise ConfigError("no slopes selected")
    limit_point = mechanical_point(alpha)

    def row(s):
        x = mechanical_point(s)
        b = besicovitch(x, limit_point, ns, horizon).value
        h = oracle.entropy(empirical_spec(x, horizon, oracle.k))
        return s.numerator, s.denominator, b, h, "in class" if h <= oracle.threshold else "not in class"

    rows = _pmap(row, slopes, jobs)
    h_lim = oracle.entropy(empirical_spec(limit_point, horizon, oracle.k))
    rows.append(("limit", repr(alpha), 0.0, h_lim, "in class" if h_lim <= oracle.threshold else "not in class"))

    control_obj = cfg.get("control", {"type": "bernoulli", "p": 0.6})
    control = _measure(control_obj, "control")
    ctrl_point = sample_generic(control, derive_seed(cfg.seed, 0), horizon)
    h_ctrl = oracle.entropy(empirical_spec(ctrl_point, horizon, oracle.k))

    res = ScenarioResult(
        cfg.scenario,
        ["p", "q", "besicovitch", "entropy", "verdict"],
        rows,
        _base_report(
            cfg,
            {"besicovitch_tol": bes_tol, "threshold": oracle.threshold, "control_ratio": ratio},
        ),
    )
    res.report.update({
        "horizon": horizon,
        "order": oracle.k,
        "limit_slope": alpha,
        "genericity_claim": {"horizon": horizon, "order": oracle.k, "tol": oracle.threshold},
        "control": {"measure": control.to_json(), "seed": derive_seed(cfg.seed, 0), "entropy": h_ctrl},
    })
    bes = [r[2] for r in rows[:-1]]
    res.check("besicovitch strictly decreasing", all(b < a for a, b in zip(bes, bes[1:])), repr(bes))
    res.check("besicovitch final", bes[-1] <= bes_tol, f"{bes[-1]!r} <= {bes_tol!r}")
    res.check("limit entropy", h_lim <= oracle.threshold, f"{h_lim!r} <= {oracle.threshold!r}")
    res.check("limit verdict in class", rows[-1][4] == "in class", rows[-1][4])
    ok = [b <= bes_tol and h <= oracle.threshold for (_, _, b, h, _) in rows[:-1]]
    first = ok.index(True) if True in ok else len(ok)
    res.check("verdict monotone along path", all(ok[first:]), repr(ok))
    res.check(
        "control out of class",
        h_ctrl >= ratio * oracle.threshold,
        f"{h_ctrl!r} >= {ratio * oracle.threshold!r}",
    )
    return res


def _all_words(alphabet: int, max_len: int):
    for L in range(1, max_len + 1):
        for code in range(alphabet ** L):
            word = []
            for _ in range(L):
                code, s = divmod(code, alphabet)
                word.append(s)
            yield tuple(reversed(word))


def run_joining_audit(cfg: ExperimentConfig, jobs: int = 1) -> ScenarioResult:
    """Empirical joining of a reference orbit and coupled orbits: marginal
    exactness, invariance defect, and the factor estimate on every cylinder."""
    horizon = int(cfg.positive("horizon"))
    k = int(cfg.get("block_order", 2))
    coupling = CouplingRule(cfg.get("coupling", "monotone"))
    ns = _subsequence(cfg)
    max_len = int(cfg.get("cylinder_max_len", 3))
    limit, path = _ladder(cfg)
    specs = [limit] + [spec for _, spec in path]
    points = sample_coupled(specs, coupling, cfg.seed, horizon + 64)
    joining = empirical_joining(points, ns, horizon, k)
    n = joining.n

    marginal_exact = True
    marginal_tv = 0.0
    for i, p in enumerate(points):
        emp = empirical_measure(p, n, k)
        marg = joining.marginal(i)
        marginal_exact &= bool(np.array_equal(marg.probs, emp.probs))
        marginal_tv = max(marginal_tv, marg.tv(emp))
    defect = invariance_defect(joining)
    bound = 2 * k / n

    table = []
    for N in range(1, len(points)):
        for word in _all_words(points[0].alphabet, max_len):
            delta = math.ldexp(1.0, -(len(word) - 1))
            table.append(factor_condition(points[0], points[N], word, delta, ns, horizon, component=N))

    rows = [
        (r.component, r.cylinder, r.delta, r.symdiff_density, r.mismatch_density, r.holds and r.pointwise)
        for r in table
    ]
    res = ScenarioResult(
        cfg.scenario,
        ["component", "cylinder", "delta", "symdiff_density", "mismatch_density", "holds"],
        rows,
        _base_report(cfg, {"defect_bound": bound, "marginal_tv": 0.0}),
    )
    res.report.update({
        "horizon": horizon,
        "n": n,
        "block_order": k,
        "components": [s.to_json() for s in specs],
        "coupling": coupling.value,
        "marginal_exact": marginal_exact,
        "max_marginal_tv": marginal_tv,
        "invariance_defect": defect,
        "factor_conditions": [r.as_dict() for r in table],
    })
    res.files["joining_distribution.csv"] = joining.to_csv()
    res.check("marginal exactness", marginal_exact, f"max TV {marginal_tv!r}")
    res.check("invariance defect <= 2k/n", defect <= bound, f"{defect!r} <= {bound!r}")
    bad = [f"{r.component}:{r.cylinder}" for r in table if r.applies and not (r.holds and r.pointwise)]
    res.check("factor estimate symdiff <= mismatch", not bad, ", ".join(bad) or f"{len(table)} rows")
    return res


RUNNERS = {
    "separation": run_separation,
    "besicovitch-limit": run_besicovitch_limit,
    "closedness": run_closedness,
    "joining-audit": run_joining_audit,
}


def run_scenario(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> ScenarioResult:
    res = RUNNERS[cfg.scenario](cfg, jobs=jobs)
    if out_dir is not None:
        res.write(out_dir)
    return res
