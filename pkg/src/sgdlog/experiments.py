"""Experiment configs, trial runners and CSV/JSON output.

Each trial draws its randomness from ``SeedSequence([seed, size_index, trial])``,
so a (config, seed) pair fixes every row regardless of ``jobs``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedSpec
from .membership import (
    BBHT_CUTOFF,
    BBHT_LAMBDA,
    build_lower_bound_semigroup,
    invert_once,
    lex_first_table,
    lower_bound_size,
    random_permutation_spec,
    sigma_points,
)
from .oracles import SimMode
from .semigroup import TransformationSemigroupSpec, make_handle
from .shifted import ACCOUNTING

SCHEMA_VERSION = 1
EXPERIMENTS = ("membership-scaling", "perm-inversion", "lemma5")
CSV_COLUMNS = ("size", "k", "trial", "product_queries", "permutation_queries", "charged_queries", "success")


@dataclass(frozen=True)
class ExperimentConfig:
    """``sizes`` means target |S| for membership-scaling, n for perm-inversion
    and the ground-set size or degree bound for lemma5."""

    experiment: str
    k: int
    sizes: tuple[int, ...]
    trials: int
    seed: int = 0
    mode: str = "classical"
    accounting: str = "measured"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise MalformedSpec(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.k < 2:
            raise MalformedSpec("k must be >= 2")
        if self.trials < 1 or not self.sizes or any(s < 1 for s in self.sizes):
            raise MalformedSpec("need trials >= 1 and positive sizes")
        if self.accounting not in ACCOUNTING:
            raise MalformedSpec(f"accounting must be one of {ACCOUNTING}")
        SimMode.parse(self.mode)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            return cls(
                experiment=doc["experiment"],
                k=int(doc["k"]),
                sizes=tuple(int(s) for s in doc["sizes"]),
                trials=int(doc["trials"]),
                seed=int(doc.get("seed", 0)),
                mode=str(doc.get("mode", "classical")),
                accounting=str(doc.get("accounting", "measured")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, MalformedSpec):
                raise
            raise MalformedSpec(f"bad experiment config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedSpec(f"{path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class TrialRow:
    size: int
    k: int
    trial: int
    product_queries: int
    permutation_queries: int
    charged_queries: int
    success: bool


def degree_for_size(target: int, k: int) -> int:
    """Least n with C(n + k, k) >= target."""
    n = 1
    while lower_bound_size(n, k) < target:
        n += 1
    return n


def trial_rng(seed: int, size_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, size_index, trial]))


# ---------------------------------------------------------------------------
# Random abelian instances for the lex-first bound


def commuting_transformations(n: int, k: int, rng: np.random.Generator, tries: int = 400) -> list[tuple[int, ...]]:
    """k pairwise commuting self-maps of {1..n} (1-based images).

    Starts from a random map and adds random maps that commute with all
    chosen ones; powers of the first map fill any remaining slots.
    """
    def compose(f, g):  # f then g
        return tuple(g[i] for i in f)

    first = tuple(int(v) for v in rng.integers(0, n, size=n))
    gens = [first]
    for _ in range(tries):
        if len(gens) == k:
            break
        cand = tuple(int(v) for v in rng.integers(0, n, size=n))
        if all(compose(cand, g) == compose(g, cand) for g in gens):
            gens.append(cand)
    p = first
    while len(gens) < k:
        p = compose(p, first)
        gens.append(p)
    order = rng.permutation(k)
    return [tuple(v + 1 for v in gens[i]) for i in order]


@dataclass
class AbelianInstance:
    family: str
    handle: object
    generators: list
    size: int


def random_abelian_instance(rng: np.random.Generator, max_ground: int = 6, max_degree: int = 8) -> AbelianInstance:
    k = int(rng.integers(2, 4))
    if rng.random() < 0.5:
        n = int(rng.integers(1, max_ground + 1))
        spec = TransformationSemigroupSpec(n, tuple(commuting_transformations(n, k, rng)))
        h = make_handle(spec)
        gens = [h.generators[f"g{i + 1}"] for i in range(k)]
        size = len(h.oracle.closure(gens))
        return AbelianInstance("transformation", h, gens, size)
    n = int(rng.integers(1, max_degree + 1))
    h = build_lower_bound_semigroup(random_permutation_spec(n, k, rng))
    gens = [h.generators[f"g{i + 1}"] for i in range(k)]
    return AbelianInstance("lowerbound", h, gens, lower_bound_size(n, k))


@dataclass
class LexFirstCheck:
    members: int
    violations: int
    cheap_coordinate_failures: int
    # the same two checks against |S| + 1 in place of |S|
    violations_plus_one: int = 0
    cheap_failures_plus_one: int = 0


def check_lex_first_bound(inst: AbelianInstance) -> LexFirstCheck:
    """Lex-first witnesses of all members against prod (a_i + 1) <= |S|.

    Also checks that some j has prod_{i != j} (a_i + 1) <= |S|^((k-1)/k),
    in exact integer form: (prod_{i != j})^k <= |S|^(k-1).
    """
    table = lex_first_table(inst.handle, inst.generators)
    k = len(inst.generators)
    counts = [0, 0, 0, 0]
    for w in table.values():
        p = w.box_product()
        for off, size in enumerate((inst.size, inst.size + 1)):
            if p > size:
                counts[2 * off] += 1
            if not any((p // (a + 1)) ** k <= size ** (k - 1) for a in w.a):
                counts[2 * off + 1] += 1
    return LexFirstCheck(len(table), counts[0], counts[1], counts[2], counts[3])


# ---------------------------------------------------------------------------
# Trials


def _run_trial(args) -> TrialRow:
    cfg, size_index, size, trial = args
    rng = trial_rng(cfg.seed, size_index, trial)
    if cfg.experiment == "lemma5":
        inst = random_abelian_instance(rng, max_ground=min(size, 6), max_degree=size)
        res = check_lex_first_bound(inst)
        return TrialRow(inst.size, len(inst.generators), trial, 0, 0, 0, res.violations == 0)
    n = degree_for_size(size, cfg.k) if cfg.experiment == "membership-scaling" else size
    spec = random_permutation_spec(n, cfg.k, rng)
    points = sigma_points(n, cfg.k)
    sigma = points[int(rng.integers(len(points)))]
    res = invert_once(spec, sigma, cfg.mode, rng, cfg.accounting)
    return TrialRow(
        lower_bound_size(n, cfg.k), cfg.k, trial,
        res.product_queries, res.permutation_queries, res.charged_queries, res.success,
    )


def run_trials(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialRow]:
    tasks = [(cfg, i, s, t) for i, s in enumerate(cfg.sizes) for t in range(cfg.trials)]
    if jobs <= 1:
        return [_run_trial(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_trial, tasks))


def loglog_slope(sizes, values) -> float:
    """Least-squares slope of log(values) on log(sizes)."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def summarize(cfg: ExperimentConfig, rows: list[TrialRow]) -> dict:
    by_size: dict[int, list[TrialRow]] = {}
    for r in rows:
        by_size.setdefault(r.size, []).append(r)
    per_size = []
    for s in sorted(by_size):
        rs = by_size[s]
        per_size.append({
            "size": s,
            "trials": len(rs),
            "success_rate": sum(r.success for r in rs) / len(rs),
            "median_product_queries": float(np.median([r.product_queries for r in rs])),
            "median_permutation_queries": float(np.median([r.permutation_queries for r in rs])),
            "median_charged_queries": float(np.median([r.charged_queries for r in rs])),
        })
    out = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(cfg),
        "per_size": per_size,
        "success_rate": sum(r.success for r in rows) / max(1, len(rows)),
        "grover_schedule": {"lambda": BBHT_LAMBDA, "cutoff": BBHT_CUTOFF},
    }
    if cfg.experiment != "lemma5":
        ok = [r for r in rows if r.charged_queries > 0]
        distinct = {r.size for r in ok}
        out["reference_slope"] = 0.5 - 0.5 / cfg.k
        if len(distinct) >= 2:
            out["charged_slope"] = loglog_slope([r.size for r in ok], [r.charged_queries for r in ok])
        okp = [r for r in rows if r.permutation_queries > 0]
        if len({r.size for r in okp}) >= 2:
            out["permutation_slope"] = loglog_slope([r.size for r in okp], [r.permutation_queries for r in okp])
    return out


def rows_to_csv(rows: list[TrialRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.size, r.k, r.trial, r.product_queries, r.permutation_queries, r.charged_queries, int(r.success)])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[TrialRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.config.experiment}.csv"
        json_path = out / f"{self.config.experiment}.summary.json"
        csv_path.write_text(rows_to_csv(self.rows), encoding="utf-8")
        json_path.write_text(json.dumps(self.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return csv_path, json_path


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    rows = run_trials(cfg, jobs)
    return ExperimentResult(cfg, rows, summarize(cfg, rows))
