"""Acceptance checks, shared by the test suite and ``sgdlog selftest``.

Every check returns a :class:`CriterionResult`; thresholds live here as module
constants so they are pinned in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dlog import find_rho, semigroup_dlog
from .errors import NoSolution, NotAPower, TokenBudgetExhausted
from .experiments import ExperimentConfig, check_lex_first_bound, random_abelian_instance, run_experiment
from .membership import (
    build_lower_bound_semigroup,
    invert_once,
    lower_bound_size,
    random_permutation_spec,
    sigma_points,
)
from .oracles import SimMode, SyntheticShift, SieveStats, nearest_peak_mass, period_pmf, sieve_solve_shift
from .semigroup import (
    MatrixSemigroupSpec,
    RhoSemigroupSpec,
    TransformationSemigroupSpec,
    make_handle,
)
from .shifted import shifted_dlog

FOURIER_FLOOR = 4 / math.pi ** 2
DIVISOR_TOL = 1e-12
RHO_SUCCESS = 0.99
SHIFTED_SUCCESS = 0.95
SLOPE_TOL = 0.05
# frozen at first calibration (scripts/calibrate_query_bound.py, seeds 10 and
# 100..109, 2200 instances): largest observed ratio 2.77
QUERY_BOUND_C = 4.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"[{status}] criterion {self.number}: {self.name} ({info})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _rng(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------


def fourier_sampling_bound() -> CriterionResult:
    M = 1 << 10
    worst = 1.0
    for r in (2, 3, 5, 7, 12):
        for t in (1, 5):
            L = (M - t) // r + 1
            worst = min(worst, nearest_peak_mass(M, r, L))
    return CriterionResult(1, "Fourier-sampling peak mass", worst >= FOURIER_FLOOR,
                           {"min_mass": worst, "floor": FOURIER_FLOOR})


def exact_divisor_case() -> CriterionResult:
    M, r, t = 16, 4, 1
    p = period_pmf(M, r, (M - t) // r + 1)
    want = np.array([0.25 if k % 4 == 0 else 0.0 for k in range(M)])
    err = float(np.max(np.abs(p - want)))
    return CriterionResult(2, "exact divisor distribution", err <= DIVISOR_TOL, {"max_error": err})


def rho_end_to_end(instances: int = 200, seed: int = 3) -> CriterionResult:
    rng = _rng(seed)
    ok = wrong = 0
    for _ in range(instances):
        total = int(rng.integers(2, (1 << 12) + 1))
        t = int(rng.integers(1, total))
        r = total - t
        h = make_handle(RhoSemigroupSpec(t, r))
        try:
            rho = find_rho(h, h.generator("g"), SimMode.SAMPLING, rng)
        except Exception:
            continue
        if (rho.t, rho.r) == (t, r):
            ok += 1
        else:
            wrong += 1
    rate = ok / instances
    return CriterionResult(3, "index/period recovery", rate >= RHO_SUCCESS and wrong == 0,
                           {"success_rate": rate, "wrong": wrong})


def _dlog_instance(rng, kind):
    if kind == "rho":
        total = int(rng.integers(2, (1 << 10) + 1))
        t = int(rng.integers(1, total))
        h = make_handle(RhoSemigroupSpec(t, total - t))
        return h, h.generator("g"), None
    if kind == "transformation":
        n = int(rng.integers(2, 40))
        f = tuple(int(v) + 1 for v in rng.integers(0, n, size=n))
        h = make_handle(TransformationSemigroupSpec(n, (f,)))
        foreign = tuple(int(v) + 1 for v in rng.integers(0, n, size=n))
        return h, h.generator("g"), h._family.encode([v - 1 for v in foreign])
    m = int(rng.integers(2, 1 << 10))
    a = int(rng.integers(0, m))
    h = make_handle(MatrixSemigroupSpec(1, m, (((a,),),)))
    foreign = int(rng.integers(0, m))
    return h, h.generator("g"), h._family.encode([foreign])


def dlog_correctness(instances: int = 100, foreign: int = 100, seed: int = 4,
                     mode: SimMode = SimMode.SAMPLING) -> CriterionResult:
    rng = _rng(seed)
    kinds = ("rho", "transformation", "matrix")
    mismatches = checked = 0
    for i in range(instances):
        h, g, _ = _dlog_instance(rng, kinds[i % 3])
        o = h.oracle
        t, r = o.orbit_rho(None, g)
        rho = find_rho(h, g, mode, rng)
        if (rho.t, rho.r) != (t, r):
            mismatches += 1
            continue
        e = g
        for a in range(1, t + r):
            try:
                got = semigroup_dlog(h, g, e, mode, rng, rho=rho)
            except NotAPower:
                got = None
            checked += 1
            mismatches += got != a
            e = o.mul(e, g)
    foreign_ok = foreign_seen = 0
    while foreign_seen < foreign:
        h, g, x = _dlog_instance(rng, kinds[1 + foreign_seen % 2])
        t, r = h.oracle.orbit_rho(None, g)
        powers = {g}
        e = g
        for _ in range(t + r):
            e = h.oracle.mul(e, g)
            powers.add(e)
        if x in powers:
            continue
        foreign_seen += 1
        try:
            semigroup_dlog(h, g, x, mode, rng)
        except NotAPower:
            foreign_ok += 1
    passed = mismatches == 0 and foreign_ok == foreign
    return CriterionResult(4, "semigroup dlog correctness", passed,
                           {"members_checked": checked, "mismatches": mismatches,
                            "foreign_rejected": f"{foreign_ok}/{foreign}"})


def _least_shift(o, x, y, g, bound):
    e = y
    for a in range(1, bound + 1):
        e = o.mul(e, g)
        if e == x:
            return a
    return None


def shifted_correctness(instances: int = 500, trials: int = 4, seed: int = 5,
                        exhaustive: int = 20) -> CriterionResult:
    rng = _rng(seed)
    worst_rate, wrong, budget_failures = 1.0, 0, 0
    for _ in range(instances):
        c = int(rng.integers(0, 13))
        r = 1 << c
        t = int(rng.integers(1, 64))
        h = make_handle(RhoSemigroupSpec(t, r))
        g = h.generator("g")
        o = h.oracle
        u = int(rng.integers(1, t + r))
        y = o.pow(g, u)
        x = o.pow(g, int(rng.integers(1, t + r)))
        want = _least_shift(o, x, y, g, t + r)
        good = 0
        for _ in range(trials):
            try:
                got = shifted_dlog(h, x, y, g, SimMode.SAMPLING, rng)
            except TokenBudgetExhausted:
                budget_failures += 1
                continue
            except NoSolution:
                got = None
            if got == want:
                good += 1
            else:
                wrong += 1
        worst_rate = min(worst_rate, good / trials)

    classical_bad = classical_checked = 0
    for i in range(exhaustive):
        if i % 2:
            total = int(rng.integers(2, 1 << 9))
            t = int(rng.integers(1, total))
            h = make_handle(RhoSemigroupSpec(t, total - t))
        else:
            n = int(rng.integers(2, 30))
            f = tuple(int(v) + 1 for v in rng.integers(0, n, size=n))
            h = make_handle(TransformationSemigroupSpec(n, (f,)))
        g = h.generator("g")
        o = h.oracle
        t, r = o.orbit_rho(None, g)
        elems = [g]
        for _ in range(t + r - 2):
            elems.append(o.mul(elems[-1], g))
        ys = elems if len(elems) <= 24 else [elems[int(j)] for j in rng.choice(len(elems), 24, replace=False)]
        for y in ys:
            for x in elems:
                want = _least_shift(o, x, y, g, t + r)
                try:
                    got = shifted_dlog(h, x, y, g, SimMode.CLASSICAL, rng)
                except NoSolution:
                    got = None
                classical_checked += 1
                classical_bad += got != want
    passed = worst_rate >= SHIFTED_SUCCESS and wrong == 0 and classical_bad == 0
    return CriterionResult(5, "shifted dlog correctness", passed,
                           {"worst_instance_rate": worst_rate, "wrong_answers": wrong,
                            "budget_failures": budget_failures,
                            "classical_checked": classical_checked, "classical_mismatches": classical_bad})


def sieve_growth(trials: int = 50, seed: int = 6, cs=range(4, 13)) -> CriterionResult:
    rng = _rng(seed)
    medians = {}
    for c in cs:
        order = 1 << c
        counts = []
        for _ in range(trials):
            shift = int(rng.integers(order))
            stats = SieveStats()
            got = sieve_solve_shift(SyntheticShift(order, shift), SimMode.SAMPLING, rng, stats=stats)
            if got == shift:
                counts.append(stats.tokens)
        medians[c] = float(np.median(counts))
    cs = sorted(medians)
    monotone = all(medians[a] < medians[b] for a, b in zip(cs, cs[1:]))
    ratios = {c: medians[c + 1] / medians[c] for c in cs[:-1]}
    late = [ratios[c] for c in sorted(ratios) if c >= 8]
    decreasing = all(a > b for a, b in zip(late, late[1:]))
    return CriterionResult(6, "sieve token growth", monotone and decreasing,
                           {"medians": {c: int(m) for c, m in medians.items()},
                            "ratios_c>=8": [round(x, 3) for x in late]})


def lex_first_bound_property(instances: int = 1000, seed: int = 7) -> CriterionResult:
    rng = _rng(seed)
    members = violations = cheap = over_plus_one = cheap_plus_one = 0
    for _ in range(instances):
        res = check_lex_first_bound(random_abelian_instance(rng))
        members += res.members
        violations += res.violations
        cheap += res.cheap_coordinate_failures
        over_plus_one += res.violations_plus_one
        cheap_plus_one += res.cheap_failures_plus_one
    return CriterionResult(7, "lex-first witness bound", violations == 0 and cheap == 0,
                           {"instances": instances, "members": members, "violations": violations,
                            "cheap_coordinate_failures": cheap,
                            "violations_of_S_plus_1": over_plus_one,
                            "cheap_failures_S_plus_1": cheap_plus_one})


def lower_bound_construction(max_n: int = 6, seed: int = 8, mode: SimMode = SimMode.SAMPLING) -> CriterionResult:
    rng = _rng(seed)
    algebra_bad = enc_bad = invert_bad = inverted = 0
    for k in (2, 3):
        for n in range(1, max_n + 1):
            spec = random_permutation_spec(n, k, rng)
            h = build_lower_bound_semigroup(spec)
            fam = h._family
            o = h.oracle
            elems = o.closure([h.generators[f"g{i + 1}"] for i in range(k)])
            if len(elems) != lower_bound_size(n, k) or len(set(elems)) != len(elems):
                enc_bad += 1
            boundary = {e[1:] for e in elems if e[0] == 2}
            if len(boundary) != len(sigma_points(n, k)):
                enc_bad += 1
            prod = {(a, b): o.mul(a, b) for a in elems for b in elems}
            for a in elems:
                for b in elems:
                    if prod[a, b] != prod[b, a]:
                        algebra_bad += 1
                    ab = prod[a, b]
                    for c in elems:
                        if prod[ab, c] != prod[a, prod[b, c]]:
                            algebra_bad += 1
            for sigma in sigma_points(n, k):
                inverted += 1
                invert_bad += not invert_once(spec, sigma, mode, rng).success
    passed = algebra_bad == 0 and enc_bad == 0 and invert_bad == 0
    return CriterionResult(8, "lower-bound construction", passed,
                           {"algebra_violations": algebra_bad, "encoding_defects": enc_bad,
                            "inversions": inverted, "inversion_failures": invert_bad})


def membership_scaling(ks=(2, 3), trials: int = 20, seed: int = 9,
                       sizes=(10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)) -> CriterionResult:
    slopes, ok = {}, True
    success = 1.0
    for k in ks:
        cfg = ExperimentConfig("membership-scaling", k, tuple(sizes), trials, seed, "classical", "measured")
        res = run_experiment(cfg)
        slope = res.summary["charged_slope"]
        slopes[k] = slope
        success = min(success, res.summary["success_rate"])
        ok &= abs(slope - (0.5 - 0.5 / k)) <= SLOPE_TOL
    detail = {f"slope_k{k}": s for k, s in slopes.items()}
    detail.update({f"target_k{k}": 0.5 - 0.5 / k for k in ks})
    detail["success_rate"] = success
    return CriterionResult(9, "membership charged-query scaling", ok and success == 1.0, detail)


def query_bound_ratios(instances: int = 200, seed: int = 10) -> list[float]:
    """charged / (log2 |S|)^3 for query-efficient shifted dlog on random instances."""
    rng = _rng(seed)
    ratios = []
    for i in range(instances):
        if i % 2:
            c = int(rng.integers(0, 13))
            t = int(rng.integers(1, 1 << 10))
            h = make_handle(RhoSemigroupSpec(t, 1 << c))
        else:
            total = int(rng.integers(2, 1 << 14))
            t = int(rng.integers(1, total))
            h = make_handle(RhoSemigroupSpec(t, total - t))
        g = h.generator("g")
        o = h.oracle
        size = h.order_bound
        y = o.pow(g, int(rng.integers(1, size)))
        x = o.pow(g, int(rng.integers(1, size)))
        h.reset_meter()
        try:
            shifted_dlog(h, x, y, g, SimMode.SAMPLING, rng, accounting="query-efficient")
        except NoSolution:
            pass
        ratios.append(h.meter.charged_queries / max(1.0, math.log2(size)) ** 3)
    return ratios


def query_efficiency(instances: int = 200, seed: int = 10) -> CriterionResult:
    ratios = query_bound_ratios(instances, seed)
    worst = max(ratios)
    return CriterionResult(10, "query-efficient shifted dlog bound", worst <= QUERY_BOUND_C,
                           {"max_ratio": worst, "C": QUERY_BOUND_C})


ALL = (
    fourier_sampling_bound,
    exact_divisor_case,
    rho_end_to_end,
    dlog_correctness,
    shifted_correctness,
    sieve_growth,
    lex_first_bound_property,
    lower_bound_construction,
    membership_scaling,
    query_efficiency,
)


def fast_subset() -> list[CriterionResult]:
    """Reduced-size versions used by ``sgdlog selftest``."""
    return [
        fourier_sampling_bound(),
        exact_divisor_case(),
        rho_end_to_end(instances=20),
        dlog_correctness(instances=6, foreign=10),
        shifted_correctness(instances=20, trials=2, exhaustive=2),
        lex_first_bound_property(instances=50),
        lower_bound_construction(max_n=3),
        query_efficiency(instances=20),
    ]
