"""Constructive membership in abelian semigroups and the truncated lower-bound family.

``constructive_membership`` writes x as g_1^{a_1} ... g_k^{a_k}.  For each j it
searches the (k-1)-tuples (a_i)_{i != j} with prod (a_i + 1) <= |S|^{(k-1)/k}
and asks a shifted discrete log for a_j.  The search is a Grover search with
an unknown number of marked tuples; how it is charged depends on the mode.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .dlog import semigroup_dlog
from .errors import (
    CapExceeded,
    MalformedSpec,
    ModeUnavailable,
    NoSolution,
    NotAPower,
    NotMember,
    SubroutineFailure,
    TokenBudgetExhausted,
)
from .oracles import SimMode, randbelow
from .semigroup import ElementCode, PowerTable, QueryMeter, SemigroupHandle, _Family, _pack, _width
from .shifted import ACCOUNTING, shifted_dlog

log = logging.getLogger(__name__)

LEX_SCAN_CAP = 10 ** 7
GROVER_STATEVECTOR_MAX = 1 << 16

# unknown-count Grover schedule: iterate count drawn below m, m grows by BBHT_LAMBDA
BBHT_LAMBDA = 6 / 5
# give up once the cumulative iterate count passes BBHT_CUTOFF * sqrt(|space|)
BBHT_CUTOFF = 12.0


@dataclass(frozen=True)
class ExponentVector:
    a: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        if any(v < 0 for v in self.a):
            raise ValueError(f"exponents must be nonnegative: {self.a}")
        if sum(self.a) < 1:
            raise ValueError("at least one exponent must be positive")

    def __iter__(self):
        return iter(self.a)

    def __len__(self):
        return len(self.a)

    def __getitem__(self, i):
        return self.a[i]

    def box_product(self) -> int:
        """prod (a_i + 1)."""
        return math.prod(v + 1 for v in self.a)


def evaluate_word(h: SemigroupHandle, generators: Sequence[ElementCode], a: Sequence[int]) -> ElementCode:
    """g_1^{a_1} ... g_k^{a_k} through the metered handle."""
    out = None
    for g, e in zip(generators, a):
        if e:
            p = h.pow(g, e)
            out = p if out is None else h.product(out, p)
    if out is None:
        raise ValueError("empty product")
    return out


# ---------------------------------------------------------------------------
# Tuple space


def tuple_budget(size: int, k: int) -> int:
    """Least integer B with B >= size^((k-1)/k), computed exactly."""
    if k < 1 or size < 1:
        raise ValueError("need size >= 1 and k >= 1")
    target = size ** (k - 1)
    b = max(1, int(round(size ** ((k - 1) / k))))
    while b ** k < target:
        b += 1
    while b > 1 and (b - 1) ** k >= target:
        b -= 1
    return b


@lru_cache(maxsize=None)
def _count(slots: int, cap: int) -> int:
    """Number of tuples of length ``slots`` with prod (a_i + 1) <= cap."""
    if cap < 1:
        return 0
    if slots == 0:
        return 1
    if slots == 1:
        return cap
    return sum(_count(slots - 1, cap // (a + 1)) for a in range(cap))


class BoundedTupleSpace:
    """Tuples (a_i)_{i != j} with prod (a_i + 1) <= B, in recursive-descent order.

    The first free coordinate runs over 0..B-1; each later one is capped by
    B // prod(chosen + 1).  ``rank`` and ``unrank`` follow that order.
    """

    def __init__(self, k: int, budget: int, excluded: int):
        if not 0 <= excluded < k:
            raise ValueError(f"excluded index {excluded} outside 0..{k - 1}")
        self.k = k
        self.budget = budget
        self.excluded = excluded
        self.slots = k - 1

    def __len__(self) -> int:
        return _count(self.slots, self.budget)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        def walk(slots, cap, prefix):
            if slots == 0:
                yield prefix
                return
            for a in range(cap):
                yield from walk(slots - 1, cap // (a + 1), prefix + (a,))

        yield from walk(self.slots, self.budget, ())

    def unrank(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < len(self):
            raise IndexError(idx)
        out, cap = [], self.budget
        for slots in range(self.slots, 0, -1):
            a = 0
            while True:
                c = _count(slots - 1, cap // (a + 1))
                if idx < c:
                    break
                idx -= c
                a += 1
            out.append(a)
            cap //= a + 1
        return tuple(out)

    def rank(self, tup: Sequence[int]) -> int:
        if len(tup) != self.slots:
            raise ValueError("wrong tuple length")
        idx, cap = 0, self.budget
        for pos, a in enumerate(tup):
            if a >= cap:
                raise ValueError(f"{tuple(tup)} is outside the space")
            slots = self.slots - pos
            idx += sum(_count(slots - 1, cap // (b + 1)) for b in range(a))
            cap //= a + 1
        return idx

    def full(self, tup: Sequence[int], aj: int) -> tuple[int, ...]:
        """Insert a_j at the excluded position."""
        t = list(tup)
        t.insert(self.excluded, aj)
        return tuple(t)

    def others(self) -> list[int]:
        return [i for i in range(self.k) if i != self.excluded]


# ---------------------------------------------------------------------------
# Lexicographic oracle


def _lex_scan(h: SemigroupHandle, generators: Sequence[ElementCode], cap: int, target: ElementCode | None):
    """Scan N_0^k in lex order inside the box a_i < t_i + r_i.

    If a_i >= t_i + r_i then a_i - r_i >= t_i gives the same power and a
    lex-smaller tuple, so every lex-first witness lies in the box.
    """
    o = h.oracle
    k = len(generators)
    bounds = []
    powers = []
    for g in generators:
        t, r = o.orbit_rho(None, g)
        bounds.append(t + r)
    total = math.prod(bounds)
    if total > cap:
        raise CapExceeded(f"lexicographic scan needs {total} tuples, cap is {cap}")
    for g, b in zip(generators, bounds):
        row = [None, g]
        for _ in range(2, b):
            row.append(o.mul(row[-1], g))
        powers.append(row)

    table: dict[bytes, tuple[int, ...]] = {}

    def walk(i, prefix, acc):
        if i == k:
            if acc is None:
                return None
            if target is None:
                table.setdefault(acc, prefix)
                return None
            return prefix if acc == target else None
        for a in range(bounds[i]):
            p = powers[i][a]
            nxt = acc if p is None else (p if acc is None else o.mul(acc, p))
            found = walk(i + 1, prefix + (a,), nxt)
            if found is not None:
                return found
        return None

    found = walk(0, (), None)
    return found if target is not None else table


def lex_first_decomposition_oracle(
    h: SemigroupHandle, x: ElementCode, generators: Sequence[ElementCode], cap: int = LEX_SCAN_CAP
) -> ExponentVector:
    """Lexicographically first exponent tuple with x = prod g_i^{a_i} (unmetered)."""
    found = _lex_scan(h, generators, cap, x)
    if found is None:
        raise NotMember("x is not in the semigroup generated by the given elements")
    return ExponentVector(found)


def lex_first_table(
    h: SemigroupHandle, generators: Sequence[ElementCode], cap: int = LEX_SCAN_CAP
) -> dict[ElementCode, ExponentVector]:
    """Lex-first witness of every member of <generators> (unmetered)."""
    return {c: ExponentVector(a) for c, a in _lex_scan(h, generators, cap, None).items()}


# ---------------------------------------------------------------------------
# Constructive membership


@dataclass
class SearchRecord:
    """What the search over one coordinate j saw and was charged."""

    j: int
    space: int
    hits: int
    per_tuple_cost: int
    iterations: int
    found: bool


@dataclass
class MembershipReport:
    records: list[SearchRecord] = field(default_factory=list)
    bbht_lambda: float = BBHT_LAMBDA
    bbht_cutoff: float = BBHT_CUTOFF


def _predicate(h, x, y, gj, mode, rng, accounting) -> int | None:
    """a_j for this tuple, or None.  ``y=None`` stands for the empty product."""
    if y is None:
        try:
            return semigroup_dlog(h, gj, x, mode, rng)
        except (NotAPower, SubroutineFailure):
            return None
    if x == y:
        return 0
    try:
        return shifted_dlog(h, x, y, gj, mode, rng, accounting=accounting)
    except (NoSolution, TokenBudgetExhausted, SubroutineFailure):
        return None


def _scan(h, x, gens, tables, space, mode, rng, accounting):
    """Evaluate the search predicate on every tuple of ``space``.

    Runs against a scratch meter.  Returns per-tuple answers, the meter and
    the largest single-tuple cost (product queries plus charges), which is
    what one coherent oracle call pays.
    """
    saved = h.meter
    scratch = QueryMeter()
    h.meter = scratch
    gj = gens[space.excluded]
    others = space.others()
    memo: dict[bytes | None, tuple[int | None, int]] = {}
    answers: list[int | None] = []
    worst = 0
    try:
        for tup in space:
            before = scratch.total
            y = None
            for i, a in zip(others, tup):
                if a:
                    y = tables[i].mul_pow(y, a)
            y_cost = scratch.total - before
            if y not in memo:
                before = scratch.total
                aj = _predicate(h, x, y, gj, mode, rng, accounting)
                memo[y] = (aj, scratch.total - before)
            aj, cost = memo[y]
            worst = max(worst, y_cost + cost)
            answers.append(aj)
    finally:
        h.meter = saved
    return answers, scratch, max(worst, 1)


def _grover_probability(iterations: int, hits: int, size: int) -> float:
    theta = math.asin(math.sqrt(hits / size))
    return math.sin((2 * iterations + 1) * theta) ** 2


def _grover_statevector(marked: np.ndarray, iterations: int, rng) -> int:
    size = marked.size
    psi = np.full(size, 1 / math.sqrt(size))
    sign = np.where(marked, -1.0, 1.0)
    for _ in range(iterations):
        psi *= sign
        psi = 2 * psi.mean() - psi
    p = psi * psi
    return int(rng.choice(size, p=p / p.sum()))


def _bbht(marked: np.ndarray, hits: int, mode: SimMode, rng) -> tuple[int | None, int, int]:
    """Unknown-count Grover schedule.

    Returns (measured index or None, total iterates, measurements).
    """
    size = marked.size
    m, total, shots = 1.0, 0, 0
    limit = BBHT_CUTOFF * math.sqrt(size)
    while total <= limit:
        it = int(rng.integers(math.ceil(m)))
        total += it
        shots += 1
        if mode is SimMode.STATEVECTOR:
            idx = _grover_statevector(marked, it, rng)
        else:
            good = hits > 0 and rng.random() < _grover_probability(it, hits, size)
            pool = np.flatnonzero(marked if good else ~marked)
            idx = int(pool[randbelow(rng, pool.size)]) if pool.size else int(randbelow(rng, size))
        if marked[idx]:
            return idx, total, shots
        m = min(BBHT_LAMBDA * m, math.sqrt(size))
    return None, total, shots


def constructive_membership(
    h: SemigroupHandle,
    x: ElementCode,
    generators: Sequence[ElementCode],
    mode: SimMode | str = SimMode.SAMPLING,
    rng: np.random.Generator | None = None,
    *,
    accounting: str = "measured",
    size: int | None = None,
    report: MembershipReport | None = None,
) -> ExponentVector:
    """Exponents (a_1..a_k), sum >= 1, with x = g_1^{a_1} ... g_k^{a_k}.

    ``size`` is |S| or an upper bound for it (default ``h.order_bound``).  The
    semigroup is assumed abelian.  Raises NotMember when every j fails.
    """
    mode = SimMode.parse(mode)
    if accounting not in ACCOUNTING:
        raise ValueError(f"accounting must be one of {ACCOUNTING}, got {accounting!r}")
    rng = rng if rng is not None else np.random.default_rng()
    gens = list(generators)
    k = len(gens)
    if k < 1:
        raise ValueError("need at least one generator")
    size = h.order_bound if size is None else size
    budget = tuple_budget(size, k)
    tables = [PowerTable(h, g) for g in gens]
    # the squares g_i^(2^b), b < bit_length(B), are classical precomputation
    for i, t in enumerate(tables):
        if k > 1:
            t.pow(1 << (budget.bit_length() - 1))

    for j in range(k):
        space = BoundedTupleSpace(k, budget, j)
        if mode is SimMode.STATEVECTOR and len(space) > GROVER_STATEVECTOR_MAX:
            raise ModeUnavailable(f"statevector Grover needs <= 2^16 points, space has {len(space)}")
        answers, scratch, cost = _scan(h, x, gens, tables, space, mode, rng, accounting)
        marked = np.fromiter((a is not None for a in answers), dtype=bool, count=len(answers))
        hits = int(marked.sum())

        if mode is SimMode.CLASSICAL:
            h.meter.product_queries += scratch.product_queries
            h.meter.permutation_queries += scratch.permutation_queries
            iterations = math.ceil(math.pi / 4 * math.sqrt(len(space) / max(1, hits)))
            h.meter.charge(iterations * cost)
            idx = int(np.argmax(marked)) if hits else None
        else:
            idx, iterations, shots = _bbht(marked, hits, mode, rng)
            h.meter.charge((iterations + shots) * cost)

        if report is not None:
            report.records.append(SearchRecord(j, len(space), hits, cost, iterations, idx is not None))
        if idx is None:
            continue
        tup = space.unrank(idx)
        witness = ExponentVector(space.full(tup, answers[idx]))
        # hard postcondition, checked through the metered handle
        if evaluate_word(h, gens, witness.a) != x:
            raise SubroutineFailure(f"witness {witness.a} does not reproduce x")
        return witness
    raise NotMember("no decomposition found for any coordinate")


# ---------------------------------------------------------------------------
# Lower-bound family


def sigma_points(n: int, k: int) -> list[tuple[int, ...]]:
    """Sigma = (k-1)-tuples with sum <= n, in lexicographic order."""
    return [p for p in itertools.product(range(n + 1), repeat=k - 1) if sum(p) <= n]


def lower_bound_size(n: int, k: int) -> int:
    """|S| = number of k-tuples with 1 <= sum <= n, plus the zero."""
    return math.comb(n + k, k)


@dataclass(frozen=True)
class LowerBoundSemigroupSpec:
    """Truncated free abelian semigroup on k generators with zero.

    ``pi`` lists the images of Sigma's points in :func:`sigma_points` order;
    None means the identity permutation.
    """

    n: int
    k: int
    pi: tuple[tuple[int, ...], ...] | None = None


_ZERO, _INTERIOR, _BOUNDARY = 0, 1, 2


class _LowerBoundFamily(_Family):
    name = "lowerbound"

    def __init__(self, spec: LowerBoundSemigroupSpec):
        n, k = spec.n, spec.k
        if n < 1 or k < 2:
            raise MalformedSpec(f"lower-bound semigroup needs n >= 1 and k >= 2, got n={n}, k={k}")
        self.n, self.k = n, k
        self.w = _width(n)
        points = sigma_points(n, k)
        if spec.pi is None:
            images = points
        else:
            images = [tuple(int(v) for v in p) for p in spec.pi]
            if len(images) != len(points) or set(images) != set(points):
                raise MalformedSpec("pi must be a bijection on Sigma")
        self.pi = dict(zip(points, images))
        self.pi_inverse = {v: u for u, v in self.pi.items()}
        self.zero = bytes([_ZERO]) + bytes(self.w * k)
        gens = []
        for i in range(k):
            e = [0] * k
            e[i] = 1
            gens.append(self.element(e))
        self.generators = {f"g{i + 1}": c for i, c in enumerate(gens)}
        self.order_bound = lower_bound_size(n, k)

    # oracle-side encoding (no pi metering)
    def element(self, vec: Sequence[int]) -> bytes:
        s = sum(vec)
        if s < 1 or s > self.n:
            return self.zero
        if s < self.n:
            return bytes([_INTERIOR]) + _pack(vec, self.w)
        return self.boundary(self.pi[tuple(vec[:-1])])

    def boundary(self, sigma: Sequence[int]) -> bytes:
        return bytes([_BOUNDARY]) + _pack(tuple(sigma) + (0,), self.w)

    def _values(self, code: bytes) -> list[int]:
        w = self.w
        if w == 1:
            return list(code[1:])
        return [int.from_bytes(code[i:i + w], "big") for i in range(1, len(code), w)]

    def exponents(self, code: bytes) -> tuple[int, ...] | None:
        """Exponent vector of an element; None for the zero."""
        tag = code[0]
        if tag == _ZERO:
            return None
        vals = self._values(code)
        if tag == _INTERIOR:
            return tuple(vals)
        head = self.pi_inverse[tuple(vals[:-1])]
        return head + (self.n - sum(head),)

    def weight(self, code: bytes) -> int:
        tag = code[0]
        if tag == _ZERO:
            return 0
        if tag == _BOUNDARY:
            return self.n
        return sum(self._values(code))

    def mul(self, a, b, meter=None):
        # boundary times anything nonzero exceeds n, so only interior*interior
        # can land on the boundary, and pi^-1 is never needed
        if a[0] != _INTERIOR or b[0] != _INTERIOR:
            return self.zero
        v = [p + q for p, q in zip(self._values(a), self._values(b))]
        s = sum(v)
        if s > self.n:
            return self.zero
        if s < self.n:
            return bytes([_INTERIOR]) + _pack(v, self.w)
        if meter is not None:
            meter.permutation_queries += 1
        return self.boundary(self.pi[tuple(v[:-1])])

    def describe(self, code):
        e = self.exponents(code)
        return 0 if e is None else list(e)

    def orbit_rho(self, y, g):
        # weights add until they pass n, then everything is the zero
        if g[0] == _ZERO or (y is not None and y[0] == _ZERO):
            return 1, 1
        u = 0 if y is None else self.weight(y)
        return (self.n - u) // self.weight(g) + 1, 1


def build_lower_bound_semigroup(spec: LowerBoundSemigroupSpec, meter: QueryMeter | None = None) -> SemigroupHandle:
    return SemigroupHandle(_LowerBoundFamily(spec), meter)


def random_permutation_spec(n: int, k: int, rng: np.random.Generator) -> LowerBoundSemigroupSpec:
    points = sigma_points(n, k)
    order = rng.permutation(len(points))
    return LowerBoundSemigroupSpec(n, k, tuple(points[i] for i in order))


def boundary_element(h: SemigroupHandle, sigma: Sequence[int]) -> ElementCode:
    """Code whose encoding is sigma, i.e. the element enc^-1(sigma)."""
    return h._family.boundary(tuple(sigma))


@dataclass
class InversionTrial:
    sigma: tuple[int, ...]
    expected: tuple[int, ...]
    recovered: tuple[int, ...] | None
    product_queries: int
    permutation_queries: int
    charged_queries: int

    @property
    def success(self) -> bool:
        return self.recovered == self.expected


def invert_once(
    spec: LowerBoundSemigroupSpec,
    sigma: Sequence[int],
    mode: SimMode | str,
    rng: np.random.Generator,
    accounting: str = "measured",
) -> InversionTrial:
    """Recover pi^-1(sigma) through constructive membership on enc^-1(sigma)."""
    h = build_lower_bound_semigroup(spec)
    fam = h._family
    sigma = tuple(sigma)
    expected = fam.pi_inverse[sigma]
    x = fam.boundary(sigma)
    gens = [h.generators[f"g{i + 1}"] for i in range(spec.k)]
    try:
        w = constructive_membership(h, x, gens, mode, rng, accounting=accounting)
        recovered = w.a[:-1]
    except NotMember:
        recovered = None
    m = h.meter
    return InversionTrial(sigma, expected, recovered, m.product_queries, m.permutation_queries, m.charged_queries)


def permutation_inversion_experiment(
    n: int,
    k: int,
    trials: int,
    rng: np.random.Generator | None = None,
    *,
    mode: SimMode | str = SimMode.CLASSICAL,
    accounting: str = "measured",
) -> dict:
    """Random pi and sigma per trial; membership on enc^-1(sigma) must return pi^-1(sigma)."""
    rng = rng if rng is not None else np.random.default_rng()
    points = sigma_points(n, k)
    if len(points) > 10 ** 6:
        raise CapExceeded(f"|Sigma| = {len(points)} exceeds 10^6")
    rows = []
    for _ in range(trials):
        spec = random_permutation_spec(n, k, rng)
        sigma = points[randbelow(rng, len(points))]
        rows.append(invert_once(spec, sigma, mode, rng, accounting))
    size = lower_bound_size(n, k)
    charged = np.array([r.charged_queries for r in rows], dtype=float)
    perm = np.array([r.permutation_queries for r in rows], dtype=float)
    return {
        "n": n,
        "k": k,
        "size": size,
        "trials": rows,
        "success_rate": sum(r.success for r in rows) / max(1, trials),
        "charged_median": float(np.median(charged)) if trials else 0.0,
        "permutation_median": float(np.median(perm)) if trials else 0.0,
        "reference_curve": size ** (0.5 - 0.5 / k),
    }
