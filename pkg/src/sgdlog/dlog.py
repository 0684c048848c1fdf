"""Index and period of an element, and discrete logarithms in semigroups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InconsistentRho, ModeUnavailable, NotAPower, NotInGroup, SubroutineFailure
from .oracles import (
    MAX_ROUNDS,
    PeriodSamplingInstance,
    SimMode,
    STATEVECTOR_MAX_DIM,
    coherent_cost,
    fourier_modulus,
    fourier_sample_period,
    recover_period,
    shor_dlog_cyclic,
)
from .semigroup import ElementCode, PowerTable, SemigroupHandle


@dataclass(frozen=True)
class RhoStructure:
    """Index ``t`` and period ``r`` of an element, found under order bound ``N``."""

    t: int
    r: int
    N: int

    def __post_init__(self):
        if self.t < 1 or self.r < 1:
            raise ValueError(f"index and period must be positive: {self}")


@dataclass(frozen=True)
class CycleGroupView:
    rho: RhoStructure
    s: int
    identity: ElementCode
    generator: ElementCode
    generator_inverse: ElementCode


def first_true(pred: Callable[[int], bool], hi: int) -> int:
    """Least j in [1, hi] with pred(j), for pred monotone and pred(hi) true.

    Doubling probes bracket the answer, then bisection; O(log answer) calls.
    """
    lo, probe = 0, 1
    while probe < hi and not pred(probe):
        lo, probe = probe, min(hi, 2 * probe)
    while probe - lo > 1:
        mid = (lo + probe) // 2
        if pred(mid):
            probe = mid
        else:
            lo = mid
    return probe


def first_on_cycle(
    h: SemigroupHandle, table: PowerTable, y: ElementCode | None, gr: ElementCode, hi: int
) -> int | None:
    """Least j in [1, hi] with y g^j on the cycle, i.e. y g^j g^r == y g^j.

    Galloping over j = 1, 2, 4, ... then binary lifting on the cached squares
    of g, so each probe costs two products.  None if y g^hi is off the cycle.
    """
    def on(e):
        return h.product(e, gr) == e

    lo, e_lo = 0, y
    pos, e = 1, table.mul_pow(y, 1)
    while not on(e):
        if pos >= hi:
            return None
        nxt = min(2 * pos, hi)
        lo, e_lo = pos, e
        e = table.mul_pow(e, nxt - pos)
        pos = nxt
    # answer in (lo, pos]; find the largest off-cycle position below pos
    for b in range((pos - lo).bit_length() - 1, -1, -1):
        if lo + (1 << b) < pos:
            cand = table.mul_pow(e_lo, 1 << b)
            if not on(cand):
                lo, e_lo = lo + (1 << b), cand
    return lo + 1


def gamma(h: SemigroupHandle, g: ElementCode, period: int, e: ElementCode, table: PowerTable | None = None) -> int:
    """1 if e g^period == e (e lies on the cycle), else 0."""
    gr = table.pow(period) if table is not None else h.pow(g, period)
    return int(h.product(e, gr) == e)


def _rng(rng) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


def _quantum_period(h, g, y, N, mode, rng, validates) -> int:
    t_true, r_true = h.oracle.orbit_rho(y, g)
    M = fourier_modulus(N)
    if mode is SimMode.STATEVECTOR and M > STATEVECTOR_MAX_DIM:
        raise ModeUnavailable(f"statevector period finding needs M <= 2^22; N={N} gives M={M}")
    inst = PeriodSamplingInstance(M, t_true, r_true)
    cost = coherent_cost(M) + (y is not None)
    for _ in range(MAX_ROUNDS):
        h.meter.charge(cost)
        k, tail = fourier_sample_period(inst, mode, rng)
        if tail:
            continue
        r = recover_period([k], M, N, validate=validates)
        if r is not None:
            return r
    raise SubroutineFailure(f"period finding failed in {MAX_ROUNDS} rounds")


def find_orbit_rho(
    h: SemigroupHandle,
    g: ElementCode,
    y: ElementCode | None = None,
    mode: SimMode | str = SimMode.SAMPLING,
    rng: np.random.Generator | None = None,
    *,
    table: PowerTable | None = None,
) -> RhoStructure:
    """Index and period of j -> y g^j (of j -> g^j when ``y`` is None)."""
    mode = SimMode.parse(mode)
    rng = _rng(rng)
    N = h.order_bound
    table = table if table is not None else PowerTable(h, g)
    z = table.mul_pow(y, N)  # N >= index, so z is on the cycle
    checked: dict[int, bool] = {}

    def validates(q: int) -> bool:
        if q not in checked:
            checked[q] = table.mul_pow(z, q) == z
        return checked[q]

    if validates(1):
        r = 1
    elif mode is SimMode.CLASSICAL:
        w, r = h.product(z, g), 1
        while w != z:
            w, r = h.product(w, g), r + 1
    else:
        r = _quantum_period(h, g, y, N, mode, rng, validates)

    t = first_on_cycle(h, table, y, table.pow(r), N)
    if t is None:
        raise InconsistentRho(f"y g^N is off the cycle for period {r}")
    return RhoStructure(t, r, N)


def find_rho(
    h: SemigroupHandle,
    g: ElementCode,
    mode: SimMode | str = SimMode.SAMPLING,
    rng: np.random.Generator | None = None,
    *,
    table: PowerTable | None = None,
) -> RhoStructure:
    """Index and period of g: period by Fourier sampling, index by search on gamma."""
    return find_orbit_rho(h, g, None, mode, rng, table=table)


def cycle_view(h: SemigroupHandle, g: ElementCode, rho: RhoStructure, table: PowerTable | None = None) -> CycleGroupView:
    """The cycle of g as a cyclic group: identity g^(t+s), generator g^(t+s+1)."""
    table = table if table is not None else PowerTable(h, g)
    t, r = rho.t, rho.r
    s = (-t) % r
    identity = table.pow(t + s)
    generator = table.pow(t + s + 1)
    inverse = table.pow(t + s + r - 1)
    if h.product(generator, inverse) != identity:
        raise InconsistentRho(f"generator * inverse != identity for {rho}")
    return CycleGroupView(rho, s, identity, generator, inverse)


def semigroup_dlog(
    h: SemigroupHandle,
    g: ElementCode,
    x: ElementCode,
    mode: SimMode | str = SimMode.SAMPLING,
    rng: np.random.Generator | None = None,
    *,
    rho: RhoStructure | None = None,
) -> int:
    """Least a >= 1 with g^a == x; raises NotAPower when there is none."""
    mode = SimMode.parse(mode)
    rng = _rng(rng)
    table = PowerTable(h, g)
    if rho is None:
        rho = find_rho(h, g, mode, rng, table=table)
    t, r, N = rho.t, rho.r, rho.N
    gr = table.pow(r)

    if h.product(x, gr) == x:
        view = cycle_view(h, g, rho, table)
        try:
            ell = shor_dlog_cyclic(h, view.generator, x, r, view.identity, view.generator_inverse, mode, rng)
        except NotInGroup:
            raise NotAPower("x lies on a cycle but is not a power of g") from None
        a = t + (view.s + ell) % r
    else:
        p = first_on_cycle(h, table, x, gr, N)
        if p is None:
            raise NotAPower("x g^N is not on the cycle of g")
        a = t - p
        if a < 1:
            raise NotAPower("x is not a power of g")
    if table.pow(a) != x:
        raise NotAPower("verification g^a == x failed")
    return a
