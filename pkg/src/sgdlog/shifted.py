"""Shifted discrete log: find a >= 1 with x = y g^a.

The cycle case is a hidden shift between the two rows f0(j) = y g^(t~ + j)
and f1(j) = x g^j of a function on the dihedral group Z_2 x| Z_r~, solved with
the collimation sieve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .dlog import find_orbit_rho, first_on_cycle
from .errors import NoSolution
from .oracles import HiddenShiftProblem, SieveStats, SimMode, TokenSource, coherent_cost, sieve_solve_shift
from .semigroup import ElementCode, PowerTable, SemigroupHandle

log = logging.getLogger(__name__)

ACCOUNTING = ("measured", "query-efficient")

# coset samples per bit of the order charged for the query-efficient DHSP route
QUERY_EFFICIENT_SAMPLES_PER_BIT = 4


@dataclass(frozen=True)
class ShiftedRho:
    """Index and period of j -> y g^j."""

    t: int
    r: int


def find_shifted_rho(
    h: SemigroupHandle,
    y: ElementCode,
    g: ElementCode,
    mode: SimMode | str = SimMode.SAMPLING,
    rng: np.random.Generator | None = None,
    *,
    table: PowerTable | None = None,
) -> ShiftedRho:
    rho = find_orbit_rho(h, g, y, mode, rng, table=table)
    return ShiftedRho(rho.t, rho.r)


class HiddenShiftInstance(HiddenShiftProblem):
    """Rows f0(j) = y g^(t~ + j) and f1(j) = x g^j over Z_r~.

    When x is on the cycle, f1(j) = f0(j + shift).  The shift is located by
    the simulator (unmetered) only to prepare coset states; the solver sees
    the rows through the metered handle and the tokens.
    """

    def __init__(self, h: SemigroupHandle, x, y, g, srho: ShiftedRho, table: PowerTable | None = None):
        self.h = h
        self.x, self.y, self.g = x, y, g
        self.srho = srho
        self.order = srho.r
        self.table = table if table is not None else PowerTable(h, g)
        self._shift_cache: tuple[int | None] | None = None

    def f0(self, j: int) -> ElementCode:
        return self.table.mul_pow(self.y, self.srho.t + j % self.order)

    def f1(self, j: int) -> ElementCode:
        j %= self.order
        return self.x if j == 0 else self.table.mul_pow(self.x, j)

    def f0_iter(self):
        z = self.f0(0)
        for _ in range(self.order):
            yield z
            z = self.h.product(z, self.g)

    def _shift(self) -> int | None:
        if self._shift_cache is None:
            o = self.h.oracle
            z = o.mul(self.y, o.pow(self.g, self.srho.t))
            found = None
            for ell in range(self.order):
                if z == self.x:
                    found = ell
                    break
                z = o.mul(z, self.g)
            self._shift_cache = (found,)
        return self._shift_cache[0]

    def token_source(self, mode, rng, budget=None, *, charge: bool = True) -> TokenSource:
        cost = coherent_cost(self.srho.t + self.srho.r) + 1 if charge else 0
        return TokenSource(self.order, self._shift(), mode, rng, meter=self.h.meter, cost_per_token=cost, budget=budget)


class _Uncharged(HiddenShiftInstance):
    def token_source(self, mode, rng, budget=None, *, charge: bool = False):
        return super().token_source(mode, rng, budget, charge=False)


def query_efficient_charge(srho: ShiftedRho) -> int:
    """Charge for the query-efficient DHSP route: O(log r~) coherent evaluations."""
    bits = max(1, math.ceil(math.log2(srho.r))) if srho.r > 1 else 1
    return QUERY_EFFICIENT_SAMPLES_PER_BIT * bits * (coherent_cost(srho.t + srho.r) + 1)


def shifted_dlog(
    h: SemigroupHandle,
    x: ElementCode,
    y: ElementCode,
    g: ElementCode,
    mode: SimMode | str = SimMode.SAMPLING,
    rng: np.random.Generator | None = None,
    *,
    accounting: str = "measured",
    budget: int | None = None,
    srho: ShiftedRho | None = None,
    stats: SieveStats | None = None,
) -> int:
    """Least a >= 1 with x == y g^a; raises NoSolution when none exists.

    Under ``accounting="query-efficient"`` the sieve's per-token charges are
    replaced by the polylogarithmic charge of a query-efficient DHSP routine.
    """
    mode = SimMode.parse(mode)
    if accounting not in ACCOUNTING:
        raise ValueError(f"accounting must be one of {ACCOUNTING}, got {accounting!r}")
    rng = rng if rng is not None else np.random.default_rng()
    table = PowerTable(h, g)
    if srho is None:
        srho = find_shifted_rho(h, y, g, mode, rng, table=table)
    t, r = srho.t, srho.r
    N = h.order_bound
    gr = table.pow(r)

    if h.product(x, gr) != x:
        # tail: x = y g^a with a < t~; x g^p reaches the cycle first at p = t~ - a
        p = first_on_cycle(h, table, x, gr, N)
        if p is None:
            raise NoSolution("x g^N is not on the cycle of y g^j")
        a = t - p
        if a >= 1 and table.mul_pow(y, a) == x:
            return a
        raise NoSolution("x is not of the form y g^a")

    cls = _Uncharged if accounting == "query-efficient" else HiddenShiftInstance
    inst = cls(h, x, y, g, srho, table)
    ell = sieve_solve_shift(inst, mode, rng, budget=budget, stats=stats)
    if accounting == "query-efficient" and mode is not SimMode.CLASSICAL and r > 1:
        h.meter.charge(query_efficient_charge(srho))
    if ell is None:
        raise NoSolution("no shift maps the cycle of y g^j onto x")
    a = t + ell
    if table.mul_pow(y, a) != x:
        raise NoSolution("verification y g^a == x failed")
    return a
