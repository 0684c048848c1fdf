import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgdlog import (
    InconsistentRho,
    MatrixSemigroupSpec,
    NotAPower,
    RhoSemigroupSpec,
    RhoStructure,
    SimMode,
    TransformationSemigroupSpec,
    find_rho,
    make_handle,
    semigroup_dlog,
)
from sgdlog.dlog import cycle_view, first_on_cycle, first_true, gamma
from sgdlog.semigroup import PowerTable, brute_force_rho

MODES = list(SimMode)
# frozen from scripts/calibrate_dlog_queries.py: largest ratio 0.78 over 1600 instances
DLOG_QUERY_C = 1.0

F = TransformationSemigroupSpec(4, ((2, 3, 4, 3),))


def test_gamma_examples():
    h = make_handle(RhoSemigroupSpec(1, 1))
    g = h.generator("g")
    assert gamma(h, g, 1, g) == 1
    h = make_handle(RhoSemigroupSpec(3, 4))
    g = h.generator("g")
    assert gamma(h, g, 4, h.pow(g, 2)) == 0
    assert gamma(h, g, 4, h.pow(g, 3)) == 1
    h = make_handle(F)
    f = h.generator("g")
    assert gamma(h, f, 2, f) == 0
    assert gamma(h, f, 2, h.pow(f, 2)) == 1


def test_gamma_list_is_monotone():
    rng = np.random.default_rng(0)
    for _ in range(20):
        t, r = int(rng.integers(1, 200)), int(rng.integers(1, 200))
        h = make_handle(RhoSemigroupSpec(t, r))
        g = h.generator("g")
        for j in rng.integers(1, t + r + 1, size=64):
            assert gamma(h, g, r, h.pow(g, int(j))) == int(j >= t)


@given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6))
def test_first_true(ans, extra):
    hi = ans + extra - 1
    calls = []

    def pred(j):
        calls.append(j)
        return j >= ans

    assert first_true(pred, hi) == ans
    assert len(calls) <= 2 * math.log2(ans + 1) + 3


@pytest.mark.parametrize("t,r", [(1, 1), (1, 9), (6, 1), (37, 20), (500, 3)])
def test_first_on_cycle(t, r):
    h = make_handle(RhoSemigroupSpec(t, r))
    g = h.generator("g")
    tab = PowerTable(h, g)
    gr = tab.pow(r)
    assert first_on_cycle(h, tab, None, gr, t + r) == t
    y = h.pow(g, 2)
    assert first_on_cycle(h, tab, y, gr, t + r) == max(1, t - 2)


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("t,r", [(1, 1), (7, 12), (3, 4), (1, 64), (300, 1)])
def test_find_rho_rho_family(mode, t, r):
    h = make_handle(RhoSemigroupSpec(t, r))
    rho = find_rho(h, h.generator("g"), mode, np.random.default_rng(t * r))
    assert (rho.t, rho.r, rho.N) == (t, r, t + r)


@pytest.mark.parametrize("mode", MODES)
def test_find_rho_other_families(mode):
    rng = np.random.default_rng(1)
    h = make_handle(MatrixSemigroupSpec(1, 7, (((3,),),)))
    rho = find_rho(h, h.generator("g"), mode, rng)
    assert (rho.t, rho.r) == (1, 6)
    h = make_handle(F)
    rho = find_rho(h, h.generator("g"), mode, rng)
    assert (rho.t, rho.r) == (2, 2)


def test_rho_structure_rejects_nonsense():
    with pytest.raises(ValueError):
        RhoStructure(0, 1, 2)


def test_cycle_view_examples():
    h = make_handle(RhoSemigroupSpec(1, 1))
    g = h.generator("g")
    v = cycle_view(h, g, RhoStructure(1, 1, 2))
    assert v.s == 0 and v.identity == v.generator == v.generator_inverse == g

    h = make_handle(RhoSemigroupSpec(3, 4))
    g = h.generator("g")
    v = cycle_view(h, g, RhoStructure(3, 4, 7))
    o = h.oracle
    assert v.s == 1
    assert (v.identity, v.generator, v.generator_inverse) == (o.pow(g, 4), o.pow(g, 5), o.pow(g, 7))
    for j in range(3, 7):
        c = o.pow(g, j)
        assert o.mul(v.identity, c) == c
        assert o.mul(v.generator, c) == o.pow(g, j + 1)

    h = make_handle(F)
    f = h.generator("g")
    v = cycle_view(h, f, RhoStructure(2, 2, 4))
    assert v.s == 0 and v.identity == h.oracle.pow(f, 2)
    assert v.generator == v.generator_inverse == h.oracle.pow(f, 3)


def test_cycle_view_flags_wrong_rho():
    h = make_handle(RhoSemigroupSpec(3, 4))
    with pytest.raises(InconsistentRho):
        cycle_view(h, h.generator("g"), RhoStructure(3, 3, 7))


@pytest.mark.parametrize("mode", MODES)
def test_dlog_examples(mode):
    rng = np.random.default_rng(2)
    h = make_handle(RhoSemigroupSpec(5, 3))
    g = h.generator("g")
    assert semigroup_dlog(h, g, g, mode, rng) == 1
    assert semigroup_dlog(h, g, h.pow(g, 9), mode, rng) == 6
    assert semigroup_dlog(h, g, h.pow(g, 2), mode, rng) == 2
    # the bracket-zero boundary: x = g^t itself
    h = make_handle(RhoSemigroupSpec(4, 4))
    g = h.generator("g")
    assert semigroup_dlog(h, g, h.pow(g, 4), mode, rng) == 4


@pytest.mark.parametrize("mode", MODES)
def test_dlog_exhaustive_small(mode):
    rng = np.random.default_rng(3)
    for spec in (RhoSemigroupSpec(9, 10), F, TransformationSemigroupSpec(7, ((2, 3, 1, 5, 6, 7, 4),)),
                 MatrixSemigroupSpec(1, 31, (((3,),),)), MatrixSemigroupSpec(1, 48, (((6,),),))):
        h = make_handle(spec)
        g = h.generator("g")
        t, r = brute_force_rho(h.oracle.mul, g)
        rho = find_rho(h, g, mode, rng)
        for a in range(1, t + r):
            assert semigroup_dlog(h, g, h.oracle.pow(g, a), mode, rng, rho=rho) == a


@pytest.mark.parametrize("mode", MODES)
def test_dlog_foreign(mode):
    rng = np.random.default_rng(4)
    h = make_handle(MatrixSemigroupSpec(1, 7, (((2,),),)))
    g = h.generator("g")
    for v in (3, 5, 6, 0):
        with pytest.raises(NotAPower):
            semigroup_dlog(h, g, h._family.encode([v]), mode, rng)
    # a tail element of another map that still lands on the cycle
    h = make_handle(TransformationSemigroupSpec(3, ((2, 2, 3), (1, 1, 3))))
    with pytest.raises(NotAPower):
        semigroup_dlog(h, h.generator("g1"), h.generator("g2"), mode, rng)


def test_dlog_cycle_absorbed_foreign():
    # x g^r = x but x is not a power of g
    h = make_handle(TransformationSemigroupSpec(4, ((2, 1, 3, 4), (1, 2, 4, 3))))
    with pytest.raises(NotAPower):
        semigroup_dlog(h, h.generator("g1"), h.generator("g2"), SimMode.SAMPLING, np.random.default_rng(0))


def test_query_count_polylog():
    rng = np.random.default_rng(11)
    for _ in range(60):
        total = int(rng.integers(64, 1 << 16))
        t = int(rng.integers(1, total))
        h = make_handle(RhoSemigroupSpec(t, total - t))
        g = h.generator("g")
        bound = DLOG_QUERY_C * math.log2(h.order_bound) ** 3
        rho = find_rho(h, g, SimMode.SAMPLING, rng)
        assert h.meter.total <= bound
        h.reset_meter()
        semigroup_dlog(h, g, h.oracle.pow(g, int(rng.integers(1, total))), SimMode.SAMPLING, rng, rho=rho)
        assert h.meter.total <= bound


def test_statevector_refuses_large_modulus():
    from sgdlog import ModeUnavailable
    h = make_handle(RhoSemigroupSpec(3000, 97))
    with pytest.raises(ModeUnavailable):
        find_rho(h, h.generator("g"), SimMode.STATEVECTOR, np.random.default_rng(0))
