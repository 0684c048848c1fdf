import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from sgdlog import InsufficientSamples, ModeUnavailable, RhoSemigroupSpec, SimMode, TokenBudgetExhausted, make_handle
from sgdlog.errors import NotInGroup
from sgdlog.oracles import (
    PeriodSamplingInstance,
    SieveStats,
    SieveToken,
    SyntheticShift,
    TokenSource,
    _statevector_pmf,
    coherent_cost,
    combine_tokens,
    convergents,
    descend_token,
    fourier_modulus,
    fourier_sample_period,
    level_batch_size,
    measure_token,
    nearest_peak_mass,
    period_pmf,
    period_probability,
    recover_period,
    sample_period_outcome,
    shor_dlog_cyclic,
    sieve_solve_shift,
    stage_boundaries,
)


def test_fourier_modulus():
    for N in (1, 2, 7, 30, 1000, 2 ** 33):
        M = fourier_modulus(N)
        assert M > N * N + N and M & (M - 1) == 0 and M // 2 <= N * N + N


def test_period_one_only_dc():
    p = period_pmf(64, 1, 64)
    assert p[0] == pytest.approx(1.0) and p[1:].sum() == pytest.approx(0.0)
    rng = np.random.default_rng(0)
    for mode in (SimMode.SAMPLING, SimMode.STATEVECTOR):
        assert {sample_period_outcome(64, 1, 1, mode, rng) for _ in range(20)} == {0}


def test_divisor_case_t4():
    inst = PeriodSamplingInstance(16, 4, 4, x0=4)
    L = inst.support_size()
    assert L == 4
    p = period_pmf(16, 4, L)
    np.testing.assert_allclose(p, [0.25 if k % 4 == 0 else 0.0 for k in range(16)], atol=1e-12)


@pytest.mark.parametrize("x0", [1, 2, 3, 4, 5])
def test_peak_mass_r5(x0):
    M = 1 << 10
    assert nearest_peak_mass(M, 5, (M - x0) // 5 + 1) >= 4 / math.pi ** 2


@given(st.integers(4, 16).flatmap(lambda b: st.tuples(st.just(1 << b), st.integers(1, (1 << b) // 2))),
       st.integers(0, 50))
def test_pmf_sums_to_one(Mr, off):
    M, r = Mr
    x0 = 1 + off % r
    L = (M - x0) // r + 1
    assert period_pmf(M, r, L).sum() == pytest.approx(1.0, abs=1e-9)


@given(st.integers(1, 100), st.integers(1, 1000), st.integers(0, 1 << 12))
def test_pointwise_matches_vector(r, Lraw, k):
    M = 1 << 12
    L = 1 + Lraw % (M // r)
    assert period_probability(k % M, M, r, L) == pytest.approx(period_pmf(M, r, L)[k % M], abs=1e-12)


def test_statevector_pmf_matches_formula():
    for M, r, L in [(256, 7, 36), (512, 12, 40), (1024, 3, 341)]:
        np.testing.assert_allclose(_statevector_pmf(M, r, L), period_pmf(M, r, L), atol=1e-12)


def _pooled_chi2(counts, expected):
    order = np.argsort(expected)
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for i in order:
        o_acc += counts[i]
        e_acc += expected[i]
        if e_acc >= 5:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    obs[-1] += o_acc
    exp[-1] += e_acc
    return stats.chisquare(obs, exp).pvalue


@pytest.mark.parametrize("M,r,x0", [(1 << 12, 7, 3), (1 << 10, 12, 5), (1 << 12, 100, 40)])
def test_sampling_matches_statevector(M, r, x0):
    rng = np.random.default_rng(M + r)
    n = 10 ** 5
    L = (M - x0) // r + 1
    counts = np.zeros(M)
    for _ in range(n):
        counts[sample_period_outcome(M, r, x0, SimMode.SAMPLING, rng)] += 1
    p = _pooled_chi2(counts, n * _statevector_pmf(M, r, L))
    assert p > 0.001


def test_tail_event_rate():
    rng = np.random.default_rng(1)
    inst = PeriodSamplingInstance(64, 17, 5)
    n = 20000
    tails = sum(fourier_sample_period(inst, SimMode.SAMPLING, rng)[1] for _ in range(n))
    assert abs(tails / n - 16 / 64) < 0.015


def test_statevector_cap():
    inst = PeriodSamplingInstance(1 << 23, 1, 3)
    with pytest.raises(ModeUnavailable):
        fourier_sample_period(inst, SimMode.STATEVECTOR, np.random.default_rng())
    with pytest.raises(ModeUnavailable):
        sample_period_outcome(16, 4, 1, SimMode.CLASSICAL, np.random.default_rng())


def test_convergents():
    assert list(convergents(205, 1024))[:3] == [(0, 1), (1, 4), (1, 5)]


def test_recover_period_examples():
    assert recover_period([0], 1024, 30) is None
    assert recover_period([205], 1024, 30) == 5
    assert recover_period([4, 8, 12], 16, 4) == 4
    with pytest.raises(InsufficientSamples):
        recover_period([], 16, 4)


@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 2 ** 31))
def test_recovered_period_never_undercuts(t, r, seed):
    # any validated candidate is a multiple of the true period
    N = t + r
    M = fourier_modulus(N)
    rng = np.random.default_rng(seed)
    inst = PeriodSamplingInstance(M, t, r)
    k, tail = fourier_sample_period(inst, SimMode.SAMPLING, rng)
    if tail:
        return
    got = recover_period([k], M, N, validate=lambda q: q % r == 0)
    assert got is None or got % r == 0 and got >= r


def _z7():
    from sgdlog import MatrixSemigroupSpec
    h = make_handle(MatrixSemigroupSpec(1, 7, (((3,),),)))
    f = h._family
    return h, f.encode([3]), f.encode([1]), f.encode([5])


@pytest.mark.parametrize("mode", list(SimMode))
def test_shor_z7(mode):
    h, g, one, inv = _z7()
    rng = np.random.default_rng(2)
    assert shor_dlog_cyclic(h, g, h._family.encode([6]), 6, one, inv, mode, rng) == 3
    assert shor_dlog_cyclic(h, g, one, 6, one, inv, mode, rng) == 0


@pytest.mark.parametrize("mode", [SimMode.SAMPLING, SimMode.CLASSICAL])
def test_shor_foreign_target(mode):
    from sgdlog import MatrixSemigroupSpec
    h = make_handle(MatrixSemigroupSpec(1, 7, (((2,),),)))  # <2> = {1, 2, 4}
    f = h._family
    with pytest.raises(NotInGroup):
        shor_dlog_cyclic(h, f.encode([2]), f.encode([3]), 3, f.encode([1]), f.encode([4]), mode,
                         np.random.default_rng(0))


def test_shor_retries_r12():
    h = make_handle(RhoSemigroupSpec(1, 12))
    g = h.generator("g")
    one = h.oracle.pow(g, 12)
    inv = h.oracle.pow(g, 11)
    rng = np.random.default_rng(3)
    per_draw = 2 * coherent_cost(12) + 1
    draws = []
    for _ in range(300):
        a = int(rng.integers(12))
        target = h.oracle.pow(g, a) if a else one
        h.reset_meter()
        assert shor_dlog_cyclic(h, g, target, 12, one, inv, SimMode.SAMPLING, rng) == a
        if a:
            draws.append(h.meter.charged_queries / per_draw)
    # expected draws r / phi(r) = 3
    assert np.mean(draws) <= 3.5


def test_combine_rule():
    rng = np.random.default_rng(4)
    n = 1 << 6
    for shift in (0, 5, 33):
        plus = 0
        trials = 10 ** 4
        for _ in range(trials):
            k1, k2 = int(rng.integers(n)), int(rng.integers(n))
            t1 = SieveToken(k1, n, phase=(k1 * shift) % n, top=n)
            t2 = SieveToken(k2, n, phase=(k2 * shift) % n, top=n)
            out = combine_tokens(t1, t2, rng)
            assert out.label in ((k1 + k2) % n, (k1 - k2) % n)
            assert out._phase == (out.label * shift) % n
            if (k1 + k2) % n != (k1 - k2) % n:
                plus += out.label == (k1 + k2) % n
            else:
                plus += rng.random() < 0.5
        assert abs(plus / trials - 0.5) < 0.02


def test_combine_statevector_frequency():
    rng = np.random.default_rng(5)
    src = TokenSource(16, 11, SimMode.STATEVECTOR, rng, budget=10 ** 6)
    plus = trials = 0
    while trials < 4000:
        a, b = src.draw(), src.draw()
        if (a.label + b.label) % 16 == (a.label - b.label) % 16:
            continue
        out = combine_tokens(a, b, rng)
        plus += out.label == (a.label + b.label) % 16
        trials += 1
    assert abs(plus / trials - 0.5) < 0.03


def test_half_label_gives_parity():
    rng = np.random.default_rng(6)
    for shift in range(8):
        tok = SieveToken(4, 8, phase=(4 * shift) % 8, top=8)
        assert {measure_token(tok, rng) for _ in range(10)} == {shift % 2}


def test_smallest_dihedral_case():
    rng = np.random.default_rng(7)
    tok = SieveToken(1, 2, phase=1, top=2)
    assert measure_token(tok, rng) == 1
    assert sieve_solve_shift(SyntheticShift(2, 1), SimMode.SAMPLING, rng) == 1


def test_descend_removes_bit():
    n, shift = 16, 11
    tok = SieveToken(6, n, phase=(6 * shift) % n, top=n)
    low = descend_token(tok, shift & 1)
    assert low.modulus == 8 and low.label == 6
    # phase is now label * (shift >> 1) in units of 1/8, i.e. twice that in 1/16
    assert Fraction(low._phase, n) % 1 == Fraction(6 * (shift >> 1), 8) % 1


@pytest.mark.parametrize("mode", [SimMode.SAMPLING, SimMode.STATEVECTOR, SimMode.CLASSICAL])
def test_sieve_r8_shift5(mode):
    stats_ = SieveStats()
    assert sieve_solve_shift(SyntheticShift(8, 5), mode, np.random.default_rng(8), stats=stats_) == 5
    if mode is not SimMode.CLASSICAL:
        assert stats_.bits == (1, 0, 1)


@given(st.integers(1, 10), st.integers(0, 2 ** 20), st.integers(0, 2 ** 31))
def test_sieve_recovers_shift(c, shift, seed):
    n = 1 << c
    rng = np.random.default_rng(seed)
    try:
        assert sieve_solve_shift(SyntheticShift(n, shift), SimMode.SAMPLING, rng) == shift % n
    except TokenBudgetExhausted:
        pass


def test_sieve_statevector_matches_sampling_on_small_orders():
    rng = np.random.default_rng(9)
    for shift in range(32):
        assert sieve_solve_shift(SyntheticShift(32, shift), SimMode.STATEVECTOR, rng) == shift


def test_token_budget():
    with pytest.raises(TokenBudgetExhausted):
        sieve_solve_shift(SyntheticShift(1 << 10, 3), SimMode.SAMPLING, np.random.default_rng(0), budget=10)


def test_non_power_of_two_falls_back():
    stats_ = SieveStats()
    assert sieve_solve_shift(SyntheticShift(12, 7), SimMode.SAMPLING, np.random.default_rng(0), stats=stats_) == 7
    assert stats_.fallback


def test_stage_and_batch_shapes():
    for m in range(1, 16):
        b = stage_boundaries(m)
        assert b[0] == 0 and b[-1] == max(0, m - 1)
        assert all(x < y for x, y in zip(b, b[1:])) or m <= 1
        assert level_batch_size(m) >= level_batch_size(max(1, m - 1))
