"""Simulated quantum subroutines.

Three fidelity modes are supported:

* ``STATEVECTOR`` builds amplitude vectors and applies FFTs (small instances).
* ``SAMPLING`` draws measurement outcomes from the exact output distribution.
* ``CLASSICAL`` replaces the quantum step by a classical search.

The simulator side reads ground truth (index, period, hidden exponent, hidden
shift) through :class:`~sgdlog.semigroup.SemigroupOracle`; the algorithm side
only sees measurement outcomes and the metered black box.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import InsufficientSamples, ModeUnavailable, NotInGroup, TokenBudgetExhausted
from .semigroup import ElementCode, QueryMeter, SemigroupHandle

log = logging.getLogger(__name__)

STATEVECTOR_MAX_DIM = 1 << 22
SHOR_STATEVECTOR_MAX_ORDER = 1 << 10
MAX_ROUNDS = 32


class SimMode(enum.Enum):
    STATEVECTOR = "statevector"
    SAMPLING = "sampling"
    CLASSICAL = "classical"

    @classmethod
    def parse(cls, value: "SimMode | str") -> "SimMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown mode {value!r}; expected one of {[m.value for m in cls]}") from None


def fourier_modulus(N: int) -> int:
    """Least power of two M with M > N^2 + N."""
    return 1 << (N * N + N).bit_length()


def coherent_cost(exponent_bound: int) -> int:
    """Product queries charged for one coherent evaluation of j -> y g^j, j < bound."""
    return 2 * max(1, exponent_bound.bit_length()) + 1


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [0, n) for arbitrary-precision n."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n <= (1 << 62):
        return int(rng.integers(0, n))
    nbits = n.bit_length()
    nbytes = (nbits + 7) // 8
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - nbits)
        if v < n:
            return v


# ---------------------------------------------------------------------------
# Period finding over Z_M


@dataclass(frozen=True)
class PeriodSamplingInstance:
    """Fourier sampling of j -> g^j over j in {1..M}.

    ``x0`` pins the second-register outcome (a cycle offset in {t..t+r-1});
    leave it ``None`` to sample the full process, tail events included.
    """

    M: int
    t: int
    r: int
    x0: int | None = None

    def __post_init__(self):
        if self.t < 1 or self.r < 1 or self.M < self.t + self.r - 1:
            raise ValueError(f"invalid instance {self}")
        if self.x0 is not None and not (self.t <= self.x0 < self.t + self.r):
            raise ValueError(f"x0={self.x0} outside the cycle offsets [{self.t}, {self.t + self.r})")

    def support_size(self, x0: int | None = None) -> int:
        x0 = self.x0 if x0 is None else x0
        return (self.M - x0) // self.r + 1


def period_probability(k: int, M: int, r: int, L: int) -> float:
    """Pr(k) = sin^2(pi k r L / M) / (L M sin^2(pi k r / M)); L/M when M | k r."""
    num = (k * r) % M
    if num == 0:
        return L / M
    a = math.sin(math.pi * ((num * L) % M) / M)
    b = math.sin(math.pi * num / M)
    return (a * a) / (L * M * b * b)


def period_pmf(M: int, r: int, L: int) -> np.ndarray:
    """Vector of period_probability over all k in Z_M (M must fit in memory)."""
    k = np.arange(M, dtype=np.int64)
    num = (k * r) % M
    numL = (num.astype(object) * L % M).astype(np.float64) if M * L >= 2**62 else (num * L) % M
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.sin(np.pi * numL / M)
        b = np.sin(np.pi * num / M)
        p = (a * a) / (L * M * b * b)
    p[num == 0] = L / M
    return p


def nearest_peak_mass(M: int, r: int, L: int) -> float:
    """Probability of the closest integers to the r multiples of M/r."""
    ks = {((2 * c * M + r) // (2 * r)) % M for c in range(r)}
    return math.fsum(period_probability(k, M, r, L) for k in ks)


@lru_cache(maxsize=8)
def _statevector_pmf(M: int, r: int, L: int) -> np.ndarray:
    amp = np.zeros(M, dtype=np.complex128)
    amp[(np.arange(L, dtype=np.int64) * r) % M] = 1.0 / math.sqrt(L)
    spectrum = np.fft.fft(amp) / math.sqrt(M)
    p = np.abs(spectrum) ** 2
    return p / p.sum()


_W_PEAK = 6 / 7


def _sample_k_rejection(M: int, r: int, L: int, rng: np.random.Generator) -> int:
    # Proposal: peak c uniform, offset delta from the peak either uniform on
    # {-1,0,1} or heavy-tailed with P(|delta| = d) ~ 1/(d(d-1)).  Every k has a
    # unique (c, delta) with c its nearest peak, and the Fejer-type bound
    # Pr(k) <= min(L/M, M / (4 L r^2 (|delta| - 1/2)^2)) is dominated by C q.
    C = max(3 * L * r / (M * _W_PEAK), M / (2 * L * r * (1 - _W_PEAK)))
    while True:
        c = randbelow(rng, r)
        if rng.random() < _W_PEAK:
            delta = int(rng.integers(-1, 2))
            q = _W_PEAK / 3
        else:
            d = int(1.0 / (1.0 - rng.random())) + 1
            delta = d if rng.random() < 0.5 else -d
            q = (1 - _W_PEAK) / (2 * d * (d - 1))
        k = ((2 * c * M + r) // (2 * r) + delta) % M
        c_raw = (2 * k * r + M) // (2 * M)
        if c_raw % r != c or k - (2 * c_raw * M + r) // (2 * r) != delta:
            continue
        if rng.random() * C * q <= period_probability(k, M, r, L) * r:
            return k


def sample_period_outcome(M: int, r: int, x0: int, mode: SimMode, rng: np.random.Generator) -> int:
    """Measured k after Fourier transforming the r-periodic state starting at x0."""
    mode = SimMode.parse(mode)
    L = (M - x0) // r + 1
    if r == 1 and L == M:
        return 0
    if mode is SimMode.STATEVECTOR:
        if M > STATEVECTOR_MAX_DIM:
            raise ModeUnavailable(f"statevector needs M <= 2^22, got M={M}")
        return int(rng.choice(M, p=_statevector_pmf(M, r, L)))
    if mode is SimMode.SAMPLING:
        return _sample_k_rejection(M, r, L, rng)
    raise ModeUnavailable("CLASSICAL mode has no Fourier sampling; callers bypass it")


def fourier_sample_period(
    inst: PeriodSamplingInstance, mode: SimMode, rng: np.random.Generator
) -> tuple[int | None, bool]:
    """One run of the period-finding circuit.

    Returns ``(k, tail)``.  ``tail`` is True (and ``k`` None) when the
    discarded second register collapsed onto a tail element, which happens
    with probability (t - 1)/M and leaves no periodic structure.
    """
    mode = SimMode.parse(mode)
    if mode is SimMode.STATEVECTOR and inst.M > STATEVECTOR_MAX_DIM:
        raise ModeUnavailable(f"statevector needs M <= 2^22, got M={inst.M}")
    x0 = inst.x0
    if x0 is None:
        j = 1 + randbelow(rng, inst.M)
        if j < inst.t:
            return None, True
        x0 = inst.t + (j - inst.t) % inst.r
    return sample_period_outcome(inst.M, inst.r, x0, mode, rng), False


def convergents(num: int, den: int) -> Iterator[tuple[int, int]]:
    """Convergents p/q of the continued fraction of num/den."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    while den:
        a, rem = divmod(num, den)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
        num, den = den, rem


def period_candidates(samples: Sequence[int], M: int, N: int) -> list[int]:
    """Denominators <= N of the nonzero convergents of k/M over all samples."""
    out = set()
    for k in samples:
        if k % M == 0:
            continue
        for p, q in convergents(k % M, M):
            if q > N:
                break
            if p:
                out.add(q)
    return sorted(out)


def _consistent(k: int, q: int, M: int, N: int) -> bool:
    # k/M lies within 1/(2N^2) of some c/q
    c = (2 * k * q + M) // (2 * M)
    return abs(Fraction(k, M) - Fraction(c, q)) < Fraction(1, 2 * N * N)


def recover_period(
    samples: Sequence[int], M: int, N: int, validate: Callable[[int], bool] | None = None
) -> int | None:
    """Period from Fourier samples via continued fractions.

    With ``validate`` (a black-box check such as g^N == g^(N+q)) the least
    validating candidate is returned.  Without it, the least candidate that is
    within 1/(2N^2) of every nonzero sample.  ``None`` signals failure.
    """
    if not samples:
        raise InsufficientSamples("recover_period needs at least one sample")
    cands = period_candidates(samples, M, N)
    if validate is not None:
        return next((q for q in cands if validate(q)), None)
    informative = [k % M for k in samples if k % M]
    for q in cands:
        if all(_consistent(k, q, M, N) for k in informative):
            return q
    return None


# ---------------------------------------------------------------------------
# Shor discrete log in a cyclic group of known order


def _bsgs(h: SemigroupHandle, base, target, r, identity, base_inverse) -> int | None:
    m = math.isqrt(r - 1) + 1 if r > 1 else 1
    baby = {identity: 0}
    e = identity
    for j in range(1, m):
        e = h.product(e, base)
        baby.setdefault(e, j)
    giant = h.pow(base_inverse, m)
    y = target
    for i in range(m + 1):
        j = baby.get(y)
        if j is not None:
            return (i * m + j) % r
        y = h.product(y, giant)
    return None


def _shor_statevector_sample(h, base, target, r, identity, base_inverse, rng) -> tuple[int, int]:
    if r > SHOR_STATEVECTOR_MAX_ORDER:
        raise ModeUnavailable(f"statevector Shor needs r <= 2^10, got r={r}")
    # f(a, b) = target^a base_inverse^b, evaluated on the full grid
    xs = [identity]
    for _ in range(1, r):
        xs.append(h.oracle.mul(xs[-1], target))
    table = {}
    e = identity
    for b in range(r):
        table.setdefault(e, b)
        e = h.oracle.mul(e, base_inverse)
    labels = np.empty((r, r), dtype=np.int64)
    if all(x in table for x in xs):
        # target^a = base_inverse^(ex[a]) so f(a, b) = base_inverse^(ex[a] + b)
        ex = np.array([table[x] for x in xs], dtype=np.int64)
        labels[:] = (ex[:, None] + np.arange(r)[None, :]) % r
    else:
        codes: dict[bytes, int] = {}
        invs = [identity]
        for _ in range(1, r):
            invs.append(h.oracle.mul(invs[-1], base_inverse))
        for a in range(r):
            for b in range(r):
                labels[a, b] = codes.setdefault(h.oracle.mul(xs[a], invs[b]), len(codes))
    a0, b0 = int(rng.integers(r)), int(rng.integers(r))
    mask = labels == labels[a0, b0]
    amp = mask / math.sqrt(mask.sum())
    p = np.abs(np.fft.fft2(amp)) ** 2
    p = (p / p.sum()).ravel()
    idx = int(rng.choice(r * r, p=p))
    return idx // r, idx % r


def shor_dlog_cyclic(
    h: SemigroupHandle,
    base: ElementCode,
    target: ElementCode,
    r: int,
    identity: ElementCode,
    base_inverse: ElementCode,
    mode: SimMode,
    rng: np.random.Generator,
) -> int:
    """Unique a in Z_r with base^a = target in a cyclic group of order r.

    ``a = 0`` means target is the identity.  The result is always verified
    against the black box before it is returned.
    """
    mode = SimMode.parse(mode)
    if target == identity:
        return 0

    def verified(a: int) -> bool:
        return (identity if a == 0 else h.pow(base, a)) == target

    if mode is SimMode.CLASSICAL:
        a = _bsgs(h, base, target, r, identity, base_inverse)
        if a is not None and verified(a):
            return a
        raise NotInGroup("target is not a power of base")

    if mode is SimMode.STATEVECTOR and r > SHOR_STATEVECTOR_MAX_ORDER:
        raise ModeUnavailable(f"statevector Shor needs r <= 2^10, got r={r}")
    hidden = h.oracle.cyclic_log(base, target, r) if mode is SimMode.SAMPLING else None
    cost = 2 * coherent_cost(r) + 1
    attempts = 0
    draws = 0
    while attempts < MAX_ROUNDS and draws < 64 * MAX_ROUNDS:
        draws += 1
        h.meter.charge(cost)
        if mode is SimMode.STATEVECTOR:
            c, d = _shor_statevector_sample(h, base, target, r, identity, base_inverse, rng)
        elif hidden is None:
            # f does not hide <(1, a)>: outcomes carry no information
            c, d = int(rng.integers(r)), int(rng.integers(r))
        else:
            # uniform over the annihilator {(c, d): c + d a = 0 mod r}
            d = int(rng.integers(r))
            c = (-d * hidden) % r
        if math.gcd(d, r) != 1:
            continue
        attempts += 1
        a = (-c * pow(d, -1, r)) % r
        if verified(a):
            return a
    raise NotInGroup("no candidate exponent validated")


# ---------------------------------------------------------------------------
# Dihedral hidden shift: tokens and the sieve


class SieveToken:
    """One qubit (|0> + exp(2 pi i label * shift / modulus) |1>) / sqrt(2).

    Only ``label`` and ``modulus`` are for the algorithm.  The phase is kept
    by the simulator either exactly (``_phase`` in units of 1/top_modulus,
    ``None`` for a phase-less mixed state) or as an amplitude vector.
    """

    __slots__ = ("label", "modulus", "_phase", "_top", "_state")

    def __init__(self, label: int, modulus: int, phase=None, top: int = 0, state=None):
        self.label = label
        self.modulus = modulus
        self._phase = phase
        self._top = top
        self._state = state

    def __repr__(self) -> str:
        return f"SieveToken(label={self.label}, modulus={self.modulus})"


def combine_tokens(t1: SieveToken, t2: SieveToken, rng: np.random.Generator) -> SieveToken:
    """CNOT the pair and measure the target: label k1 + k2 or k1 - k2, each w.p. 1/2."""
    n = t1.modulus
    if t2.modulus != n:
        raise ValueError("tokens live over different moduli")
    if t1._state is not None:
        psi = np.kron(t1._state, t2._state)
        psi = psi[[0, 1, 3, 2]]  # CNOT, control = first qubit
        p_sum = float(abs(psi[0]) ** 2 + abs(psi[2]) ** 2)
        if rng.random() < p_sum:
            out = np.array([psi[0], psi[2]]) / math.sqrt(p_sum)
            return SieveToken((t1.label + t2.label) % n, n, state=out)
        out = np.array([psi[1], psi[3]]) / math.sqrt(1 - p_sum)
        return SieveToken((t1.label - t2.label) % n, n, state=out)
    sign = 1 if rng.random() < 0.5 else -1
    phase = None
    if t1._phase is not None and t2._phase is not None:
        phase = (t1._phase + sign * t2._phase) % t1._top
    return SieveToken((t1.label + sign * t2.label) % n, n, phase=phase, top=t1._top)


def descend_token(tok: SieveToken, bit: int) -> SieveToken:
    """Remove the known low bit of the shift; the token moves to Z_{modulus/2}."""
    n = tok.modulus
    half = n // 2
    if tok._state is not None:
        state = tok._state.copy()
        state[1] *= np.exp(-2j * np.pi * tok.label * bit / n)
        return SieveToken(tok.label % half, half, state=state)
    phase = tok._phase
    if phase is not None:
        phase = (phase - tok.label * bit * (tok._top // n)) % tok._top
    return SieveToken(tok.label % half, half, phase=phase, top=tok._top)


def measure_token(tok: SieveToken, rng: np.random.Generator) -> int:
    """Measure in the +/- basis; for label modulus/2 this is the shift's parity."""
    if tok._state is not None:
        plus = abs(tok._state[0] + tok._state[1]) ** 2 / 2
        return 0 if rng.random() < plus else 1
    if tok._phase is None:
        return int(rng.integers(2))
    # P(+) = cos^2(pi phase); the half-turn case is decided exactly
    if (2 * tok._phase) % tok._top == 0:
        return (2 * tok._phase // tok._top) % 2
    plus = math.cos(math.pi * tok._phase / tok._top) ** 2
    return 0 if rng.random() < plus else 1


def default_token_budget(order: int) -> int:
    logr = max(1, (order - 1).bit_length())
    return 1 << (math.ceil(2 * math.sqrt(logr)) + 4)


class TokenSource:
    """On-demand dihedral coset states for a hidden shift over Z_order."""

    def __init__(
        self,
        order: int,
        shift: int | None,
        mode: SimMode,
        rng: np.random.Generator,
        *,
        meter: QueryMeter | None = None,
        cost_per_token: int = 0,
        budget: int | None = None,
    ):
        self.order = order
        self._shift = shift
        self.mode = SimMode.parse(mode)
        self.rng = rng
        self.meter = meter
        self.cost_per_token = cost_per_token
        self.budget = default_token_budget(order) if budget is None else budget
        self.drawn = 0

    def draw(self) -> SieveToken:
        if self.drawn >= self.budget:
            raise TokenBudgetExhausted(f"token budget {self.budget} exhausted")
        self.drawn += 1
        if self.meter is not None and self.cost_per_token:
            self.meter.charge(self.cost_per_token)
        n = self.order
        if self.mode is SimMode.STATEVECTOR:
            return self._statevector_token()
        k = randbelow(self.rng, n)
        phase = None if self._shift is None else (k * self._shift) % n
        return SieveToken(k, n, phase=phase, top=n)

    def _statevector_token(self) -> SieveToken:
        n = self.order
        if 2 * n > STATEVECTOR_MAX_DIM:
            raise ModeUnavailable(f"statevector sieve needs 2*order <= 2^22, got order={n}")
        amp = np.zeros((2, n), dtype=np.complex128)
        j0 = int(self.rng.integers(n))
        if self._shift is None:
            amp[int(self.rng.integers(2)), j0] = 1.0
        else:
            # f(0, j0) = f(1, j0 - shift)
            amp[0, j0] = amp[1, (j0 - self._shift) % n] = 1 / math.sqrt(2)
        spec = np.fft.fft(amp, axis=1) / math.sqrt(n)
        p = (np.abs(spec) ** 2).sum(axis=0)
        k = int(self.rng.choice(n, p=p / p.sum()))
        state = spec[:, k] / math.sqrt(p[k])
        return SieveToken(k, n, state=state)


def stage_boundaries(m: int) -> list[int]:
    """Bit boundaries 0 = b_0 < ... < b_s = m - 1 for zeroing the low m-1 bits.

    Stage i cancels bits [b_i, b_{i+1}).  The number of stages grows like
    sqrt(m), which gives 2^O(sqrt(m)) tokens overall.
    """
    bits = m - 1
    if bits <= 0:
        return [0]
    s = max(1, round(math.sqrt(bits / 2)))
    return [round(i * bits / s) for i in range(s + 1)]


def level_batch_size(m: int) -> int:
    """Coset states drawn per batch when sieving over Z_{2^m}.

    2 * 2^(1.75 sqrt(m)) yields a label 2^(m-1) from a single batch with
    probability above 98% for every m <= 14.
    """
    return math.ceil(2 * 2 ** (1.75 * math.sqrt(m)))


class _Collimator:
    """Bucketed pairing of tokens over Z_{2^m} until a label 2^(m-1) appears."""

    def __init__(self, m: int, rng: np.random.Generator):
        self.m = m
        self.rng = rng
        self.bounds = stage_boundaries(m)
        self.buckets: list[dict[int, SieveToken]] = [{} for _ in self.bounds[:-1]]
        self.ready: list[SieveToken] = []

    def insert(self, tok: SieveToken) -> None:
        top = self.m - 1
        while True:
            k = tok.label
            if k == 0:
                return
            tz = (k & -k).bit_length() - 1
            if tz >= top:
                self.ready.append(tok)
                return
            i = max(i for i, b in enumerate(self.bounds[:-1]) if b <= tz)
            width = self.bounds[i + 1] - self.bounds[i]
            mask = (1 << width) - 1
            v = (k >> self.bounds[i]) & mask
            bucket = self.buckets[i]
            mate = bucket.pop(v, None)
            if mate is None:
                mate = bucket.pop((-v) & mask, None)
            if mate is None:
                bucket[v] = tok
                return
            tok = combine_tokens(tok, mate, self.rng)


@dataclass
class SieveStats:
    tokens: int = 0
    bits: tuple[int, ...] = ()
    fallback: bool = False


class HiddenShiftProblem:
    """Two injective rows f0, f1 on Z_order with f1(j) = f0(j + shift).

    Subclasses provide black-box row access; the shift itself is ground truth
    for the token simulator and is never returned to the solver.
    """

    order: int

    def f0_iter(self) -> Iterator[bytes]:  # pragma: no cover - interface
        raise NotImplementedError

    def f1(self, j: int):  # pragma: no cover - interface
        raise NotImplementedError

    def token_source(self, mode, rng, budget=None) -> TokenSource:  # pragma: no cover
        raise NotImplementedError


class SyntheticShift(HiddenShiftProblem):
    """Hidden shift with integer rows f0(j) = j, f1(j) = j + shift (for experiments)."""

    def __init__(self, order: int, shift: int, meter: QueryMeter | None = None):
        self.order = order
        self._shift = shift % order
        self.meter = meter if meter is not None else QueryMeter()

    def f0_iter(self):
        for j in range(self.order):
            self.meter.product_queries += 1
            yield j

    def f1(self, j):
        self.meter.product_queries += 1
        return (j + self._shift) % self.order

    def token_source(self, mode, rng, budget=None):
        return TokenSource(self.order, self._shift, mode, rng, meter=self.meter, cost_per_token=1, budget=budget)


def _classical_shift(problem: HiddenShiftProblem) -> int | None:
    target = problem.f1(0)
    for ell, v in enumerate(problem.f0_iter()):
        if v == target:
            return ell
    return None


def sieve_solve_shift(
    problem: HiddenShiftProblem,
    mode: SimMode,
    rng: np.random.Generator,
    *,
    budget: int | None = None,
    stats: SieveStats | None = None,
) -> int | None:
    """Hidden shift via the power-of-two collimation sieve (bit by bit, low first).

    CLASSICAL mode, and any order that is not a power of two, scans f0 for
    f1(0) instead.  Returns ``None`` only from the classical scan (no shift).
    """
    mode = SimMode.parse(mode)
    stats = stats if stats is not None else SieveStats()
    order = problem.order
    if mode is not SimMode.CLASSICAL and order & (order - 1):
        log.warning("order %d is not a power of two; sieve falls back to a classical scan", order)
        mode = SimMode.CLASSICAL
        stats.fallback = True
    if mode is SimMode.CLASSICAL or order == 1:
        return _classical_shift(problem) if order > 1 else 0

    source = problem.token_source(mode, rng, budget)
    n = order.bit_length() - 1
    bits: list[int] = []
    coll = _Collimator(n, rng)
    try:
        for m in range(n, 0, -1):
            while not coll.ready:
                for _ in range(level_batch_size(m)):
                    tok = source.draw()
                    for b in bits:
                        tok = descend_token(tok, b)
                    coll.insert(tok)
            bit = measure_token(coll.ready.pop(0), rng)
            bits.append(bit)
            coll = _Collimator(m - 1, rng)
    finally:
        stats.tokens = source.drawn
        stats.bits = tuple(bits)
    return sum(b << i for i, b in enumerate(bits))
