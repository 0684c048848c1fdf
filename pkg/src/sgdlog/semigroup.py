"""Black-box finite semigroups, concrete families and query accounting.

Algorithms only ever see a :class:`SemigroupHandle`: opaque byte-string codes,
a metered ``product``, equality of codes and an ``order_bound``.  Simulators
and test harnesses additionally get :attr:`SemigroupHandle.oracle`, an
unmetered view used to compute ground truth (never used on the algorithm path).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MalformedSpec

ElementCode = bytes

CLOSURE_CAP = 1 << 16


@dataclass
class QueryMeter:
    product_queries: int = 0
    permutation_queries: int = 0
    charged_queries: int = 0

    @property
    def total(self) -> int:
        """Classical product calls plus idealized quantum charges."""
        return self.product_queries + self.charged_queries

    def charge(self, n: int) -> None:
        if n < 0:
            raise ValueError("charges are nonnegative")
        self.charged_queries += n

    def snapshot(self) -> tuple[int, int, int]:
        return (self.product_queries, self.permutation_queries, self.charged_queries)

    def as_dict(self) -> dict[str, int]:
        return {
            "product_queries": self.product_queries,
            "permutation_queries": self.permutation_queries,
            "charged_queries": self.charged_queries,
        }


def _width(max_value: int) -> int:
    return max(1, (max(max_value, 1).bit_length() + 7) // 8)


def _pack(values: Iterable[int], width: int) -> bytes:
    return b"".join(v.to_bytes(width, "big") for v in values)


def _unpack(code: bytes, width: int) -> tuple[int, ...]:
    return tuple(int.from_bytes(code[i:i + width], "big") for i in range(0, len(code), width))


# ---------------------------------------------------------------------------
# Family specs


@dataclass(frozen=True)
class RhoSemigroupSpec:
    """Monogenic semigroup <g> with index ``t`` and period ``r``."""

    t: int
    r: int


@dataclass(frozen=True)
class TransformationSemigroupSpec:
    """Semigroup of self-maps of {1..n}; generators are 1-based image lists."""

    ground_set_size: int
    generators: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class MatrixSemigroupSpec:
    dimension: int
    modulus: int
    generators: tuple[tuple[tuple[int, ...], ...], ...]


# ---------------------------------------------------------------------------
# Families: raw (unmetered) arithmetic on codes


class _Family:
    name = "abstract"
    generators: dict[str, bytes]
    order_bound: int

    def mul(self, a: bytes, b: bytes, meter: QueryMeter | None = None) -> bytes:  # pragma: no cover
        """Raw product; ``meter`` receives side-channel charges (pi calls)."""
        raise NotImplementedError

    def describe(self, code: bytes):
        return code.hex()

    def orbit_rho(self, y: bytes | None, g: bytes) -> tuple[int, int] | None:
        """Exact (index, period) of j -> y g^j when cheaply known, else None."""
        return None


class _RhoFamily(_Family):
    name = "rho"

    def __init__(self, spec: RhoSemigroupSpec):
        if spec.t < 1 or spec.r < 1:
            raise MalformedSpec(f"rho semigroup needs t >= 1 and r >= 1, got {spec}")
        self.t, self.r = spec.t, spec.r
        self.width = _width(spec.t + spec.r)
        self.generators = {"g": self.encode(1)}
        self.order_bound = spec.t + spec.r

    def canonical(self, j: int) -> int:
        if j < self.t:
            return j
        return self.t + (j - self.t) % self.r

    def encode(self, j: int) -> bytes:
        return self.canonical(j).to_bytes(self.width, "big")

    def decode(self, code: bytes) -> int:
        return int.from_bytes(code, "big")

    def mul(self, a, b, meter=None):
        return self.encode(self.decode(a) + self.decode(b))

    def describe(self, code):
        return f"g^{self.decode(code)}"

    def orbit_rho(self, y, g):
        # g = g^i, y = g^u: y g^j = g^(u + i j)
        i = self.decode(g)
        u = 0 if y is None else self.decode(y)
        # smallest j >= 1 with u + i j >= t
        j0 = max(1, -(-(self.t - u) // i))
        return j0, self.r // math.gcd(self.r, i)


class _TransformationFamily(_Family):
    name = "transformation"

    def __init__(self, spec: TransformationSemigroupSpec):
        n = spec.ground_set_size
        if n < 1:
            raise MalformedSpec("ground_set_size must be >= 1")
        if not spec.generators:
            raise MalformedSpec("at least one generator is required")
        self.n = n
        self.width = _width(n - 1)
        gens = []
        for f in spec.generators:
            f = tuple(f)
            if len(f) != n or any((not isinstance(v, int)) or v < 1 or v > n for v in f):
                raise MalformedSpec(f"generator {f!r} is not a total function on 1..{n}")
            gens.append(self.encode([v - 1 for v in f]))
        self.generators = _name_generators(gens)
        size = _closure_size(self.mul, gens, CLOSURE_CAP)
        # t + r - 1 = |<g>| <= |S|, hence t + r <= |S| + 1
        self.order_bound = size + 1 if size is not None else max(n ** n, 2)

    def encode(self, images: Sequence[int]) -> bytes:
        return _pack(images, self.width)

    def decode(self, code: bytes) -> tuple[int, ...]:
        if self.width == 1:
            return tuple(code)
        return _unpack(code, self.width)

    def mul(self, a, b, meter=None):
        # apply a first, then b
        fa, fb = self.decode(a), self.decode(b)
        return self.encode([fb[i] for i in fa])

    def describe(self, code):
        return [v + 1 for v in self.decode(code)]


class _MatrixFamily(_Family):
    name = "matrix"

    def __init__(self, spec: MatrixSemigroupSpec):
        d, m = spec.dimension, spec.modulus
        if d < 1:
            raise MalformedSpec("dimension must be >= 1")
        if m < 2:
            raise MalformedSpec("modulus must be >= 2")
        if not spec.generators:
            raise MalformedSpec("at least one generator is required")
        self.d, self.m = d, m
        self.width = _width(m - 1)
        gens = []
        for a in spec.generators:
            if len(a) != d or any(len(row) != d for row in a):
                raise MalformedSpec(f"generator {a!r} is not a {d}x{d} matrix")
            gens.append(self.encode([v % m for row in a for v in row]))
        self.generators = _name_generators(gens)
        self.order_bound = m ** (d * d)

    def encode(self, entries):
        return _pack(entries, self.width)

    def decode(self, code):
        return _unpack(code, self.width)

    def mul(self, a, b, meter=None):
        d, m = self.d, self.m
        x, y = self.decode(a), self.decode(b)
        if d == 1:
            return self.encode([(x[0] * y[0]) % m])
        out = []
        for i in range(d):
            row = x[i * d:(i + 1) * d]
            for j in range(d):
                out.append(sum(row[l] * y[l * d + j] for l in range(d)) % m)
        return self.encode(out)

    def describe(self, code):
        e = self.decode(code)
        return [list(e[i * self.d:(i + 1) * self.d]) for i in range(self.d)]


def _name_generators(gens: list[bytes]) -> dict[str, bytes]:
    names = {f"g{i + 1}": c for i, c in enumerate(gens)}
    if len(gens) == 1:
        names["g"] = gens[0]
    return names


def _closure_size(mul, gens, cap) -> int | None:
    seen = set(gens)
    frontier = list(seen)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                c = mul(a, g)
                if c not in seen:
                    seen.add(c)
                    if len(seen) > cap:
                        return None
                    nxt.append(c)
        frontier = nxt
    return len(seen)


# ---------------------------------------------------------------------------
# Handle


class SemigroupOracle:
    """Unmetered access for simulators and test harnesses.

    Quantum subroutines are simulated classically, so the simulator needs the
    true structure (index, period, hidden exponents) to sample measurement
    outcomes.  Nothing on the algorithm path reads from here.
    """

    def __init__(self, family: _Family):
        self._family = family
        self._rho_cache: dict[tuple, tuple[int, int]] = {}
        self._log_tables: dict[tuple[bytes, int], dict[bytes, int]] = {}

    def mul(self, a: bytes, b: bytes) -> bytes:
        return self._family.mul(a, b)

    def pow(self, g: bytes, j: int) -> bytes:
        if j < 1:
            raise ValueError("exponent must be >= 1")
        result = None
        base = g
        while j:
            if j & 1:
                result = base if result is None else self.mul(result, base)
            j >>= 1
            if j:
                base = self.mul(base, base)
        return result

    def orbit_rho(self, y: bytes | None, g: bytes) -> tuple[int, int]:
        """(index, period) of j -> y g^j (or g^j when ``y`` is None)."""
        key = (y, g)
        if key not in self._rho_cache:
            exact = self._family.orbit_rho(y, g)
            self._rho_cache[key] = exact if exact is not None else brute_force_rho(self.mul, g, y)
        return self._rho_cache[key]

    def cyclic_log(self, base: bytes, target: bytes, order: int) -> int | None:
        """Exponent a in Z_order with base^a = target (base^0 read as base^order)."""
        key = (base, order)
        table = self._log_tables.get(key)
        if table is None:
            table = {}
            e = base
            for a in range(1, order + 1):
                table.setdefault(e, a % order)
                e = self.mul(e, base)
            self._log_tables[key] = table
        return table.get(target)

    def closure(self, gens: Sequence[bytes], cap: int = CLOSURE_CAP) -> list[bytes]:
        seen = dict.fromkeys(gens)
        frontier = list(seen)
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    c = self.mul(a, g)
                    if c not in seen:
                        seen[c] = None
                        if len(seen) > cap:
                            raise OverflowError(f"closure exceeds {cap} elements")
                        nxt.append(c)
            frontier = nxt
        return list(seen)

    def describe(self, code: bytes):
        return self._family.describe(code)


def brute_force_rho(mul, g: bytes, y: bytes | None = None) -> tuple[int, int]:
    """Walk j -> y g^j until the first repeat; returns (index, period)."""
    seen: dict[bytes, int] = {}
    e = g if y is None else mul(y, g)
    j = 1
    while e not in seen:
        seen[e] = j
        e = mul(e, g)
        j += 1
    t = seen[e]
    return t, j - t


class SemigroupHandle:
    """Black-box access to a finite semigroup."""

    def __init__(self, family: _Family, meter: QueryMeter | None = None):
        self._family = family
        self.order_bound: int = family.order_bound
        self.generators: dict[str, bytes] = dict(family.generators)
        self.meter = meter if meter is not None else QueryMeter()
        self.oracle = SemigroupOracle(family)

    @property
    def family(self) -> str:
        return self._family.name

    def product(self, a: ElementCode, b: ElementCode) -> ElementCode:
        self.meter.product_queries += 1
        return self._family.mul(a, b, self.meter)

    def pow(self, g: ElementCode, j: int) -> ElementCode:
        """g^j by left-to-right repeated squaring: at most 2 log2(j) products."""
        if j < 1:
            raise ValueError(f"exponent must be a positive integer, got {j}")
        result = g
        for bit in bin(j)[3:]:
            result = self.product(result, result)
            if bit == "1":
                result = self.product(result, g)
        return result

    def generator(self, name: str) -> ElementCode:
        try:
            return self.generators[name]
        except KeyError:
            raise MalformedSpec(f"unknown generator {name!r}; have {sorted(self.generators)}") from None

    def reset_meter(self) -> QueryMeter:
        self.meter = QueryMeter()
        return self.meter

    def describe(self, code: ElementCode):
        return self._family.describe(code)

    def __repr__(self) -> str:
        return f"SemigroupHandle(family={self.family!r}, order_bound={self.order_bound})"


class PowerTable:
    """Cached g^(2^i) for repeated exponentiation with a fixed base.

    After the squarings are in place, ``e * g^j`` costs popcount(j) products.
    """

    def __init__(self, h: SemigroupHandle, g: ElementCode):
        self.h = h
        self.g = g
        self._squares = [g]

    def _square(self, i: int) -> bytes:
        while len(self._squares) <= i:
            s = self._squares[-1]
            self._squares.append(self.h.product(s, s))
        return self._squares[i]

    def pow(self, j: int) -> ElementCode:
        if j < 1:
            raise ValueError(f"exponent must be a positive integer, got {j}")
        result = None
        i = 0
        while j:
            if j & 1:
                s = self._square(i)
                result = s if result is None else self.h.product(result, s)
            j >>= 1
            i += 1
        return result

    def mul_pow(self, e: ElementCode | None, j: int) -> ElementCode:
        """e * g^j, with ``e=None`` standing for the empty product."""
        if e is None:
            return self.pow(j)
        i = 0
        while j:
            if j & 1:
                e = self.h.product(e, self._square(i))
            j >>= 1
            i += 1
        return e


# ---------------------------------------------------------------------------
# Construction and JSON


def make_handle(spec) -> SemigroupHandle:
    if isinstance(spec, RhoSemigroupSpec):
        return SemigroupHandle(_RhoFamily(spec))
    if isinstance(spec, TransformationSemigroupSpec):
        return SemigroupHandle(_TransformationFamily(spec))
    if isinstance(spec, MatrixSemigroupSpec):
        return SemigroupHandle(_MatrixFamily(spec))
    from .membership import LowerBoundSemigroupSpec, build_lower_bound_semigroup

    if isinstance(spec, LowerBoundSemigroupSpec):
        return build_lower_bound_semigroup(spec)
    raise MalformedSpec(f"unsupported spec type {type(spec).__name__}")


def spec_from_dict(doc: dict):
    """Parse a ``{"family": ...}`` document into a spec dataclass."""
    if not isinstance(doc, dict) or "family" not in doc:
        raise MalformedSpec("spec document must be an object with a 'family' field")
    fam = doc["family"]
    try:
        if fam == "rho":
            return RhoSemigroupSpec(t=int(doc["t"]), r=int(doc["r"]))
        if fam == "transformation":
            return TransformationSemigroupSpec(
                ground_set_size=int(doc["ground_set_size"]),
                generators=tuple(tuple(f) for f in doc["generators"]),
            )
        if fam == "matrix":
            return MatrixSemigroupSpec(
                dimension=int(doc["dimension"]),
                modulus=int(doc["modulus"]),
                generators=tuple(tuple(tuple(row) for row in a) for a in doc["generators"]),
            )
        if fam == "lowerbound":
            from .membership import LowerBoundSemigroupSpec

            pi = doc.get("pi")
            return LowerBoundSemigroupSpec(
                n=int(doc["n"]),
                k=int(doc["k"]),
                pi=None if pi is None else tuple(tuple(s) for s in pi),
            )
    except (KeyError, TypeError) as exc:
        raise MalformedSpec(f"bad {fam!r} spec: {exc}") from exc
    raise MalformedSpec(f"unknown family {fam!r}")


def load_spec(path: str | Path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedSpec(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(doc)


_FACTOR = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\^\s*(\d+))?\s*$")


def parse_word(h: SemigroupHandle, word: str) -> ElementCode:
    """Multiply out a word such as ``"g1^2*g2"`` over the named generators."""
    result = None
    for factor in word.split("*"):
        m = _FACTOR.match(factor)
        if not m:
            raise MalformedSpec(f"cannot parse factor {factor!r} in {word!r}")
        name, exp = m.group(1), int(m.group(2) or 1)
        if exp < 1:
            raise MalformedSpec(f"exponents in words must be >= 1 ({word!r})")
        p = h.pow(h.generator(name), exp)
        result = p if result is None else h.product(result, p)
    return result
