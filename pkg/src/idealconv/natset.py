"""Symbolic subsets of the positive integers.

Every set is built from a closed family of variants (finite, cofinite,
arithmetic progression, powers of a base, block unions over an interval
partition, explicit prefix bitmaps) plus union / intersection / complement
trees of bounded depth.  Membership is a total three-valued predicate:
``True``, ``False``, or ``None`` when the set's own knowledge runs out
(a bitmap above its horizon, an undecidable block selector).  Prefix
evaluation is exact and vectorized; counting uses closed forms where the
variant admits one.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

MAX_DEPTH = 32


class HorizonExceeded(Exception):
    """A query needs information beyond what a finite leaf can decide."""


def _as_sorted_tuple(values) -> tuple[int, ...]:
    out = tuple(sorted(set(int(v) for v in values)))
    if out and out[0] < 1:
        raise ValueError("set elements must be positive integers")
    return out


# ---------------------------------------------------------------------------
# Interval partitions of N (the substrate of block unions and witnesses)
# ---------------------------------------------------------------------------

class BlockPartition:
    """Strictly increasing boundaries iota(1) < iota(2) < ...; block n is
    ``[iota(n), iota(n+1))``.  Boundaries come from a generator function or,
    for deserialized partitions, from an explicit prefix only — queries past
    an explicit prefix raise :class:`HorizonExceeded`.
    """

    def __init__(self, fn: Optional[Callable[[int], int]] = None,
                 prefix: Sequence[int] = (),
                 tag: Optional[dict] = None,
                 lengths_unbounded: bool = False):
        self._fn = fn
        self._iota: list[int] = [int(v) for v in prefix]
        self.tag = tag
        self.lengths_unbounded = lengths_unbounded
        if fn is None and len(self._iota) < 2:
            raise ValueError("partition needs a generator or >= 2 boundaries")
        for a, b in zip(self._iota, self._iota[1:]):
            if b <= a:
                raise ValueError("boundaries must be strictly increasing")
        if self._iota and self._iota[0] < 1:
            raise ValueError("iota(1) must be >= 1")

    def iota(self, n: int) -> int:
        if n < 1:
            raise ValueError("block indices start at 1")
        while len(self._iota) < n:
            if self._fn is None:
                raise HorizonExceeded(
                    f"partition prefix ends at block {len(self._iota)}")
            nxt = int(self._fn(len(self._iota) + 1))
            if self._iota and nxt <= self._iota[-1]:
                raise ValueError("generator produced non-increasing boundary")
            self._iota.append(nxt)
        return self._iota[n - 1]

    def block(self, n: int) -> tuple[int, int]:
        return self.iota(n), self.iota(n + 1)

    def block_length(self, n: int) -> int:
        lo, hi = self.block(n)
        return hi - lo

    def block_index(self, m: int) -> Optional[int]:
        """Index of the block containing m, or None below the first block."""
        if m < self.iota(1):
            return None
        n = len(self._iota)
        while self._iota[-1] <= m:
            self.iota(n + 1)
            n = len(self._iota)
        return bisect_right(self._iota, m)

    def blocks_within(self, horizon: int, start: int = 1) -> Iterator[tuple[int, int, int]]:
        """Yield (n, lo, hi) for every complete block with hi - 1 <= horizon."""
        n = start
        while True:
            try:
                lo, hi = self.block(n)
            except HorizonExceeded:
                return
            if hi - 1 > horizon:
                return
            yield n, lo, hi
            n += 1

    def max_block_singleton(self) -> bool:
        """True for the degenerate partition whose blocks are all singletons."""
        return bool(self.tag) and self.tag.get("kind") == "singletons"

    def boundary_prefix(self, count: int) -> list[int]:
        self.iota(count)
        return list(self._iota[:count])

    def to_json(self) -> dict:
        # serialize only boundaries already materialized: extending a search-
        # backed generator here could run far past any sensible horizon
        shown = max(2, min(len(self._iota), 24))
        body: dict = {"iota": self.boundary_prefix(shown)}
        if self.tag is not None:
            body["generator"] = self.tag
        body["lengths_unbounded"] = self.lengths_unbounded
        return body

    @staticmethod
    def from_json(body: dict) -> "BlockPartition":
        tag = body.get("generator")
        if tag is not None:
            part = partition_from_tag(tag)
            return part
        return BlockPartition(prefix=body["iota"],
                              lengths_unbounded=body.get("lengths_unbounded", False))


# extension point: other modules may register partition generator kinds
PARTITION_TAG_HOOKS: dict[str, Callable[[dict], "BlockPartition"]] = {}


def partition_from_tag(tag: dict) -> BlockPartition:
    """Rebuild a partition from its generator tag (lossless round trip)."""
    kind = tag.get("kind")
    if kind == "pow2":
        return BlockPartition(fn=lambda n: 2 ** n, tag=tag, lengths_unbounded=True)
    if kind == "singletons":
        return BlockPartition(fn=lambda n: n, tag=tag, lengths_unbounded=False)
    if kind == "valuation-cover":
        # iota(n) = 2^(n+1) - 3: block n has length 2^(n+1)
        return BlockPartition(fn=lambda n: 2 ** (n + 1) - 3, tag=tag,
                              lengths_unbounded=True)
    if kind == "geometric":
        ratio = Fraction(tag["ratio"])
        def fn(n: int, r=ratio) -> int:
            v = 1
            for _ in range(n - 1):
                v = max(v + 1, int(v * r))
            return v
        return BlockPartition(fn=fn, tag=tag, lengths_unbounded=ratio > 1)
    if kind == "ratio-search":
        # least next boundary with (iota' - iota) / iota' >= q
        q = Fraction(tag["q"])
        if not 0 < q < 1:
            raise ValueError("ratio-search needs q in (0, 1)")
        grow = 1 / (1 - q)
        cache = [1]
        def fn(n: int) -> int:
            while len(cache) < n:
                v = cache[-1]
                nxt = max(v + 1, -((-v * grow.numerator) // grow.denominator))
                cache.append(int(nxt))
            return cache[n - 1]
        return BlockPartition(fn=fn, tag=tag, lengths_unbounded=True)
    hook = PARTITION_TAG_HOOKS.get(kind)
    if hook is not None:
        return hook(tag)
    raise ValueError(f"unknown partition generator {tag!r}")


# ---------------------------------------------------------------------------
# Block selectors
# ---------------------------------------------------------------------------

class BlockSelector:
    def selects(self, n: int) -> Optional[bool]:
        raise NotImplementedError

    def is_infinite(self) -> Optional[bool]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(body: dict) -> "BlockSelector":
        kind = body["kind"]
        if kind == "all":
            return AllBlocks()
        if kind == "every-kth":
            return EveryKth(body["k"])
        if kind == "index-set":
            return IndexSet(from_json(body["set"]))
        raise ValueError(f"unknown selector {kind!r}")


@dataclass(frozen=True)
class AllBlocks(BlockSelector):
    def selects(self, n: int) -> Optional[bool]:
        return True

    def is_infinite(self) -> Optional[bool]:
        return True

    def to_json(self) -> dict:
        return {"kind": "all"}


@dataclass(frozen=True)
class EveryKth(BlockSelector):
    """Selects block indices k, 2k, 3k, ..."""
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def selects(self, n: int) -> Optional[bool]:
        return n % self.k == 0

    def is_infinite(self) -> Optional[bool]:
        return True

    def to_json(self) -> dict:
        return {"kind": "every-kth", "k": self.k}


@dataclass(frozen=True)
class IndexSet(BlockSelector):
    """Block indices drawn from an arbitrary symbolic set; infinite-ness is
    whatever the underlying set can certify (tri-state)."""
    indices: "NatSet"

    def selects(self, n: int) -> Optional[bool]:
        return self.indices.member(n)

    def is_infinite(self) -> Optional[bool]:
        return self.indices.is_infinite()

    def to_json(self) -> dict:
        return {"kind": "index-set", "set": self.indices.to_json()}


# ---------------------------------------------------------------------------
# NatSet variants
# ---------------------------------------------------------------------------

class NatSet:
    """Immutable symbolic subset of N = {1, 2, 3, ...}."""

    depth: int = 0

    def member(self, n: int) -> Optional[bool]:
        raise NotImplementedError

    def prefix(self, horizon: int) -> np.ndarray:
        """Boolean array b with b[i-1] == member(i) for 1 <= i <= horizon.

        Raises HorizonExceeded whenever some membership within the window
        is undecided, so a returned prefix is always exact.
        """
        raise NotImplementedError

    def count_up_to(self, horizon: int) -> int:
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        return int(self.prefix(horizon).sum())

    def is_infinite(self) -> Optional[bool]:
        return None

    def is_cofinite(self) -> Optional[bool]:
        return None

    # recognition hook used by exact density computations: (period, threshold)
    # such that beyond threshold, membership is periodic with that period
    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def __or__(self, other: "NatSet") -> "NatSet":
        return Union((self, other))

    def __and__(self, other: "NatSet") -> "NatSet":
        return Intersection((self, other))

    def __invert__(self) -> "NatSet":
        return Complement(self)


def _check_horizon(horizon: int) -> int:
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return horizon


@dataclass(frozen=True)
class Finite(NatSet):
    members: tuple[int, ...]

    def __init__(self, members=()):
        object.__setattr__(self, "members", _as_sorted_tuple(members))

    def member(self, n: int) -> Optional[bool]:
        i = bisect_left(self.members, n)
        return i < len(self.members) and self.members[i] == n

    def prefix(self, horizon: int) -> np.ndarray:
        horizon = _check_horizon(horizon)
        bits = np.zeros(horizon, dtype=bool)
        idx = [m - 1 for m in self.members if m <= horizon]
        bits[idx] = True
        return bits

    def count_up_to(self, horizon: int) -> int:
        _check_horizon(horizon)
        return bisect_right(self.members, horizon)

    def is_infinite(self) -> Optional[bool]:
        return False

    def is_cofinite(self) -> Optional[bool]:
        return False

    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return (1, (self.members[-1] + 1) if self.members else 1)

    def to_json(self) -> dict:
        return {"kind": "finite", "members": list(self.members)}


@dataclass(frozen=True)
class Cofinite(NatSet):
    excluded: tuple[int, ...]

    def __init__(self, excluded=()):
        object.__setattr__(self, "excluded", _as_sorted_tuple(excluded))

    def member(self, n: int) -> Optional[bool]:
        i = bisect_left(self.excluded, n)
        return not (i < len(self.excluded) and self.excluded[i] == n)

    def prefix(self, horizon: int) -> np.ndarray:
        horizon = _check_horizon(horizon)
        bits = np.ones(horizon, dtype=bool)
        idx = [m - 1 for m in self.excluded if m <= horizon]
        bits[idx] = False
        return bits

    def count_up_to(self, horizon: int) -> int:
        _check_horizon(horizon)
        return horizon - bisect_right(self.excluded, horizon)

    def is_infinite(self) -> Optional[bool]:
        return True

    def is_cofinite(self) -> Optional[bool]:
        return True

    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return (1, (self.excluded[-1] + 1) if self.excluded else 1)

    def to_json(self) -> dict:
        return {"kind": "cofinite", "excluded": list(self.excluded)}


@dataclass(frozen=True)
class Progression(NatSet):
    """{first, first + step, first + 2*step, ...}"""
    first: int
    step: int

    def __post_init__(self):
        if self.first < 1 or self.step < 1:
            raise ValueError("need first >= 1 and step >= 1")

    def member(self, n: int) -> Optional[bool]:
        return n >= self.first and (n - self.first) % self.step == 0

    def prefix(self, horizon: int) -> np.ndarray:
        horizon = _check_horizon(horizon)
        bits = np.zeros(horizon, dtype=bool)
        if self.first <= horizon:
            bits[self.first - 1::self.step] = True
        return bits

    def count_up_to(self, horizon: int) -> int:
        _check_horizon(horizon)
        if horizon < self.first:
            return 0
        return (horizon - self.first) // self.step + 1

    def is_infinite(self) -> Optional[bool]:
        return True

    def is_cofinite(self) -> Optional[bool]:
        return self.step == 1

    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return (self.step, self.first)

    def to_json(self) -> dict:
        return {"kind": "progression", "first": self.first, "step": self.step}


@dataclass(frozen=True)
class PowersOf(NatSet):
    """{base, base^2, base^3, ...} — the base itself is the first member."""
    base: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")

    def member(self, n: int) -> Optional[bool]:
        if n < self.base:
            return False
        if self.base == 2:
            return (n & (n - 1)) == 0
        # candidate exponent from bit lengths, exact check around it
        k = max(1, (n.bit_length() - 1) // (self.base.bit_length()))
        for kk in (k, k + 1, k + 2):
            if self.base ** kk == n:
                return True
        return False

    def powers_up_to(self, horizon: int) -> list[int]:
        out, v = [], self.base
        while v <= horizon:
            out.append(v)
            v *= self.base
        return out

    def prefix(self, horizon: int) -> np.ndarray:
        horizon = _check_horizon(horizon)
        bits = np.zeros(horizon, dtype=bool)
        for v in self.powers_up_to(horizon):
            bits[v - 1] = True
        return bits

    def count_up_to(self, horizon: int) -> int:
        _check_horizon(horizon)
        return len(self.powers_up_to(horizon))

    def is_infinite(self) -> Optional[bool]:
        return True

    def is_cofinite(self) -> Optional[bool]:
        return False

    def to_json(self) -> dict:
        return {"kind": "powers", "base": self.base}


@dataclass(frozen=True)
class PrefixBitmap(NatSet):
    """Explicit membership bits on [1, horizon]; unknown above."""
    bits: np.ndarray = field(compare=False)

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=bool)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("bits must be a nonempty 1-d array")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def horizon(self) -> int:
        return int(self.bits.size)

    def member(self, n: int) -> Optional[bool]:
        if n > self.horizon:
            return None
        return bool(self.bits[n - 1])

    def prefix(self, horizon: int) -> np.ndarray:
        horizon = _check_horizon(horizon)
        if horizon > self.horizon:
            raise HorizonExceeded(
                f"bitmap horizon {self.horizon} < requested {horizon}")
        return self.bits[:horizon].copy()

    def count_up_to(self, horizon: int) -> int:
        return int(self.prefix(horizon).sum())

    def to_json(self) -> dict:
        return {"kind": "prefix-bitmap",
                "bits": "".join("1" if b else "0" for b in self.bits)}

    def __eq__(self, other):
        return (isinstance(other, PrefixBitmap)
                and self.bits.shape == other.bits.shape
                and bool(np.all(self.bits == other.bits)))

    def __hash__(self):
        return hash(self.bits.tobytes())


@dataclass(frozen=True)
class BlockUnion(NatSet):
    """Union of the selected blocks of an interval partition."""
    partition: BlockPartition = field(compare=False)
    selector: BlockSelector

    def member(self, n: int) -> Optional[bool]:
        try:
            k = self.partition.block_index(n)
        except HorizonExceeded:
            return None
        if k is None:
            return False
        return self.selector.selects(k)

    def prefix(self, horizon: int) -> np.ndarray:
        horizon = _check_horizon(horizon)
        bits = np.zeros(horizon, dtype=bool)
        try:
            first = self.partition.iota(1)
        except HorizonExceeded:
            raise HorizonExceeded("partition prefix empty")
        if first > horizon:
            return bits
        n = 1
        while True:
            try:
                lo, hi = self.partition.block(n)
            except HorizonExceeded as exc:
                raise HorizonExceeded(
                    f"partition undecided inside [1, {horizon}]") from exc
            if lo > horizon:
                break
            sel = self.selector.selects(n)
            if sel is None:
                raise HorizonExceeded(f"selector undecided at block {n}")
            if sel:
                bits[lo - 1:min(hi - 1, horizon)] = True
            n += 1
        return bits

    def count_up_to(self, horizon: int) -> int:
        _check_horizon(horizon)
        total = 0
        n = 1
        while True:
            try:
                lo, hi = self.partition.block(n)
            except HorizonExceeded as exc:
                raise HorizonExceeded("partition undecided") from exc
            if lo > horizon:
                break
            sel = self.selector.selects(n)
            if sel is None:
                raise HorizonExceeded(f"selector undecided at block {n}")
            if sel:
                total += min(hi - 1, horizon) - lo + 1
            n += 1
        return total

    def is_infinite(self) -> Optional[bool]:
        sel = self.selector.is_infinite()
        if sel is True:
            return True
        if sel is False:
            return False
        return None

    def is_cofinite(self) -> Optional[bool]:
        if isinstance(self.selector, AllBlocks):
            return True
        if isinstance(self.selector, EveryKth):
            return self.selector.k == 1
        if isinstance(self.selector, IndexSet):
            return self.selector.indices.is_cofinite()
        return None

    def to_json(self) -> dict:
        return {"kind": "block-union",
                "partition": self.partition.to_json(),
                "selector": self.selector.to_json()}


def _combo_depth(parts: Sequence[NatSet]) -> int:
    d = 1 + max(p.depth for p in parts)
    if d > MAX_DEPTH:
        raise ValueError(f"combination tree deeper than {MAX_DEPTH}")
    return d


@dataclass(frozen=True)
class Union(NatSet):
    parts: tuple[NatSet, ...]
    depth: int = field(init=False)

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise ValueError("union needs at least one part")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "depth", _combo_depth(parts))

    def member(self, n: int) -> Optional[bool]:
        saw_unknown = False
        for p in self.parts:
            m = p.member(n)
            if m is True:
                return True
            if m is None:
                saw_unknown = True
        return None if saw_unknown else False

    def prefix(self, horizon: int) -> np.ndarray:
        out = self.parts[0].prefix(horizon)
        for p in self.parts[1:]:
            out |= p.prefix(horizon)
        return out

    def is_infinite(self) -> Optional[bool]:
        vals = [p.is_infinite() for p in self.parts]
        if any(v is True for v in vals):
            return True
        if all(v is False for v in vals):
            return False
        return _is_infinite_via_density(self)

    def is_cofinite(self) -> Optional[bool]:
        if any(p.is_cofinite() is True for p in self.parts):
            return True
        return None

    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return _combine_periods(self.parts)

    def to_json(self) -> dict:
        return {"kind": "union", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Intersection(NatSet):
    parts: tuple[NatSet, ...]
    depth: int = field(init=False)

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise ValueError("intersection needs at least one part")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "depth", _combo_depth(parts))

    def member(self, n: int) -> Optional[bool]:
        saw_unknown = False
        for p in self.parts:
            m = p.member(n)
            if m is False:
                return False
            if m is None:
                saw_unknown = True
        return None if saw_unknown else True

    def prefix(self, horizon: int) -> np.ndarray:
        out = self.parts[0].prefix(horizon)
        for p in self.parts[1:]:
            out &= p.prefix(horizon)
        return out

    def is_infinite(self) -> Optional[bool]:
        vals = [p.is_infinite() for p in self.parts]
        cof = [p.is_cofinite() for p in self.parts]
        if any(v is False for v in vals):
            return False
        if all(c is True for c in cof):
            return True
        # one genuinely infinite part, everything else cofinite
        loose = [i for i, c in enumerate(cof) if c is not True]
        if len(loose) == 1 and vals[loose[0]] is True:
            return True
        return _is_infinite_via_density(self)

    def is_cofinite(self) -> Optional[bool]:
        cof = [p.is_cofinite() for p in self.parts]
        if all(c is True for c in cof):
            return True
        if any(c is False for c in cof):
            return False
        return None

    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return _combine_periods(self.parts)

    def to_json(self) -> dict:
        return {"kind": "intersection",
                "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Complement(NatSet):
    part: NatSet
    depth: int = field(init=False)

    def __init__(self, part):
        object.__setattr__(self, "part", part)
        object.__setattr__(self, "depth", _combo_depth((part,)))

    def member(self, n: int) -> Optional[bool]:
        m = self.part.member(n)
        return None if m is None else not m

    def prefix(self, horizon: int) -> np.ndarray:
        return ~self.part.prefix(horizon)

    def is_infinite(self) -> Optional[bool]:
        cof = self.part.is_cofinite()
        if cof is True:
            return False
        if cof is False:
            return True       # not cofinite means the complement is infinite
        if self.part.is_infinite() is False:
            return True
        if self.is_cofinite() is True:
            return True
        return _is_infinite_via_density(self)

    def is_cofinite(self) -> Optional[bool]:
        fin = self.part.is_infinite()
        if fin is False:
            return True
        if self.part.is_cofinite() is True and fin is True:
            # complement of a genuinely cofinite set is finite
            return False
        return None

    def eventually_periodic(self) -> Optional[tuple[int, int]]:
        return self.part.eventually_periodic()

    def to_json(self) -> dict:
        return {"kind": "complement", "part": self.part.to_json()}


def _combine_periods(parts: Sequence[NatSet],
                     period_cap: int = 1 << 16,
                     threshold_cap: int = 1 << 22) -> Optional[tuple[int, int]]:
    period, threshold = 1, 1
    for p in parts:
        ep = p.eventually_periodic()
        if ep is None:
            return None
        q, t = ep
        period = period * q // _gcd(period, q)
        threshold = max(threshold, t)
        if period > period_cap or threshold > threshold_cap:
            return None
    return (period, threshold)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _is_infinite_via_density(s: "NatSet") -> Optional[bool]:
    """Eventually periodic sets are infinite iff their period window is hit."""
    d = exact_density(s)
    if d is None:
        return None
    return d > 0


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def exact_density(s: NatSet) -> Optional[Fraction]:
    """Natural density when the set is recognizably eventually periodic."""
    ep = s.eventually_periodic()
    if ep is None:
        return None
    period, threshold = ep
    window = s.prefix(threshold + 2 * period)[threshold + period - 1:
                                              threshold + 2 * period - 1]
    return Fraction(int(window.sum()), period)


def iter_members(s: NatSet, start: int = 1) -> Iterator[int]:
    """Members of s in increasing order, from ``start`` upward.

    Closed forms are used where the variant has one; bitmap-backed sets yield
    until their horizon and then raise HorizonExceeded, since what lies beyond
    is unknown rather than empty.
    """
    if isinstance(s, Finite):
        i = bisect_left(s.members, start)
        yield from s.members[i:]
        return
    if isinstance(s, Cofinite):
        n = max(1, start)
        while True:
            if s.member(n):
                yield n
            n += 1
    if isinstance(s, Progression):
        v = s.first
        if start > v:
            v += ((start - s.first + s.step - 1) // s.step) * s.step
        while True:
            yield v
            v += s.step
    if isinstance(s, PowersOf):
        v = s.base
        while v < start:
            v *= s.base
        while True:
            yield v
            v *= s.base
    if isinstance(s, PrefixBitmap):
        idx = np.flatnonzero(s.bits[start - 1:]) + start
        yield from (int(i) for i in idx)
        raise HorizonExceeded(f"bitmap exhausted at {s.horizon}")
    if isinstance(s, BlockUnion):
        n = 1
        while True:
            lo, hi = s.partition.block(n)  # HorizonExceeded propagates
            sel = s.selector.selects(n)
            if sel is None:
                raise HorizonExceeded(f"selector undecided at block {n}")
            if sel and hi > start:
                for v in range(max(lo, start), hi):
                    yield v
            n += 1
    # boolean combinations: scan with member(); unknown stops the stream
    n = max(1, start)
    while True:
        m = s.member(n)
        if m is None:
            raise HorizonExceeded(f"membership undecided at {n}")
        if m:
            yield n
        n += 1


def prefix_gather(s: NatSet, values) -> np.ndarray:
    """Membership bits of ``s`` at the given positive integers.

    Vectorized through a single prefix when the values fit in int64 and are
    not too spread out; falls back to per-element member() otherwise (needed
    for maps whose values are huge integers).  Raises HorizonExceeded when
    any queried membership is unknown.
    """
    if isinstance(values, np.ndarray) and values.dtype != object:
        top = int(values.max())
        if top <= max(1 << 24, 4 * values.size):
            bits = s.prefix(top)
            return bits[values.astype(np.int64) - 1]
    out = np.empty(len(values), dtype=bool)
    for i, v in enumerate(values):
        m = s.member(int(v))
        if m is None:
            raise HorizonExceeded(f"membership undecided at {v}")
        out[i] = m
    return out


# ---------------------------------------------------------------------------
# JSON codec
# ---------------------------------------------------------------------------

def from_json(body: dict) -> NatSet:
    kind = body["kind"]
    if kind == "finite":
        return Finite(body["members"])
    if kind == "cofinite":
        return Cofinite(body["excluded"])
    if kind == "progression":
        return Progression(body["first"], body["step"])
    if kind == "powers":
        return PowersOf(body["base"])
    if kind == "prefix-bitmap":
        return PrefixBitmap([c == "1" for c in body["bits"]])
    if kind == "block-union":
        return BlockUnion(BlockPartition.from_json(body["partition"]),
                          BlockSelector.from_json(body["selector"]))
    if kind == "union":
        return Union(tuple(from_json(p) for p in body["parts"]))
    if kind == "intersection":
        return Intersection(tuple(from_json(p) for p in body["parts"]))
    if kind == "complement":
        return Complement(from_json(body["part"]))
    raise ValueError(f"unknown set kind {kind!r}")


def loads(text: str) -> NatSet:
    return from_json(json.loads(text))


EMPTY = Finite(())
FULL = Cofinite(())
