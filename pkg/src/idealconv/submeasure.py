"""Lower semicontinuous submeasures and finite-horizon norm estimation.

All values are exact :class:`fractions.Fraction`; certification never goes
through floating point (floats appear only inside an argmax heuristic whose
answer is re-verified with integer arithmetic).  Each variant knows how to
evaluate itself on a prefix, on a tail window, and on an explicit finite set,
and carries a table of closed-form limit norms for the structured set
variants it can recognize.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import natset as ns

ZERO = Fraction(0)
ONE = Fraction(1)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def max_count_ratio(counts: np.ndarray, t: int) -> Fraction:
    """Exact max of (counts[n-1] - counts[t-1]) / n over n in (t, N].

    ``counts`` is the cumulative membership count on [1, N].  A float argmax
    proposes a candidate; integer cross-multiplication certifies it, looping
    while any position beats the current best (each round strictly improves
    the exact value, so termination is immediate in practice).
    """
    n_total = counts.shape[0]
    if t >= n_total:
        raise ValueError("cut must lie below the horizon")
    base = int(counts[t - 1]) if t > 0 else 0
    num = counts[t:] - base
    den = np.arange(t + 1, n_total + 1, dtype=np.int64)
    if int(num[-1]) == 0:
        return ZERO
    if n_total <= (1 << 31):
        best = int(np.argmax(num / den))
        bn, bd = int(num[best]), int(den[best])
        while True:
            better = np.flatnonzero(num * bd > bn * den)
            if better.size == 0:
                return Fraction(bn, bd)
            j = int(better[np.argmax(num[better] / den[better])])
            bn, bd = int(num[j]), int(den[j])
    # arbitrary-precision fallback, chunked scan
    bn, bd = 0, 1
    for i in range(num.shape[0]):
        c, n = int(num[i]), int(den[i])
        if c * bd > bn * n:
            bn, bd = c, n
    return Fraction(bn, bd)


def sum_unit_fractions_raw(values: Sequence[int]) -> tuple[int, int]:
    """Exact sum of 1/v as an unreduced pair, pairwise-reduced so the
    denominators stay balanced; skipping the gcd keeps comparisons cheap."""
    if len(values) == 0:
        return 0, 1
    nums = [1] * len(values)
    dens = [int(v) for v in values]
    while len(dens) > 1:
        half = len(dens) // 2
        nn, nd = [], []
        for i in range(half):
            p1, q1 = nums[2 * i], dens[2 * i]
            p2, q2 = nums[2 * i + 1], dens[2 * i + 1]
            nn.append(p1 * q2 + p2 * q1)
            nd.append(q1 * q2)
        if len(dens) & 1:
            nn.append(nums[-1])
            nd.append(dens[-1])
        nums, dens = nn, nd
    return nums[0], dens[0]


def sum_unit_fractions(values: Sequence[int]) -> Fraction:
    """Exact sum of 1/v over the values."""
    p, q = sum_unit_fractions_raw(values)
    return Fraction(p, q)


class Lscsm:
    """A monotone subadditive set function with phi(empty) = 0, finite on
    finite sets, determined by its finite truncations."""

    name = "lscsm"

    def phi_points(self, members: Sequence[int]) -> Fraction:
        """phi of an explicit finite set."""
        raise NotImplementedError

    def tail_value(self, bits: np.ndarray, t: int) -> Fraction:
        """phi(s ∩ (t, N]) from the full prefix bits of s on [1, N]."""
        raise NotImplementedError

    def tail_correction(self, t: int, horizon: int) -> Fraction:
        """Finite-horizon attenuation of a tail value for this variant.

        Used to normalize tail diagnostics so that structured sets agree with
        their limit norms at desk scale; 1 unless the variant divides by
        absolute position.
        """
        return ONE

    def exact_norm(self, s: ns.NatSet) -> Optional[Fraction]:
        """The limit norm lim_t phi(s minus [1, t]) when s has a closed form."""
        if s.is_infinite() is False:
            return ZERO
        return self._exact_norm_infinite(s)

    def _exact_norm_infinite(self, s: ns.NatSet) -> Optional[Fraction]:
        if isinstance(s, ns.Union):
            return self._norm_of_union(s.parts)
        if isinstance(s, ns.Intersection):
            return self._norm_of_intersection(s.parts)
        return None

    def _norm_of_union(self, parts) -> Optional[Fraction]:
        norms = [self.exact_norm(p) for p in parts]
        if any(v is None for v in norms):
            return None
        positive = [v for v in norms if v > 0]
        if not positive:
            return ZERO
        if len(positive) == 1:
            # a zero-norm union partner never moves the norm
            return positive[0]
        if all(v == self.full_norm() for v in positive):
            return self.full_norm()
        return None

    def _norm_of_intersection(self, parts) -> Optional[Fraction]:
        norms = [self.exact_norm(p) for p in parts]
        if any(v == 0 for v in norms):
            return ZERO
        # intersecting with cofinite sets only strips finitely many elements
        loose = [p for p in parts if p.is_cofinite() is not True]
        if len(loose) == 1:
            return self.exact_norm(loose[0])
        if not loose:
            return self.full_norm()
        return None

    def full_norm(self) -> Fraction:
        """Norm of all of N (1 after normalization)."""
        return ONE

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class RunningDensity(Lscsm):
    """phi(A) = sup_n |A ∩ [1, n]| / n; its limit norm is upper density."""

    name = "running-density"

    def phi_points(self, members: Sequence[int]) -> Fraction:
        best = ZERO
        seen = 0
        for m in sorted(members):
            seen += 1
            r = Fraction(seen, m)
            if r > best:
                best = r
        return best

    def tail_value(self, bits: np.ndarray, t: int) -> Fraction:
        counts = np.cumsum(bits, dtype=np.int64)
        return max_count_ratio(counts, t)

    def tail_correction(self, t: int, horizon: int) -> Fraction:
        # a set of tail density d scores at most d * (N - t) / N below N
        return Fraction(horizon - t, horizon)

    def _exact_norm_infinite(self, s: ns.NatSet) -> Optional[Fraction]:
        d = ns.exact_density(s)
        if d is not None:
            return d
        if isinstance(s, ns.PowersOf):
            return ZERO
        if isinstance(s, ns.Complement):
            inner = self.exact_norm(s.part)
            if inner == 0:
                return ONE
        return super()._exact_norm_infinite(s)

    def to_json(self) -> dict:
        return {"kind": "running-density"}


@dataclass(frozen=True)
class CountingCap(Lscsm):
    """phi(A) = min(1, |A|); the exhaustive ideal of this one is Fin."""

    name = "counting-cap"

    def phi_points(self, members: Sequence[int]) -> Fraction:
        return ONE if len(members) >= 1 else ZERO

    def tail_value(self, bits: np.ndarray, t: int) -> Fraction:
        return ONE if bool(bits[t:].any()) else ZERO

    def _exact_norm_infinite(self, s: ns.NatSet) -> Optional[Fraction]:
        inf = s.is_infinite()
        if inf is True:
            return ONE
        if inf is False:
            return ZERO
        return super()._exact_norm_infinite(s)

    def to_json(self) -> dict:
        return {"kind": "counting-cap"}


@dataclass(frozen=True)
class WeightedSum(Lscsm):
    """phi(A) = min(cap, sum of w_a over A).

    ``harmonic`` marks the built-in weight family w_a = scale / a, whose
    total diverges; that flag unlocks the closed-form norms (progressions
    and cofinite sets saturate the cap, geometric sets vanish).
    """

    cap: Fraction = ONE
    scale: Fraction = ONE
    harmonic: bool = True
    name: str = "weighted-sum"

    def weight(self, a: int) -> Fraction:
        return self.scale / a

    def phi_points(self, members: Sequence[int]) -> Fraction:
        total = ZERO
        chunk: list[int] = []
        for m in members:
            chunk.append(m)
        if not chunk:
            return ZERO
        total = self.scale * sum_unit_fractions(chunk)
        return min(self.cap, total)

    def tail_value(self, bits: np.ndarray, t: int) -> Fraction:
        idx = np.flatnonzero(bits[t:]) + (t + 1)
        if idx.size == 0:
            return ZERO
        # raw pair accumulation: one normalization at the end, and the cap
        # can stop the exact summation after any chunk
        tp, tq = 0, 1
        cn, cd = self.cap.numerator, self.cap.denominator
        sn, sd = self.scale.numerator, self.scale.denominator
        for lo in range(0, idx.size, 4096):
            p, q = sum_unit_fractions_raw(idx[lo:lo + 4096].tolist())
            tp, tq = tp * q + p * tq, tq * q
            if sn * tp * cd >= cn * sd * tq:
                return self.cap
        return Fraction(sn * tp, sd * tq)

    def _exact_norm_infinite(self, s: ns.NatSet) -> Optional[Fraction]:
        if not self.harmonic:
            return super()._exact_norm_infinite(s)
        if isinstance(s, (ns.Progression, ns.Cofinite)):
            return self.cap
        if isinstance(s, ns.PowersOf):
            return ZERO
        if isinstance(s, ns.Complement):
            inner = self.exact_norm(s.part)
            if inner == 0:
                return self.cap
        d = ns.exact_density(s)
        if d is not None and d > 0:
            return self.cap
        return super()._exact_norm_infinite(s)

    def full_norm(self) -> Fraction:
        return self.cap

    def to_json(self) -> dict:
        return {"kind": "weighted-sum", "cap": str(self.cap),
                "scale": str(self.scale), "harmonic": self.harmonic}


@dataclass(frozen=True)
class DensityFamily(Lscsm):
    """phi(A) = sup_n w_n |A ∩ D_n| / |D_n| over an interval partition D.

    Weights are an explicit head plus a constant tail, so the norm of N is
    the tail weight and closed forms stay decidable.
    """

    partition: ns.BlockPartition = field(compare=False)
    head_weights: tuple[Fraction, ...] = ()
    tail_weight: Fraction = ONE
    name: str = "density-family"

    def weight(self, n: int) -> Fraction:
        if n <= len(self.head_weights):
            return self.head_weights[n - 1]
        return self.tail_weight

    def phi_points(self, members: Sequence[int]) -> Fraction:
        if not members:
            return ZERO
        members = sorted(members)
        best = ZERO
        n = 1
        while True:
            lo, hi = self.partition.block(n)
            if lo > members[-1]:
                break
            cnt = bisect_left(members, hi) - bisect_left(members, lo)
            if cnt:
                r = self.weight(n) * Fraction(cnt, hi - lo)
                if r > best:
                    best = r
            n += 1
        return best

    def tail_value(self, bits: np.ndarray, t: int) -> Fraction:
        horizon = bits.shape[0]
        counts = np.cumsum(bits, dtype=np.int64)
        def window(lo: int, hi: int) -> int:
            lo = max(lo, t + 1)
            hi = min(hi - 1, horizon)
            if hi < lo:
                return 0
            return int(counts[hi - 1]) - (int(counts[lo - 2]) if lo >= 2 else 0)
        best = ZERO
        n = 1
        while True:
            lo, hi = self.partition.block(n)   # the last block may be partial
            if lo > horizon:
                break
            cnt = window(lo, hi)
            if cnt:
                r = self.weight(n) * Fraction(cnt, hi - lo)
                if r > best:
                    best = r
            n += 1
        return best

    def _exact_norm_infinite(self, s: ns.NatSet) -> Optional[Fraction]:
        if isinstance(s, ns.PowersOf) and self.partition.lengths_unbounded:
            return ZERO
        d = ns.exact_density(s)
        if d is not None and self.partition.lengths_unbounded:
            # block averages of an eventually periodic set converge to its
            # density once block lengths grow without bound
            return self.tail_weight * d
        if isinstance(s, ns.Complement):
            inner = self.exact_norm(s.part)
            if inner == 0:
                return self.tail_weight
        return super()._exact_norm_infinite(s)

    def full_norm(self) -> Fraction:
        return max(self.tail_weight, max(self.head_weights, default=ZERO))

    def to_json(self) -> dict:
        return {"kind": "density-family",
                "partition": self.partition.to_json(),
                "head_weights": [str(w) for w in self.head_weights],
                "tail_weight": str(self.tail_weight)}


def normalize(m: Lscsm) -> Lscsm:
    """Scale so the norm of N equals 1 (the running convention downstream)."""
    full = m.full_norm()
    if full == ONE:
        return m
    if isinstance(m, WeightedSum):
        return WeightedSum(cap=ONE, scale=m.scale / full, harmonic=m.harmonic)
    if isinstance(m, DensityFamily):
        return DensityFamily(partition=m.partition,
                             head_weights=tuple(w / full for w in m.head_weights),
                             tail_weight=m.tail_weight / full)
    raise ValueError(f"cannot normalize {m.name} with full norm {full}")


def lscsm_from_json(body: dict) -> Lscsm:
    kind = body["kind"]
    if kind == "running-density":
        return RunningDensity()
    if kind == "counting-cap":
        return CountingCap()
    if kind == "weighted-sum":
        return WeightedSum(cap=Fraction(body["cap"]), scale=Fraction(body["scale"]),
                           harmonic=body["harmonic"])
    if kind == "density-family":
        return DensityFamily(partition=ns.BlockPartition.from_json(body["partition"]),
                             head_weights=tuple(Fraction(w) for w in body["head_weights"]),
                             tail_weight=Fraction(body["tail_weight"]))
    raise ValueError(f"unknown lscsm kind {kind!r}")


# ---------------------------------------------------------------------------
# Prefix evaluation and tail-trend estimation
# ---------------------------------------------------------------------------

def phi(m: Lscsm, s: ns.NatSet, horizon: int) -> Fraction:
    """Exact phi(s ∩ [1, horizon])."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return m.tail_value(s.prefix(horizon), 0)


def default_cuts(horizon: int) -> list[int]:
    return [horizon // 2, (3 * horizon) // 4, (7 * horizon) // 8]


@dataclass
class NormEstimate:
    """Finite-horizon reading of the limit norm of a set under one lscsm."""

    exact: Optional[Fraction]
    numeric: Fraction                     # corrected value at the deepest cut
    rows: list[tuple[int, Fraction, Fraction]]   # (cut, raw, corrected)
    trend: str                            # zero | decreasing | non-decreasing | mixed
    horizon: int

    @property
    def best(self) -> Fraction:
        return max(c for _, _, c in self.rows)

    def value(self) -> Fraction:
        return self.exact if self.exact is not None else self.numeric


def classify_trend(values: Sequence[Fraction], slack: Fraction) -> str:
    if all(v == 0 for v in values):
        return "zero"
    if 2 * values[-1] <= values[0]:
        return "decreasing"
    # sampling noise in a tail window scales with the value itself
    if all(b >= a - max(slack, a / 8) for a, b in zip(values, values[1:])):
        return "non-decreasing"
    return "mixed"


def norm_estimate(m: Lscsm, s: ns.NatSet, horizon: int,
                  cuts: Optional[Sequence[int]] = None,
                  slack: Fraction = Fraction(1, 200)) -> NormEstimate:
    """Evaluate phi on nested tails and classify the trend.

    Row values are phi(s ∩ (t, horizon]) divided by the variant's finite-
    horizon attenuation at that cut, so a set with a genuine limit norm shows
    a flat trend instead of the mechanical (N - t)/N decay.
    """
    if cuts is None:
        cuts = default_cuts(horizon)
    cuts = sorted(set(int(t) for t in cuts))
    if any(t < 1 or t >= horizon for t in cuts):
        raise ValueError("cuts must satisfy 1 <= t < horizon")
    exact = m.exact_norm(s)
    bits = s.prefix(horizon)
    rows: list[tuple[int, Fraction, Fraction]] = []
    raw0 = m.tail_value(bits, 0)
    rows.append((0, raw0, raw0))
    for t in cuts:
        raw = m.tail_value(bits, t)
        rows.append((t, raw, raw / m.tail_correction(t, horizon)))
    cut_corrected = [c for t, _, c in rows if t > 0]
    trend = classify_trend(cut_corrected, slack)
    return NormEstimate(exact=exact, numeric=cut_corrected[-1], rows=rows,
                        trend=trend, horizon=horizon)
