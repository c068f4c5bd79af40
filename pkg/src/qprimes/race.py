"""The residue race modulo 3 among primes q = m^2 + 1.

Every q > 2 in the stream is 1 or 2 mod 3 (3 never divides m^2 + 1), and the
local densities favour residue 2 two to one.  The walk

    y(x) = pi_q(x; 3, 2) - 2 pi_q(x; 3, 1)

steps +1 at a prime q = 2 (mod 3) and -2 at a prime q = 1 (mod 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .analytic import harmonic_segment
from .primestore import KStream

DENSITY_CONVENTION = "n in [2, x-1]; counts use q <= n; strict inequalities; ties go to delta0; divided by log x"


class RaceCorruptionError(ValueError):
    """A stream value divisible by 3 cannot be a prime m^2 + 1."""


@dataclass(frozen=True)
class RaceState:
    pi1: int
    pi2: int
    y: int
    returns: int
    w2: int
    last_q: int

    @property
    def ratio(self) -> float:
        return self.pi2 / self.pi1 if self.pi1 else math.inf


@dataclass
class RaceWalk:
    """Per-event arrays; index i describes the state right after the i-th prime."""

    q: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray
    y: np.ndarray
    returns: np.ndarray
    w2: np.ndarray

    def __len__(self) -> int:
        return int(self.q.size)

    def state(self, i: int) -> RaceState:
        return RaceState(
            int(self.pi1[i]), int(self.pi2[i]), int(self.y[i]), int(self.returns[i]), int(self.w2[i]), int(self.q[i])
        )

    def at(self, x: int) -> RaceState:
        """State with every q <= x counted."""
        n = int(np.searchsorted(self.q, np.uint64(x), side="right"))
        if n == 0:
            return RaceState(0, 0, 0, 0, 0, 0)
        return self.state(n - 1)

    def first_lead_change(self) -> Optional[int]:
        """First prime after which pi2 < 2 pi1."""
        idx = np.flatnonzero(self.y < 0)
        return int(self.q[idx[0]]) if idx.size else None


def race_walk(events: Union[KStream, Sequence[int], np.ndarray], x_max: Optional[int] = None) -> RaceWalk:
    """Fold the events q <= x_max (q = 2 included) into the race state.

    ``events`` is a KStream or an ascending sequence of q values.
    """
    if isinstance(events, KStream):
        q = events.qs(include_two=True)
        if x_max is not None:
            events.require(x_max)
    else:
        q = np.asarray(events, dtype=np.uint64)
        if q.size and np.any(np.diff(q.astype(np.float64)) <= 0):
            raise ValueError("events must be strictly ascending")
    if x_max is not None:
        q = q[: int(np.searchsorted(q, np.uint64(x_max), side="right"))]
    r = (q % np.uint64(3)).astype(np.int64)
    bad = np.flatnonzero(r == 0)
    if bad.size:
        raise RaceCorruptionError(f"stream value {int(q[bad[0]])} is divisible by 3")
    one = r == 1
    pi1 = np.cumsum(one)
    pi2 = np.cumsum(~one)
    y = pi2 - 2 * pi1
    return RaceWalk(q, pi1, pi2, y, np.cumsum(y == 0), np.cumsum(y > 0))


@dataclass(frozen=True)
class RaceRow:
    x: int
    pi_q: int
    state: RaceState

    @property
    def w2_fraction(self) -> float:
        return self.state.w2 / self.pi_q if self.pi_q else 0.0


def race_table(stream: KStream, checkpoint_xs: Iterable[int]) -> list[RaceRow]:
    xs = [int(x) for x in checkpoint_xs]
    walk = race_walk(stream, max(xs))
    rows = []
    for x in xs:
        st = walk.at(x)
        rows.append(RaceRow(x, st.pi1 + st.pi2, st))
    return rows


@dataclass(frozen=True)
class DensityTriple:
    x: int
    delta1: float
    delta2: float
    delta0: float

    @property
    def total(self) -> float:
        return self.delta1 + self.delta2 + self.delta0


def densities(stream: KStream, checkpoint_xs: Iterable[int]) -> list[DensityTriple]:
    """Finite-x logarithmic densities of the three race outcomes.

    The sign of y is constant on [q_i, q_{i+1} - 1], so each run of equal sign
    contributes one harmonic segment.
    """
    xs = sorted(int(x) for x in checkpoint_xs)
    if not xs:
        return []
    if xs[0] < 3:
        raise ValueError("density checkpoints must be >= 3")
    walk = race_walk(stream, xs[-1])
    q = walk.q.astype(object)
    # bucket 0: 2pi1 > pi2 (y < 0), 1: 2pi1 < pi2 (y > 0), 2: tie
    bucket = np.where(walk.y < 0, 0, np.where(walk.y > 0, 1, 2))
    parts: list[list[float]] = [[], [], []]
    out = []
    i = 0
    n = 2  # next integer still to be assigned
    for x in xs:
        while n <= x - 1:
            # events with q <= n fix the state at n
            while i + 1 < len(walk) and int(q[i + 1]) <= n:
                i += 1
            end = int(q[i + 1]) - 1 if i + 1 < len(walk) else x - 1
            end = min(end, x - 1)
            parts[int(bucket[i])].append(harmonic_segment(n, end))
            n = end + 1
        L = math.log(x)
        s = [math.fsum(p) / L for p in parts]
        out.append(DensityTriple(x, s[0], s[1], s[2]))
    return out


@dataclass(frozen=True)
class FxValue:
    x: float
    F: float
    terms_used: int
    exhausted: bool
    last_weight: float

    @property
    def tail_significant(self) -> bool:
        """Stream ran out while terms still carried weight above 0.01."""
        return self.exhausted and self.last_weight > 0.01


def chebyshev_F(stream: KStream, x: float, rel_tol: float = 1e-8, chunk: int = 1 << 16) -> FxValue:
    """F(x) = sum c_q exp(-q/x), c_q = 2 for q = 1 and -1 for q = 2 (mod 3).

    Summation stops at the first term whose magnitude relative to the running
    sum (that term included) drops below ``rel_tol``.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    q = stream.qs(include_two=True)
    total = 0.0
    weight = 1.0
    for lo in range(0, q.size, chunk):
        qq = q[lo : lo + chunk]
        c = np.where(qq % np.uint64(3) == 1, 2.0, -1.0)
        w = np.exp(-qq.astype(np.float64) / x)
        terms = c * w
        running = total + np.cumsum(terms)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(terms) / np.abs(running)
        hit = np.flatnonzero(rel < rel_tol)
        if hit.size:
            j = int(hit[0])
            return FxValue(x, math.fsum([total, *terms[: j + 1].tolist()]), lo + j + 1, False, float(w[j]))
        total = math.fsum([total, *terms.tolist()])
        weight = float(w[-1])
    return FxValue(x, total, int(q.size), True, weight)


def geometric_points(start: float, ratio: float, count: int) -> list[float]:
    if start <= 0 or ratio <= 0 or count < 1:
        raise ValueError("geometric points need start > 0, ratio > 0, count >= 1")
    return [start * ratio**i for i in range(count)]
