"""Bateman-Horn local factors for the pair 4k^2 + 1, 4(k - d)^2 + 1.

P(d) = prod_{p = 1 (4), p | d} (p-2)/(p-4) * prod_{p = 1 (4), p | d^2+1} (p-3)/(p-4)

is the oscillating factor in the expected number of k-pairs at distance d.
Its running mean is conjectured to tend to s = C_q^2 / C1.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .constants import CONSTANTS
from .qsieve import is_prime, primes_up_to, roots_of_minus_one

__all__ = [
    "Factorization",
    "PdValue",
    "factorize",
    "w_of",
    "P",
    "p_values",
    "mean_P",
    "MeanPResult",
    "D_MAX",
]

D_MAX = 1 << 31
_TRIAL = [int(p) for p in primes_up_to(1000)]


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    def product(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]


def _rho(n: int, rng: random.Random) -> int:
    # Brent's variant of Pollard rho; returns a nontrivial factor of composite odd n
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def factorize(n: int, seed: int = 0x5EED) -> Factorization:
    """Complete factorization of 2 <= n < 2**64: trial division, then seeded Pollard rho."""
    n = int(n)
    if n < 2:
        raise ValueError(f"factorize needs n >= 2, got {n}")
    if n >= 1 << 64:
        raise ValueError("factorize is limited to n < 2**64")
    counts: dict[int, int] = {}
    m = n
    for p in _TRIAL:
        if p * p > m:
            break
        while m % p == 0:
            counts[p] = counts.get(p, 0) + 1
            m //= p
    rng = random.Random(seed)
    stack = [m] if m > 1 else []
    while stack:
        c = stack.pop()
        if is_prime(c):
            counts[c] = counts.get(c, 0) + 1
            continue
        r = math.isqrt(c)
        if r * r == c:
            stack += [r, r]
            continue
        f = _rho(c, rng)
        stack += [f, c // f]
    return Factorization(n, tuple(sorted(counts.items())))


def w_of(p: int, d: int) -> int:
    """Number of distinct u mod p with (4u^2+1)(4(u-d)^2+1) = 0 (mod p)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if p == 2 or p % 4 == 3:
        return 0
    if d % p == 0:
        return 2
    if (d * d + 1) % p == 0:
        return 3
    return 4


@dataclass(frozen=True)
class PdValue:
    d: int
    exact: Fraction
    contributing_primes: tuple[tuple[int, str], ...] = field(default=())

    @property
    def value(self) -> float:
        return float(self.exact)


def P(d: int) -> PdValue:
    """The oscillation product P(d), with the primes that contribute to it."""
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > D_MAX:
        raise OverflowError(f"d = {d} > 2**31 would push d^2 + 1 past 64 bits")
    value = Fraction(1)
    used: list[tuple[int, str]] = []
    if d > 1:
        for p in factorize(d).primes():
            if p % 4 == 1:
                value *= Fraction(p - 2, p - 4)
                used.append((p, "divides_d"))
    for p in factorize(d * d + 1).primes():
        if p % 4 == 1:
            value *= Fraction(p - 3, p - 4)
            used.append((p, "divides_d2plus1"))
    return PdValue(d, value, tuple(used))


def p_values(n: int, block: int = 1 << 20) -> np.ndarray:
    """Array ``out`` with out[d] = P(d) for 1 <= d <= n (out[0] unused, set to 0).

    Sieves over d instead of factoring one d at a time: the primes p = 1 (mod 4)
    up to n are applied through the classes d = 0 and d = +-r (mod p) with
    r^2 = -1.  What is left of d^2 + 1 after removing them is 1 or a single
    prime above n, because two such primes would exceed n^2 + 1.
    """
    if n < 1:
        return np.zeros(1)
    if n > D_MAX:
        raise OverflowError("n > 2**31 would push d^2 + 1 past 64 bits")
    primes = primes_up_to(n)
    p1 = primes[primes % 4 == 1]
    # roots of d^2 = -1 are 2u for the roots u of 4u^2 = -1
    p_, u1, u2 = roots_of_minus_one(p1)
    r1 = (2 * u1) % p_
    r2 = (2 * u2) % p_
    f_d = (p_ - 2) / (p_ - 4)
    f_q = (p_ - 3) / (p_ - 4)
    out = np.zeros(n + 1)
    for lo in range(1, n + 1, block):
        hi = min(lo + block, n + 1)
        d = np.arange(lo, hi, dtype=np.int64)
        vals = np.ones(hi - lo)
        rest = d * d + 1
        while True:
            even = rest % 2 == 0
            if not even.any():
                break
            rest[even] //= 2
        for p, a, b, fd, fq in zip(p_.tolist(), r1.tolist(), r2.tolist(), f_d.tolist(), f_q.tolist()):
            vals[(-lo) % p :: p] *= fd
            for r in (a, b):
                start = (r - lo) % p
                vals[start::p] *= fq
                idx = np.arange(start, hi - lo, p)
                while idx.size:
                    rest[idx] //= p
                    idx = idx[rest[idx] % p == 0]
        big = rest > 1
        rb = rest[big].astype(np.float64)
        vals[big] *= (rb - 3.0) / (rb - 4.0)
        out[lo:hi] = vals
    return out


@dataclass
class MeanPResult:
    series: list[tuple[int, float]]
    s: float

    @property
    def final(self) -> float:
        return self.series[-1][1]

    @property
    def deviation(self) -> float:
        return self.final - self.s


def mean_P(n_max: int, checkpoints: Optional[Iterable[int]] = None) -> MeanPResult:
    """Running mean (1/n) sum_{d<=n} P(d) at each checkpoint (n_max always included)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    pts = sorted({int(c) for c in (checkpoints or []) if 1 <= int(c) <= n_max} | {n_max})
    vals = p_values(n_max)
    series = []
    prev, partial = 1, []
    for c in pts:
        partial.append(math.fsum(vals[prev : c + 1].tolist()))
        prev = c + 1
        series.append((c, math.fsum(partial) / c))
    return MeanPResult(series, float(CONSTANTS.s.mp))
