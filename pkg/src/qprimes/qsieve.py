"""Segmented candidate sieve for primes q = 4k^2 + 1.

Every odd prime of the form m^2 + 1 has m even, so the search runs over the
generator index k with m = 2k.  A prime p divides 4k^2 + 1 exactly when
p = 1 (mod 4) and k is congruent to one of the two roots u of
4u^2 + 1 = 0 (mod p); primes 2 and p = 3 (mod 4) never divide it.  The sieve
clears those residue classes for every prime up to the sieve bound.  When the
bound reaches sqrt(q) the survivors are prime outright; otherwise they go
through a deterministic Miller-Rabin test.

The special prime 2 = 1^2 + 1 is reported as the event with k = 0.
"""

from __future__ import annotations

import math
import os
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "QPrimeEvent",
    "SieveSegment",
    "EnumerationSummary",
    "primes_up_to",
    "is_prime",
    "sqrt_mod",
    "root_of_minus_one",
    "roots_of_minus_one",
    "default_sieve_bound",
    "sieve_segment",
    "k_limit",
    "iter_k_blocks",
    "generate_k",
    "enumerate_qprimes",
    "DEFAULT_SEGMENT_SIZE",
    "Q_LIMIT",
]

DEFAULT_SEGMENT_SIZE = 1 << 22
# exact enumeration is capped at q < 2**64
Q_LIMIT = 1 << 64
MAX_DEFAULT_BOUND = 1 << 27

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_SMALL_PRIMES = _MR_BASES + (41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)
# the first 12 prime bases are a proof of primality below this bound
_MR_DETERMINISTIC_LIMIT = 318665857834031151167461


@dataclass(frozen=True, slots=True)
class QPrimeEvent:
    """One prime of the form m^2 + 1.

    ``k`` is the generator index with q = 4k^2 + 1; ``k == 0`` encodes q = 2.
    """

    k: int
    q: int
    residue3: int

    @classmethod
    def from_k(cls, k: int) -> "QPrimeEvent":
        q = 2 if k == 0 else 4 * k * k + 1
        return cls(k, q, q % 3)


@dataclass
class SieveSegment:
    k_lo: int
    k_hi: int
    survivor_bits: np.ndarray
    sieve_bound: int

    def survivors(self) -> np.ndarray:
        return self.k_lo + np.flatnonzero(self.survivor_bits).astype(np.int64)

    def __len__(self) -> int:
        return self.k_hi - self.k_lo


@dataclass(frozen=True)
class EnumerationSummary:
    count: int
    k_last: int


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n, ascending, as int64."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def is_prime(n: int) -> bool:
    """Deterministic primality test for every n < 2**64 (and somewhat beyond)."""
    n = int(n)
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    if n < 97 * 97:
        return True
    if n >= _MR_DETERMINISTIC_LIMIT:
        raise ValueError(f"is_prime is only deterministic below {_MR_DETERMINISTIC_LIMIT}")
    d = n - 1
    s = 0
    while d & 1 == 0:
        d >>= 1
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def sqrt_mod(a: int, p: int) -> Optional[int]:
    """Smallest square root of ``a`` modulo the odd prime ``p`` (Tonelli-Shanks), or None."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
        return min(r, p - r)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return min(r, p - r)


def root_of_minus_one(p: int) -> Optional[tuple[int, int]]:
    """The two residues u mod p with 4u^2 + 1 = 0 (mod p), or None when p = 3 (mod 4).

    Raises ValueError if ``p`` is not an odd prime.
    """
    if p < 3 or p % 2 == 0 or not is_prime(p):
        raise ValueError(f"root_of_minus_one needs an odd prime, got {p}")
    if p % 4 == 3:
        return None
    r = sqrt_mod(p - 1, p)
    u = r * ((p + 1) // 2) % p
    return (min(u, p - u), max(u, p - u))


def _powmod_array(base: np.ndarray, exp: np.ndarray, mod: np.ndarray) -> np.ndarray:
    # moduli stay below 2**31 so every product fits in int64
    result = np.ones_like(mod)
    base = base % mod
    exp = exp.copy()
    while exp.any():
        odd = (exp & 1).astype(bool)
        result[odd] = result[odd] * base[odd] % mod[odd]
        base = base * base % mod
        exp >>= 1
    return result


def roots_of_minus_one(primes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized root_of_minus_one over the primes p = 1 (mod 4) in ``primes``.

    Returns ``(p, u1, u2)`` arrays with u1 < u2.  Primes must be below 2**31.
    """
    p = np.asarray(primes, dtype=np.int64)
    p = p[p % 4 == 1]
    if p.size and int(p[-1]) >= 1 << 31:
        raise ValueError("vectorized roots need primes below 2**31")
    r = np.zeros_like(p)
    todo = np.ones(p.size, dtype=bool)
    for c in _SMALL_PRIMES + tuple(range(101, 1000, 2)):
        if not todo.any():
            break
        idx = np.flatnonzero(todo)
        pp = p[idx]
        t = _powmod_array(np.full_like(pp, c), (pp - 1) // 4, pp)
        ok = t * t % pp == pp - 1
        r[idx[ok]] = t[ok]
        todo[idx[ok]] = False
    for i in np.flatnonzero(todo):
        r[i] = sqrt_mod(int(p[i]) - 1, int(p[i]))
    u = r * ((p + 1) // 2) % p
    return p, np.minimum(u, p - u), np.maximum(u, p - u)


def default_sieve_bound(k_hi: int) -> int:
    """Sieve far enough to certify every survivor below k_hi, capped at 2**27.

    With bound >= 2(k_hi - 1) + 1 no composite 4k^2 + 1 survives, so the
    Miller-Rabin pass is skipped; above the cap survivors are tested instead.
    """
    return max(5, min(MAX_DEFAULT_BOUND, 2 * k_hi + 1))


def k_limit(x_max: int) -> int:
    """Largest k with 4k^2 + 1 <= x_max (0 when there is none)."""
    if x_max < 5:
        return 0
    return math.isqrt((x_max - 1) // 4)


def _check_primes(primes: Sequence[int]) -> np.ndarray:
    arr = np.asarray(primes, dtype=np.int64)
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValueError("prime list must be strictly ascending")
    return arr


def _clear(bits: np.ndarray, k_lo: int, p: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> None:
    n = bits.size
    small = p < n
    for pi, a, b in zip(p[small].tolist(), u1[small].tolist(), u2[small].tolist()):
        bits[(a - k_lo) % pi :: pi] = False
        bits[(b - k_lo) % pi :: pi] = False
    big = ~small
    for u in (u1[big], u2[big]):
        off = (u - k_lo) % p[big]
        bits[off[off < n]] = False


def _restore_small(bits: np.ndarray, k_lo: int, k_hi: int, primes: np.ndarray) -> None:
    # k whose q is itself a sieving prime must not be removed by that prime
    bound = int(primes[-1]) if primes.size else 0
    top = min(k_hi, k_limit(bound) + 1)
    for k in range(k_lo, top):
        q = 4 * k * k + 1
        i = bisect_left(primes, q)
        bits[k - k_lo] = i < primes.size and int(primes[i]) == q


def sieve_segment(
    k_lo: int,
    k_hi: int,
    primes: Sequence[int],
    roots: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
) -> SieveSegment:
    """Sieve k in [k_lo, k_hi) by every prime in ``primes``.

    A survivor bit stays set iff 4k^2 + 1 has no prime factor in the list other
    than itself.  ``roots`` may carry precomputed ``roots_of_minus_one(primes)``.
    """
    if k_lo < 1:
        raise ValueError("k_lo must be >= 1")
    if k_hi <= k_lo:
        raise ValueError(f"empty k range [{k_lo}, {k_hi})")
    arr = _check_primes(primes)
    if roots is None:
        roots = roots_of_minus_one(arr)
    bits = np.ones(k_hi - k_lo, dtype=bool)
    _clear(bits, k_lo, *roots)
    _restore_small(bits, k_lo, k_hi, arr)
    return SieveSegment(k_lo, k_hi, bits, int(arr[-1]) if arr.size else 0)


def _segment_primes(seg: SieveSegment) -> np.ndarray:
    ks = seg.survivors()
    if ks.size == 0:
        return ks
    bound = seg.sieve_bound
    k_top = int(ks[-1])
    if bound * bound > 4 * k_top * k_top + 1:
        # no prime factor <= bound and q < bound**2: q is prime
        return ks
    keep = [k for k in ks.tolist() if is_prime(4 * k * k + 1)]
    return np.asarray(keep, dtype=np.int64)


def iter_k_blocks(
    k_lo: int,
    k_hi: int,
    *,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    sieve_bound: Optional[int] = None,
    threads: int = 1,
) -> Iterator[np.ndarray]:
    """Yield, segment by segment and in ascending order, every k in [k_lo, k_hi) with 4k^2+1 prime."""
    k_lo = max(k_lo, 1)
    if k_hi <= k_lo:
        return
    if 4 * (k_hi - 1) ** 2 + 1 >= Q_LIMIT:
        raise ValueError("exact enumeration is limited to q < 2**64")
    if segment_size < 1:
        raise ValueError("segment_size must be positive")
    bound = sieve_bound if sieve_bound is not None else default_sieve_bound(k_hi)
    primes = primes_up_to(bound)
    roots = roots_of_minus_one(primes)
    spans = [(lo, min(lo + segment_size, k_hi)) for lo in range(k_lo, k_hi, segment_size)]

    def work(span: tuple[int, int]) -> np.ndarray:
        return _segment_primes(sieve_segment(span[0], span[1], primes, roots))

    if threads <= 1:
        for span in spans:
            yield work(span)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map() hands results back in submission order
        for block in pool.map(work, spans):
            yield block


def generate_k(x_max: int, **kwargs) -> np.ndarray:
    """All k >= 1 with 4k^2 + 1 <= x_max prime, as an ascending int64 array."""
    blocks = list(iter_k_blocks(1, k_limit(x_max) + 1, **kwargs))
    if not blocks:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(blocks)


def enumerate_qprimes(
    x_max: int,
    sink: Optional[Callable[[QPrimeEvent], object]] = None,
    **kwargs,
) -> EnumerationSummary:
    """Emit every prime q = m^2 + 1 <= x_max in ascending order, starting with q = 2.

    ``sink`` is called once per QPrimeEvent; exceptions it raises propagate.
    Extra keyword arguments go to :func:`iter_k_blocks`.
    """
    if x_max < 2:
        return EnumerationSummary(0, 0)
    count, k_last = 1, 0
    if sink is not None:
        sink(QPrimeEvent(0, 2, 2))
    for block in iter_k_blocks(1, k_limit(x_max) + 1, **kwargs):
        if sink is not None:
            for k in block.tolist():
                sink(QPrimeEvent.from_k(k))
        if block.size:
            count += block.size
            k_last = int(block[-1])
    return EnumerationSummary(count, k_last)


def threads_from_env(default: int = 1) -> int:
    value = os.environ.get("QP_THREADS")
    return int(value) if value else default
