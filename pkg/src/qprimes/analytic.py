"""Logarithmic integral and the integrals that reduce to it.

Scalar routines evaluate their series in mpmath at 34+ significant digits and
return floats; :func:`li_array` is a float64 vectorized variant for folding
whole prime streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np

from .constants import CONSTANTS
from .qsieve import primes_up_to

__all__ = [
    "DomainError",
    "AccuracyBudget",
    "li",
    "li_mp",
    "li_classical",
    "li_array",
    "e1",
    "int_half",
    "int_half_tail",
    "tail_asymptotic",
    "int_log2",
    "int_half_log2",
    "asym_half_series",
    "asym_cutoff",
    "harmonic_segment",
    "verify_constant",
    "ConstantCheck",
]

WORK_DPS = 34


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class AccuracyBudget:
    abs_tol: float = 1e-30
    rel_tol: float = 1e-32
    max_terms: int = 2000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_BUDGET = AccuracyBudget()


def li_mp(x, budget: AccuracyBudget = DEFAULT_BUDGET) -> mpmath.mpf:
    """li(x) for x > 1 by Ramanujan's series, returned as an mpf at the working precision.

    li(x) = gamma + log log x
            + sqrt(x) * sum_{n>=1} (-1)^(n-1) L^n / (n! 2^(n-1)) * sum_{k<=(n-1)/2} 1/(2k+1)
    with L = log x.
    """
    with mpmath.workdps(WORK_DPS + 10):
        x = mpmath.mpf(x)
        if x <= 1:
            raise DomainError(f"li series needs x > 1, got {x}")
        L = mpmath.log(x)
        term = mpmath.mpf(2)  # L^n / (n! 2^(n-1)) at n = 0 shifted below
        inner = mpmath.mpf(0)
        total = mpmath.mpf(0)
        sign = 1
        for n in range(1, budget.max_terms + 1):
            term = term * L / (2 * n)
            if (n - 1) % 2 == 0:
                inner += mpmath.mpf(1) / n
            piece = sign * term * inner
            total += piece
            sign = -sign
            if n > L and abs(piece) < budget.abs_tol + budget.rel_tol * abs(total):
                break
        else:
            raise ArithmeticError("li series did not converge within max_terms")
        return +(CONSTANTS.gamma.mp + mpmath.log(L) + mpmath.sqrt(x) * total)


def li(x, budget: AccuracyBudget = DEFAULT_BUDGET) -> float:
    """Principal-value logarithmic integral li(x), x > 1."""
    return float(li_mp(x, budget))


def li_classical(x, budget: AccuracyBudget = DEFAULT_BUDGET) -> float:
    """li(x) = gamma + log log x + sum L^n / (n n!), the slower classical series."""
    with mpmath.workdps(WORK_DPS + 10):
        x = mpmath.mpf(x)
        if x <= 1:
            raise DomainError(f"li series needs x > 1, got {x}")
        L = mpmath.log(x)
        power = mpmath.mpf(1)
        total = mpmath.mpf(0)
        for n in range(1, budget.max_terms + 1):
            power = power * L / n
            piece = power / n
            total += piece
            if n > L and piece < budget.abs_tol + budget.rel_tol * total:
                break
        else:
            raise ArithmeticError("li series did not converge within max_terms")
        return float(CONSTANTS.gamma.mp + mpmath.log(L) + total)


_GAMMA = float(CONSTANTS.gamma)


def li_array(x) -> np.ndarray:
    """Vectorized float64 li for x > 1 (Ramanujan's series, fixed term count)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 1.0):
        raise DomainError("li_array needs every x > 1")
    if x.size == 0:
        return x.copy()
    L = np.log(x)
    lmax = float(L.max())
    n_terms = int(max(40, 2.2 * lmax + 40))
    term = np.full_like(x, 2.0)
    total = np.zeros_like(x)
    inner = 0.0
    sign = 1.0
    for n in range(1, n_terms + 1):
        term = term * L / (2 * n)
        if (n - 1) % 2 == 0:
            inner += 1.0 / n
        total += sign * term * inner
        sign = -sign
    return _GAMMA + np.log(L) + np.sqrt(x) * total


def e1(z) -> float:
    """Exponential integral E1(z) for real z > 0."""
    with mpmath.workdps(WORK_DPS):
        z = mpmath.mpf(z)
        if z <= 0:
            raise DomainError(f"e1 needs z > 0, got {z}")
        if z > 40:
            # asymptotic series, truncated before its smallest term
            total, term = mpmath.mpf(0), mpmath.mpf(1)
            n = 0
            while n < int(z):
                total += term
                n += 1
                term = -term * n / z
            return float(mpmath.exp(-z) / z * total)
    # cancellation in the power series costs about z / ln 10 digits
    with mpmath.workdps(WORK_DPS + int(z / 2.3) + 5):
        z = mpmath.mpf(z)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        n = 0
        while True:
            n += 1
            power = -power * z / n
            piece = power / n
            total += piece
            if n > z and abs(piece) < mpmath.mpf(10) ** (-WORK_DPS - 2):
                break
        return float(-CONSTANTS.gamma.mp - mpmath.log(z) - total)


def _check_pair(a, b) -> None:
    if a < 2:
        raise DomainError(f"lower limit must be >= 2, got {a}")
    if a > b:
        raise DomainError(f"need a <= b, got a={a}, b={b}")


def int_half(a, b) -> float:
    """Integral of du / (sqrt(u) log u) over [a, b] = li(sqrt b) - li(sqrt a)."""
    _check_pair(a, b)
    if a == b:
        return 0.0
    with mpmath.workdps(WORK_DPS):
        return float(li_mp(mpmath.sqrt(b)) - li_mp(mpmath.sqrt(a)))


def int_half_tail(x) -> float:
    """Integral of du / (u^{3/2} log u) over [x, inf) = E1(log(x) / 2)."""
    if x <= 1:
        raise DomainError(f"tail integral needs x > 1, got {x}")
    with mpmath.workdps(WORK_DPS):
        return e1(mpmath.log(mpmath.mpf(x)) / 2)


def tail_asymptotic(x, n_terms: Optional[int] = None) -> tuple[float, int]:
    """Asymptotic expansion of :func:`int_half_tail`.

    sum_{n>=1} (-1)^(n-1) 2^n (n-1)! / (sqrt(x) log^n x), cut at n <= log(x)/2.
    """
    if x <= 1:
        raise DomainError(f"tail integral needs x > 1, got {x}")
    L = math.log(x)
    cutoff = max(1, int(L / 2))
    n_terms = cutoff if n_terms is None else n_terms
    total, term = 0.0, 2.0 / (math.sqrt(x) * L)
    for n in range(1, n_terms + 1):
        total += term
        term = -term * 2 * n / L
    return total, n_terms


def int_log2(a, b) -> float:
    """Integral of dt / log^2 t over [a, b] = li(b) - li(a) + a/log a - b/log b."""
    _check_pair(a, b)
    if a == b:
        return 0.0
    with mpmath.workdps(WORK_DPS):
        a_, b_ = mpmath.mpf(a), mpmath.mpf(b)
        return float(li_mp(b_) - li_mp(a_) + a_ / mpmath.log(a_) - b_ / mpmath.log(b_))


def int_half_log2(a, b) -> float:
    """Integral of dt / (sqrt(t) log^2 t) over [a, b].

    Equals (li(sqrt b) - li(sqrt a)) / 2 + sqrt(a)/log a - sqrt(b)/log b.
    """
    _check_pair(a, b)
    if a == b:
        return 0.0
    with mpmath.workdps(WORK_DPS):
        a_, b_ = mpmath.mpf(a), mpmath.mpf(b)
        ra, rb = mpmath.sqrt(a_), mpmath.sqrt(b_)
        value = (li_mp(rb) - li_mp(ra)) / 2 + ra / mpmath.log(a_) - rb / mpmath.log(b_)
        return float(value)


def asym_cutoff(x) -> int:
    """Largest n whose term is still not larger than its predecessor: floor(log(x)/2 + 1)."""
    return max(1, int(math.log(x) / 2 + 1))


def asym_half_series(x, n_terms: Optional[int] = None) -> tuple[float, int]:
    """C_q * sum_{n=1}^{N} 2^(n-1) (n-1)! sqrt(x) / log^n x and the N used.

    Without ``n_terms`` the sum runs to the divergence cutoff; asking for more
    terms than the cutoff raises DomainError.
    """
    if x < 2:
        raise DomainError(f"need x >= 2, got {x}")
    cutoff = asym_cutoff(x)
    if n_terms is None:
        n_terms = cutoff
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    if n_terms > cutoff:
        raise DomainError(
            f"asymptotic series diverges past n = {cutoff} at x = {x} (terms grow once n > log(x)/2 + 1)"
        )
    with mpmath.workdps(WORK_DPS):
        xm = mpmath.mpf(x)
        L = mpmath.log(xm)
        term = mpmath.sqrt(xm) / L
        total = mpmath.mpf(0)
        for n in range(1, n_terms + 1):
            total += term
            term = term * 2 * n / L
        return float(CONSTANTS.C_q.mp * total), n_terms


def asym_half_terms(x, n_terms: int) -> list[float]:
    """Individual terms 2^(n-1) (n-1)! sqrt(x) / log^n x for n = 1..n_terms (no cutoff)."""
    L = math.log(x)
    out, term = [], math.sqrt(x) / L
    for n in range(1, n_terms + 1):
        out.append(term)
        term = term * 2 * n / L
    return out


EXACT_SPAN = 10_000
EXACT_BELOW = 10_000


def _harmonic_exact(n: int, m: int) -> float:
    return math.fsum(1.0 / k for k in range(n, m + 1))


def _harmonic_closed(n: int, m: int) -> float:
    # log((m + 1/2)/(n - 1/2)) plus the next two terms of the midpoint expansion
    a, b = n - 0.5, m + 0.5
    head = math.log1p((m - n + 1) / a)
    return head + (1.0 / (b * b) - 1.0 / (a * a)) / 24.0 - 7.0 * (1.0 / b**4 - 1.0 / a**4) / 960.0


def harmonic_segment(n: int, m: int) -> float:
    """sum_{k=n}^{m} 1/k.

    Short segments and the part below EXACT_BELOW are summed term by term; the
    rest uses log(m + 1/2) - log(n - 1/2) with its 1/n^2 and 1/n^4 corrections,
    whose truncation error is below 1e-19 once n >= 10^4.
    """
    if n < 2:
        raise DomainError(f"harmonic_segment needs n >= 2, got {n}")
    if m < n:
        return 0.0
    if m - n < EXACT_SPAN:
        return _harmonic_exact(n, m)
    if n < EXACT_BELOW:
        return math.fsum([_harmonic_exact(n, EXACT_BELOW - 1), _harmonic_closed(EXACT_BELOW, m)])
    return _harmonic_closed(n, m)


@dataclass
class ConstantCheck:
    name: str
    prime_bound: int
    partial: float
    registered: float
    deviation: float
    trend: list[tuple[int, float]] = field(default_factory=list)

    @property
    def shrinking(self) -> bool:
        devs = [abs(d) for _, d in self.trend]
        return len(devs) < 2 or devs[-1] < devs[0]


def _log_factors(name: str, p: np.ndarray) -> tuple[np.ndarray, float]:
    # log of each odd prime's Euler factor, and the log of the constant prefactor
    pf = p.astype(np.float64)
    one = p % 4 == 1
    three = p % 4 == 3
    if name == "C_q":
        chi = np.where(one, 1.0, -1.0)
        return np.log1p(-chi / (pf - 1.0)), 0.0
    if name == "C1":
        f = np.zeros_like(pf)
        f[three] = 2.0 * (np.log(pf[three]) - np.log(pf[three] - 1.0))
        f[one] = np.log(pf[one]) + np.log(pf[one] - 4.0) - 2.0 * np.log(pf[one] - 1.0)
        return f, 0.0
    if name == "F":
        f = np.zeros_like(pf)
        f[one] = np.log1p(-4.0 / pf[one]) + 2.0 * (np.log(pf[one] + 1.0) - np.log(pf[one] - 1.0))
        return f, math.log(math.pi**2 / 2)
    if name == "s":
        f = np.zeros_like(pf)
        q = pf[one]
        f[one] = 2 * np.log(q - 2) + 2 * np.log(q - 1) - np.log(q) - np.log(q - 4) - 2 * np.log(q + 1)
        f[three] = 2.0 * (np.log(pf[three] + 1.0) - np.log(pf[three] - 1.0))
        return f, math.log(0.25)
    if name == "C2":
        return np.log1p(-1.0 / (pf - 1.0) ** 2), math.log(2.0)
    raise ValueError(f"{name} has no Euler product to verify")


def verify_constant(name: str, prime_bound: int) -> ConstantCheck:
    """Truncated Euler product for ``name`` over primes <= prime_bound, against the registry.

    The trend lists the signed deviation at each decade up to prime_bound.
    """
    registered = CONSTANTS.get(name)
    if prime_bound < 3:
        raise ValueError("prime_bound must be >= 3")
    p = primes_up_to(prime_bound)[1:]  # every product runs over odd primes
    logs, offset = _log_factors(name, p)
    partial_logs = np.cumsum(logs)
    target = float(registered)
    bounds = [10**e for e in range(2, 20) if 10**e < prime_bound] + [prime_bound]
    trend = []
    for b in bounds:
        i = int(np.searchsorted(p, b, side="right")) - 1
        trend.append((b, math.exp(offset + float(partial_logs[i])) - target))
    partial = math.exp(offset + math.fsum(logs.tolist()))
    return ConstantCheck(name, prime_bound, partial, target, partial - target, trend)
