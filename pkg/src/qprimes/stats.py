"""Statistics folded from the ordered stream of primes q = m^2 + 1.

Conventions, per statistic:

* counts, Delta_q, sign changes, envelope and Brun sums run over the full set
  {2, 5, 17, ...} (the prime 2 is re-injected in front of the stored k's);
* pair counts, gap histograms and prime-k counts run over k >= 1 only.

Delta_q(x) = pi_q(x) - (C_q / 2) * int_2^x du / (sqrt(u) log u), with
pi_q(x) counting q <= x.  Between two primes Delta_q decreases continuously
and it jumps by +1 at each prime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np

from .analytic import int_half, int_half_log2, int_half_tail, li, li_array, li_mp
from .constants import CONSTANTS
from .fitkit import DecimationRule, FitResult, decimate, linear_fit
from .hlprod import P
from .primestore import KStream
from .qsieve import is_prime, k_limit

C_Q = float(CONSTANTS.C_q)
C_1 = float(CONSTANTS.C1)
F_CONST = float(CONSTANTS.F)
_LI_SQRT2 = li(math.sqrt(2.0))


def model_count(x) -> float:
    """(C_q / 2) * int_2^x du / (sqrt(u) log u)."""
    if x <= 2:
        return 0.0
    return C_Q / 2 * int_half(2, x)


def model_count_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    big = x > 2
    out[big] = C_Q / 2 * (li_array(np.sqrt(x[big])) - _LI_SQRT2)
    return out


def _sorted_checkpoints(xs: Iterable[int]) -> list[int]:
    pts = [int(x) for x in xs]
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    return pts


def _validate(stream: KStream) -> None:
    ks = stream.ks
    if ks.size and (ks[0] < 1 or np.any(np.diff(ks) <= 0)):
        raise ValueError("k stream must be strictly ascending with k >= 1")


def count_upto(stream: KStream, x: int) -> int:
    """pi_q(x), including q = 2."""
    if x < 2:
        return 0
    return 1 + stream.upto(x).size


@dataclass(frozen=True)
class AnalysisCheckpoint:
    x: int
    pi_q: int
    delta_q: float
    brun_partial: float
    k_last: int

    @property
    def model(self) -> float:
        return self.pi_q - self.delta_q

    @property
    def hl_first_term(self) -> float:
        """C_q sqrt(x) / log x."""
        return C_Q * math.sqrt(self.x) / math.log(self.x)


def _inv_q(stream: KStream, n: Optional[int] = None) -> np.ndarray:
    ks = stream.ks if n is None else stream.ks[:n]
    q = 4.0 * ks.astype(np.float64) ** 2 + 1.0
    return np.concatenate([[0.5], 1.0 / q])


def fold_stream(stream: KStream, checkpoint_xs: Iterable[int]) -> list[AnalysisCheckpoint]:
    """One AnalysisCheckpoint per x, counting q <= x."""
    _validate(stream)
    pts = _sorted_checkpoints(checkpoint_xs)
    inv = _inv_q(stream)
    out = []
    for x in pts:
        if x < 2:
            raise ValueError("checkpoints must be >= 2")
        n = count_upto(stream, x)
        k_last = int(stream.ks[n - 2]) if n > 1 else 0
        out.append(AnalysisCheckpoint(x, n, n - model_count(x), math.fsum(inv[:n].tolist()), k_last))
    return out


@dataclass
class FoldState:
    """Counters for the k-range [k_lo, k_hi); adjacent ranges merge by concatenation."""

    k_lo: int
    k_hi: int
    count: int = 0
    brun: float = 0.0
    k_first: Optional[int] = None
    k_last: Optional[int] = None

    @classmethod
    def of(cls, stream: KStream, k_lo: int, k_hi: int) -> "FoldState":
        ks = stream.ks
        sub = ks[(ks >= k_lo) & (ks < k_hi)]
        q = 4.0 * sub.astype(np.float64) ** 2 + 1.0
        return cls(
            k_lo,
            k_hi,
            int(sub.size),
            math.fsum((1.0 / q).tolist()),
            int(sub[0]) if sub.size else None,
            int(sub[-1]) if sub.size else None,
        )

    def merge(self, other: "FoldState") -> "FoldState":
        if other.k_lo != self.k_hi:
            raise ValueError(f"cannot merge non-adjacent folds [{self.k_lo},{self.k_hi}) and [{other.k_lo},{other.k_hi})")
        return FoldState(
            self.k_lo,
            other.k_hi,
            self.count + other.count,
            math.fsum([self.brun, other.brun]),
            self.k_first if self.k_first is not None else other.k_first,
            other.k_last if other.k_last is not None else self.k_last,
        )


# ---------------------------------------------------------------- Delta_q


@dataclass
class EventDeltas:
    """Delta_q just before (``before``) and at (``after``) each prime event q <= x_max."""

    q: np.ndarray
    before: np.ndarray
    after: np.ndarray

    @property
    def pi(self) -> np.ndarray:
        return np.arange(1, self.q.size + 1)


def event_deltas(stream: KStream, x_max: Optional[int] = None) -> EventDeltas:
    _validate(stream)
    x_max = stream.x_covered if x_max is None else x_max
    n = count_upto(stream, x_max)
    q = stream.qs(include_two=True)[:n]
    model = model_count_array(q.astype(np.float64))
    pi = np.arange(1, n + 1, dtype=np.float64)
    after = pi - model
    # float li is good to ~1e-7 absolute here; re-evaluate anything close to zero
    for i in np.flatnonzero(np.abs(after) < 1e-5):
        after[i] = float(pi[i] - CONSTANTS.C_q.mp / 2 * (li_mp(_mp_sqrt(int(q[i]))) - li_mp(_mp_sqrt(2))))
    return EventDeltas(q, after - 1.0, after)


def _mp_sqrt(n: int):
    with mpmath.workdps(40):
        return mpmath.sqrt(mpmath.mpf(n))


@dataclass
class SignChangeLog:
    xs: list[int]
    T: int

    @property
    def count(self) -> int:
        return len(self.xs)

    def count_below(self, t: int) -> int:
        return int(np.searchsorted(np.asarray(self.xs, dtype=np.float64), t, side="left"))


def sign_changes(stream: KStream, T: int) -> SignChangeLog:
    """Sign changes of Delta_q sampled at the primes q < T.

    Delta_q is read at each prime just after its jump; an entry x = q_n means
    Delta_q(q_{n-1}) and Delta_q(q_n) have opposite nonzero signs.  The first
    one is at 2917.
    """
    ev = event_deltas(stream, T - 1)
    sign = np.sign(ev.after)
    nz = np.flatnonzero(sign != 0)
    flips = nz[1:][sign[nz[1:]] != sign[nz[:-1]]]
    return SignChangeLog([int(v) for v in ev.q[flips]], T)


@dataclass
class EnvelopeSeries:
    x: np.ndarray
    omega: np.ndarray
    abs_delta: np.ndarray
    kept_mask: Optional[np.ndarray] = None

    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.x.tolist(), self.omega.tolist()))


def envelope(stream: KStream, rule: Optional[DecimationRule] = None, x_max: Optional[int] = None) -> EnvelopeSeries:
    """Running maximum omega(x) of |Delta_q| over t < x, recorded at every prime (optionally decimated).

    Both one-sided values at each prime enter the maximum, so omega(q_n) covers
    the whole interval up to and including q_n.
    """
    ev = event_deltas(stream, x_max)
    both = np.maximum(np.abs(ev.before), np.abs(ev.after))
    omega = np.maximum.accumulate(both)
    xs = ev.q.astype(np.float64)
    series = EnvelopeSeries(ev.q, omega, np.abs(ev.after))
    if rule is not None:
        kept = decimate(list(zip(xs.tolist(), ev.after.tolist())), rule)
        mask = np.zeros(xs.size, dtype=bool)
        mask[kept.indices] = True
        # every omega update must survive decimation
        mask[1:] |= omega[1:] > omega[:-1]
        mask[0] = True
        series = EnvelopeSeries(ev.q[mask], omega[mask], np.abs(ev.after)[mask], mask)
    return series


def scaled_error_max(stream: KStream, x_lo: int, x_hi: int) -> float:
    """max |Delta_q(x)| / x^{1/4} over [x_lo, x_hi], checked on both sides of every prime."""
    ev = event_deltas(stream, x_hi)
    q = ev.q.astype(np.float64)
    sel = q >= x_lo
    vals = np.maximum(np.abs(ev.after[sel]) / q[sel] ** 0.25, np.abs(ev.before[sel]) / q[sel] ** 0.25)
    return float(vals.max()) if vals.size else 0.0


# ---------------------------------------------------------------- Brun sums


@dataclass(frozen=True)
class BrunRow:
    x: int
    B: float
    B_star: float
    q_last: int


def brun(stream: KStream, checkpoint_xs: Iterable[int], *, overshoot: bool = True) -> list[BrunRow]:
    """B_q(x) = sum 1/q with compensated summation, and B_q*(x) = B_q(x) + (C_q/2) * tail(x).

    The published table closes each row at the first prime exceeding x and
    includes it (``overshoot=True``); ``overshoot=False`` sums q <= x only.
    """
    _validate(stream)
    pts = _sorted_checkpoints(checkpoint_xs)
    inv = _inv_q(stream)
    qs = stream.qs(include_two=True)
    rows = []
    for x in pts:
        n = count_upto(stream, x)
        if overshoot:
            if n >= qs.size:
                raise ValueError(f"no prime beyond x = {x} in the stream; extend the store")
            n += 1
        B = math.fsum(inv[:n].tolist())
        rows.append(BrunRow(x, B, B + C_Q / 2 * int_half_tail(x), int(qs[n - 1])))
    return rows


def brun_difference_test(x1: int, x2: int, stream: KStream) -> tuple[float, float]:
    """(B_q(x2) - B_q(x1) from the data, (C_q/2) * (tail(x1) - tail(x2)))."""
    if x1 > x2:
        raise ValueError("need x1 <= x2")
    stream.require(x2)
    if x1 == x2:
        return 0.0, 0.0
    inv = _inv_q(stream)
    n1, n2 = count_upto(stream, x1), count_upto(stream, x2)
    lhs = math.fsum(inv[n1:n2].tolist())
    rhs = C_Q / 2 * (int_half_tail(x1) - int_half_tail(x2))
    return lhs, rhs


def brun_measure(values: Iterable[int]) -> float:
    """Sum of reciprocals of distinct positive integers."""
    vals = [int(v) for v in values]
    if any(v <= 0 for v in vals):
        raise ValueError("Brun measure needs positive integers")
    if len(set(vals)) != len(vals):
        raise ValueError("values must be distinct")
    return math.fsum(1.0 / v for v in vals)


# ---------------------------------------------------------------- pairs and gaps


def _membership(stream: KStream, x: int) -> np.ndarray:
    ks = stream.upto(x)
    top = k_limit(x)
    flags = np.zeros(top + 1, dtype=bool)
    flags[ks] = True
    return flags


def pair_count(stream: KStream, d_max: int, x: int) -> dict[int, int]:
    """pi_q(d; x): number of k with 4k^2+1 <= x and both 4k^2+1, 4(k-d)^2+1 prime, for d = 1..d_max."""
    if d_max < 1:
        raise ValueError("d must be >= 1")
    flags = _membership(stream, x)
    out = {}
    for d in range(1, d_max + 1):
        out[d] = int(np.count_nonzero(flags[d:] & flags[:-d])) if d < flags.size else 0
    return out


def model_pair_count(d: int, x) -> float:
    """C1 * P(d) * int_5^x dt / (sqrt(t) log^2 t)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if x < 5:
        raise ValueError("x must be >= 5")
    return C_1 * P(d).value * int_half_log2(5, x)


@dataclass
class GapHistogram:
    x: int
    counts: dict[int, int]
    k_first: Optional[int]
    k_last: Optional[int]
    record_log: list[tuple[int, int]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def weighted_total(self) -> int:
        return sum(d * h for d, h in self.counts.items())

    @property
    def max_gap(self) -> int:
        return max(self.counts) if self.counts else 0


def gap_histogram(stream: KStream, x: int) -> GapHistogram:
    """h(d; x): gaps d between consecutive k with 4k^2 + 1 <= x, plus the record-gap log."""
    ks = stream.upto(x)
    if ks.size == 0:
        return GapHistogram(x, {}, None, None, [])
    gaps = np.diff(ks)
    values, counts = np.unique(gaps, return_counts=True)
    hist = {int(d): int(c) for d, c in zip(values, counts)}
    records = []
    if gaps.size:
        running = np.maximum.accumulate(gaps)
        new = np.flatnonzero(np.concatenate([[True], running[1:] > running[:-1]]))
        records = [(int(ks[i + 1]), int(gaps[i])) for i in new]
    return GapHistogram(x, hist, int(ks[0]), int(ks[-1]), records)


def record_gaps(stream: KStream, xs: Sequence[int]) -> list[tuple[int, int]]:
    """(x, K(x)) with K the largest consecutive-k gap among 4k^2 + 1 <= x."""
    return [(x, gap_histogram(stream, x).max_gap) for x in xs]


def _decay(x, pi_q: int) -> float:
    ratio = 2.0 * pi_q / math.sqrt(x)
    if ratio >= 1.0:
        raise ValueError(f"model breaks down: 2 pi_q(x) / sqrt(x) = {ratio:.4f} >= 1")
    return 1.0 - ratio


def model_h(d: int, x, pi_q: int) -> float:
    """F P(d) pi_q^2 / (C_q^2 sqrt(x)) * (1 - 2 pi_q / sqrt(x))^(d - 1)."""
    decay = _decay(x, pi_q)
    return F_CONST * P(d).value * pi_q**2 / (C_Q**2 * math.sqrt(x)) * decay ** (d - 1)


def model_h_limit(d: int, x, pi_q: int) -> float:
    """Large-x form F P(d) pi_q^2 / (C_q^2 sqrt(x)) * exp(-2 d pi_q / sqrt(x))."""
    _decay(x, pi_q)
    return F_CONST * P(d).value * pi_q**2 / (C_Q**2 * math.sqrt(x)) * math.exp(-2.0 * d * pi_q / math.sqrt(x))


@dataclass(frozen=True)
class ABClosedForm:
    x: float
    pi_q: int
    e_minus_A: float
    e_minus_A_limit: float
    B: float
    B_limit: float


def ab_closed_form(x, pi_q: int, s: Optional[float] = None) -> ABClosedForm:
    """Self-consistent slope and intercept of the gap ansatz.

    ``s`` is the mean of P(d); by default s = C_q^2 / C1, so that s * C1 = C_q^2.
    Passing the empirical mean 1.93242674 reproduces the published intercepts.
    """
    decay = _decay(x, pi_q)
    sq = math.sqrt(x)
    sc1 = C_Q**2 if s is None else s * C_1
    return ABClosedForm(
        x,
        pi_q,
        decay,
        math.exp(-2.0 * pi_q / sq),
        2.0 * pi_q**2 / (sc1 * (sq - 2.0 * pi_q)),
        2.0 * pi_q**2 / (sc1 * sq),
    )


@dataclass(frozen=True)
class ABFit:
    e_minus_A: float
    B: float
    d_window: tuple[int, int]
    fit: FitResult


def ab_params(hist: GapHistogram, discard: float = 0.25) -> ABFit:
    """Least-squares line through log(h(d;x) / (C1 P(d))) against d.

    The top ``discard`` fraction of the d range is dropped, where counts
    fluctuate most.
    """
    if not hist.counts:
        raise ValueError("empty histogram")
    d_hi = int(math.floor(hist.max_gap * (1.0 - discard)))
    pts = [(d, h / (C_1 * P(d).value)) for d, h in sorted(hist.counts.items()) if d <= d_hi and h > 0]
    if len(pts) < 3:
        raise ValueError("fewer than 3 usable histogram bins")
    fit = linear_fit(pts, "semilog_y")
    return ABFit(math.exp(fit.beta), fit.alpha, (pts[0][0], pts[-1][0]), fit)


def model_K(x) -> tuple[float, float]:
    """Expected largest k-gap: (refined form, log^2(x) / (4 C_q))."""
    if x < 1000:
        raise ValueError("model_K needs x >= 10^3")
    L = math.log(x)
    refined = L / (2 * C_Q) * (L / 2 + math.log(2 * C_Q**2) - 2 * math.log(L))
    return refined, L * L / (4 * C_Q)


def count_prime_k(stream: KStream, x: int) -> int:
    """How many k with 4k^2 + 1 <= x prime are themselves prime."""
    return sum(1 for k in stream.upto(x).tolist() if is_prime(k))
