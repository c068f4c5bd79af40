"""High-precision constants used throughout, stored as decimal strings.

Values are registry literals, not computed at import time: the defining Euler
products converge far too slowly.  ``analytic.verify_constant`` shows how the
truncated products approach them.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath

DPS = 40


@dataclass(frozen=True)
class Constant:
    name: str
    digits: str
    provenance: str
    note: str = ""

    @property
    def mp(self) -> mpmath.mpf:
        with mpmath.workdps(DPS):
            return mpmath.mpf(self.digits)

    def __float__(self) -> float:
        return float(self.mp)


@dataclass(frozen=True)
class ConstantsTable:
    C_q: Constant
    C2: Constant
    C1: Constant
    F: Constant
    gamma: Constant
    mu: Constant
    B_q_ref: Constant

    @property
    def s(self) -> Constant:
        """Mean value of P(d): s = C_q^2 / C1."""
        with mpmath.workdps(DPS):
            value = self.C_q.mp ** 2 / self.C1.mp
            return Constant("s", mpmath.nstr(value, 30), "derived: C_q^2 / C1")

    def names(self) -> list[str]:
        return ["C_q", "C2", "C1", "F", "s", "gamma", "mu", "B_q_ref"]

    def get(self, name: str) -> Constant:
        if name not in self.names():
            raise KeyError(f"unknown constant {name!r}; known: {', '.join(self.names())}")
        return getattr(self, name)

    def __iter__(self):
        return (self.get(n) for n in self.names())


CONSTANTS = ConstantsTable(
    C_q=Constant(
        "C_q",
        "1.372813462818246009112192696727",
        "Hardy-Littlewood constant for m^2+1 as published with the search results",
    ),
    C2=Constant(
        "C2",
        "1.320323631693739147855624220029",
        "twin-prime constant 2*prod(1-1/(p-1)^2); published digits 1.320323631693739, "
        "extended with the standard literature value",
    ),
    C1=Constant(
        "C1",
        "0.975245556223143537223292783",
        "pair-count constant prod_{p=3(4)} p^2/(p-1)^2 * prod_{p=1(4)} p(p-4)/(p-1)^2",
    ),
    F=Constant(
        "F",
        "1.9504911124462870744465855658",
        "Shanks' Gaussian-twin constant (pi^2/2) prod_{p=1(4)} (1-4/p)((p+1)/(p-1))^2",
    ),
    gamma=Constant(
        "gamma",
        "0.5772156649015328606065120900824",
        "Euler-Mascheroni constant; published digits 0.57721566490153286, extended",
    ),
    mu=Constant(
        "mu",
        "1.4513692348833810502839684858920",
        "Soldner-Ramanujan constant li(mu) = 0; published digits 1.45136923488338105, extended",
    ),
    B_q_ref=Constant(
        "B_q_ref",
        "0.81459657170299",
        "sum of 1/q over primes q = m^2+1, 15-digit estimate from the search to 1e20",
        "only 14 decimals are known; no longer expansion exists",
    ),
)
