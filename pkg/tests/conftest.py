from __future__ import annotations

import numpy as np
import pytest
import sympy

from qprimes.primestore import KStream


def brute_ks(k_max: int) -> np.ndarray:
    """k <= k_max with 4k^2 + 1 prime, by an independent primality test."""
    return np.array([k for k in range(1, k_max + 1) if sympy.isprime(4 * k * k + 1)], dtype=np.int64)


@pytest.fixture(scope="session")
def small_stream() -> KStream:
    """Every q <= 10^6 from the brute-force oracle (k <= 500)."""
    return KStream(brute_ks(500), 500)


@pytest.fixture(scope="session")
def stream_1e10() -> KStream:
    return KStream.scan(10**10)


@pytest.fixture(scope="session")
def stream_1e12() -> KStream:
    return KStream.scan(10**12)
