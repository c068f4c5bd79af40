from __future__ import annotations

import math
import random

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprimes.analytic import (
    DomainError,
    asym_cutoff,
    asym_half_series,
    asym_half_terms,
    e1,
    harmonic_segment,
    int_half,
    int_half_log2,
    int_half_tail,
    int_log2,
    li,
    li_array,
    li_classical,
    tail_asymptotic,
    verify_constant,
)
from qprimes.constants import CONSTANTS

# Frozen quadrature values (mpmath.quad at 30 digits in the variable t = log u).
FROZEN = {
    "int_half(2,1e6)": 177.713028815982098514140401427,
    "int_log2(2,1e6)": 6246.97573522187107870463285565,
    "int_half_log2(5,1e10)": 472.668770307769218760314534992,
    "tail(1e20)": 4.16888775001964798162603109448e-12,
}


def quad_log(f, a, b, pieces=24):
    """Integral over u in [a, b] after substituting u = e^t; ``f`` takes t."""
    with mpmath.workdps(30):
        return float(mpmath.quad(f, mpmath.linspace(mpmath.log(a), mpmath.log(b), pieces)))


def quad_half(a, b):
    return quad_log(lambda t: mpmath.exp(t / 2) / t, a, b)


def quad_log2(a, b):
    return quad_log(lambda t: mpmath.exp(t) / t**2, a, b)


def quad_half_log2(a, b):
    return quad_log(lambda t: mpmath.exp(t / 2) / t**2, a, b)


def quad_tail(x):
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: mpmath.exp(-t / 2) / t, [mpmath.log(x), mpmath.inf]))


def test_frozen_values():
    assert int_half(2, 10**6) == pytest.approx(FROZEN["int_half(2,1e6)"], rel=1e-14)
    assert int_log2(2, 10**6) == pytest.approx(FROZEN["int_log2(2,1e6)"], rel=1e-14)
    assert int_half_log2(5, 10**10) == pytest.approx(FROZEN["int_half_log2(5,1e10)"], rel=1e-14)
    assert int_half_tail(10**20) == pytest.approx(FROZEN["tail(1e20)"], rel=1e-13)


def test_li_reference_points():
    assert li(2) == pytest.approx(1.04516378011749278484, rel=1e-15)
    assert li(10**10) == pytest.approx(455055614.586623075609529, rel=1e-15)
    assert abs(li(CONSTANTS.mu.mp)) < 1e-12


@given(st.floats(1.01, 1e18))
@settings(max_examples=60, deadline=None)
def test_ramanujan_vs_classical(x):
    a, b = li(x), li_classical(x)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_li_array_matches_scalar():
    xs = [1.5, 2.0, 10.0, 1e3, 1e6, 1e10, 1e15]
    arr = li_array(xs)
    for x, v in zip(xs, arr):
        assert v == pytest.approx(li(x), rel=1e-13, abs=1e-13)


def test_li_domain():
    with pytest.raises(DomainError):
        li(1)
    with pytest.raises(DomainError):
        li_array([0.5])


@given(st.floats(1e-3, 200))
@settings(max_examples=60, deadline=None)
def test_e1_matches_mpmath(z):
    assert e1(z) == pytest.approx(float(mpmath.e1(z)), rel=1e-14)


def test_integral_domains():
    with pytest.raises(DomainError):
        int_half(1, 10)
    with pytest.raises(DomainError):
        int_half(10, 5)
    assert int_half(7, 7) == 0.0 and int_log2(7, 7) == 0.0 and int_half_log2(7, 7) == 0.0


def test_tail_asymptotic_converges_to_e1():
    for x in (1e12, 1e16, 1e20):
        approx, n = tail_asymptotic(x)
        assert n == int(math.log(x) / 2)
        assert approx == pytest.approx(int_half_tail(x), rel=1e-3)


def test_asym_half_series():
    value, n = asym_half_series(10**6, 1)
    assert n == 1 and round(value, 2) == 99.37
    assert asym_cutoff(10**6) == 7
    with pytest.raises(DomainError):
        asym_half_series(10**6, asym_cutoff(10**6) + 1)
    terms = asym_half_terms(10**6, 12)
    cut = asym_cutoff(10**6)
    assert terms[cut] > terms[cut - 1]


@given(st.integers(2, 10**7), st.integers(0, 10**5))
@settings(max_examples=80, deadline=None)
def test_harmonic_segment_oracle(n, span):
    m = n + span
    with mpmath.workdps(30):
        exact = mpmath.harmonic(m) - mpmath.harmonic(n - 1)
    assert harmonic_segment(n, m) == pytest.approx(float(exact), rel=1e-13, abs=1e-16)


def test_harmonic_segment_far_out():
    n, m = 2**40, 2**41
    with mpmath.workdps(40):
        exact = mpmath.harmonic(m) - mpmath.harmonic(n - 1)
    assert harmonic_segment(n, m) == pytest.approx(float(exact), rel=1e-15)
    assert harmonic_segment(5, 4) == 0.0
    with pytest.raises(DomainError):
        harmonic_segment(1, 5)


@pytest.mark.parametrize("name", ["C_q", "C1", "F", "s", "C2"])
def test_truncated_products_approach_registry(name):
    chk = verify_constant(name, 10**6)
    assert abs(chk.deviation) < 1e-3
    assert chk.shrinking


def test_verify_constant_unknown():
    with pytest.raises(ValueError):
        verify_constant("gamma", 100)


def test_random_intervals_against_quadrature():
    rng = random.Random(1)
    for _ in range(10):
        a = 2 * 10 ** rng.uniform(0, 5)
        b = a * 10 ** rng.uniform(0.01, 6)
        assert int_half(a, b) == pytest.approx(quad_half(a, b), rel=1e-10)
        assert int_log2(a, b) == pytest.approx(quad_log2(a, b), rel=1e-10)
        assert int_half_log2(a, b) == pytest.approx(quad_half_log2(a, b), rel=1e-10)
