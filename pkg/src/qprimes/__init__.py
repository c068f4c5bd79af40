"""Primes of the form m^2 + 1: enumeration, storage and statistics."""

__version__ = "0.1.0"
