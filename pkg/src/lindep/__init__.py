"""Detect linear dependence of rational points and of rational numbers by
reduction modulo primes."""

__version__ = "0.1.0"
