"""Accumulate per-prime coefficient cosets into one global coset of Z^r and
propose small integer coefficient vectors from it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .arith import AffineSolutionSet, hermite_basis, reduce_mod_hermite, solve_integer_system

DEFAULT_WINDOW = 5
DEFAULT_COEFF_BOUND = 2**20


class Contradiction(ValueError):
    """Two sets of primes impose disjoint cosets on the coefficients."""

    def __init__(self, earlier: Sequence[int], p: int):
        self.earlier = tuple(earlier)
        self.prime = p
        super().__init__(f"prime {p} contradicts primes {list(self.earlier)}")


@dataclass(frozen=True)
class CosetConstraint:
    """offset + L, with L given by an echelon (Hermite) basis.

    `basis[i]` is the i-th basis vector; it vanishes before coordinate i and
    basis[i][i] is the i-th diagonal entry. The offset is reduced so that
    0 <= offset[i] < basis[i][i], making equality a field comparison.
    """

    r: int
    offset: tuple[int, ...]
    basis: tuple[tuple[int, ...], ...]
    source_primes: tuple[int, ...] = ()

    @classmethod
    def initial(cls, r: int) -> "CosetConstraint":
        return cls(r, (0,) * r, hermite_basis([[int(i == j) for j in range(r)] for i in range(r)], r))

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(h[i] for i, h in enumerate(self.basis))

    @property
    def index(self) -> int:
        out = 1
        for d in self.diagonal:
            out *= d
        return out

    def key(self):
        return self.offset, self.basis

    def contains(self, c: Sequence[int]) -> bool:
        diff = [a - b for a, b in zip(c, self.offset)]
        return not any(reduce_mod_hermite(diff, self.basis))

    def column_matrix(self) -> list[list[int]]:
        """The basis as an r x r matrix whose columns span L."""
        return [[self.basis[j][i] for j in range(self.r)] for i in range(self.r)]


def absorb(C: CosetConstraint, local: AffineSolutionSet, p: int | None = None) -> CosetConstraint:
    """Intersect C with a local coset; raise Contradiction if disjoint."""
    r = C.r
    primes = C.source_primes + ((p,) if p is not None else ())
    if r == 0:
        return CosetConstraint(0, (), (), primes)
    # offset + L x == local.offset + K y
    cols_L = C.basis
    cols_K = local.basis
    A = [[v[i] for v in cols_L] + [-w[i] for w in cols_K] for i in range(r)]
    rhs = [lo - o for lo, o in zip(local.offset, C.offset)]
    sol = solve_integer_system(A, rhs)
    if sol is None:
        raise Contradiction(C.source_primes, p)
    x0, kernel = sol
    nL = len(cols_L)

    def in_L(xs):
        return [sum(xs[k] * cols_L[k][i] for k in range(nL)) for i in range(r)]

    point = [o + v for o, v in zip(C.offset, in_L(x0[:nL]))]
    gens = [in_L(z[:nL]) for z in kernel]
    basis = hermite_basis(gens, r)
    return CosetConstraint(r, reduce_mod_hermite(point, basis), basis, primes)


@dataclass(frozen=True)
class Candidate:
    coeffs: tuple[int, ...]
    stable_for: int = 1


def candidate(C: CosetConstraint, bound: int = DEFAULT_COEFF_BOUND) -> tuple[int, ...] | None:
    """Coset representative with coordinate i in (-M_i/2, M_i/2], M_i the
    i-th diagonal entry; None when it leaves the coefficient bound."""
    c = reduce_mod_hermite(C.offset, C.basis, symmetric=True)
    if any(abs(x) > bound for x in c):
        return None
    return c


def scaled_candidate(C: CosetConstraint, a: int, bound: int = DEFAULT_COEFF_BOUND) -> tuple[int, ...] | None:
    """Symmetric representative of a*offset + L (the coefficients a*P would need)."""
    c = reduce_mod_hermite([a * t for t in C.offset], C.basis, symmetric=True)
    if any(abs(x) > bound for x in c):
        return None
    return c


def push(history: list[Candidate], coeffs: tuple[int, ...] | None) -> list[Candidate]:
    """Append the latest proposal, tracking how long it has been unchanged."""
    if coeffs is None:
        return history + [None]
    prev = history[-1] if history else None
    run = prev.stable_for + 1 if prev is not None and prev.coeffs == coeffs else 1
    return history + [Candidate(coeffs, run)]


def is_stable(history: Sequence[Candidate | None], window: int = DEFAULT_WINDOW) -> bool:
    if window < 1 or len(history) < window:
        return False
    tail = history[-window:]
    if any(c is None for c in tail):
        return False
    return all(c.coeffs == tail[0].coeffs for c in tail)
