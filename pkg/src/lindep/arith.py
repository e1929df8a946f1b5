"""Integer arithmetic primitives: primality, factoring, CRT, Smith/Hermite
normal forms, integer and modular linear systems, and generic discrete logs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

# Deterministic Miller-Rabin witnesses for n < 2**64.
_MR_BASES_64 = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % q for q in range(2, math.isqrt(p) + 1))]

RHO_MAX_STEPS = 10**7
RHO_ATTEMPTS = 8
BSGS_TABLE_CAP = 2**20


class IncompatibleCongruences(ValueError):
    pass


class FactorizationBudgetExceeded(RuntimeError):
    pass


class TableTooLarge(RuntimeError):
    """A baby-step table would exceed the configured memory cap."""


@dataclass(frozen=True)
class Factorization:
    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        for q, e in self.factors:
            prod *= q**e
        assert prod == self.value, "factorization does not reassemble"

    @property
    def primes(self) -> list[int]:
        return [q for q, _ in self.factors]

    def __iter__(self):
        return iter(self.factors)


# --- primality and factoring -------------------------------------------------


def is_prime(n: int, rng: random.Random | None = None) -> bool:
    if n < 2:
        return False
    for q in _SMALL_PRIMES[:25]:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    if n < 2**64:
        bases: Iterable[int] = _MR_BASES_64
    else:
        rng = rng or random.Random(n)
        bases = [rng.randrange(2, n - 1) for _ in range(64)]
    for a in bases:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _rho(n: int, rng: random.Random, max_steps: int) -> int | None:
    """Brent's variant of Pollard rho. Returns a nontrivial factor or None."""
    y = rng.randrange(1, n)
    c = rng.randrange(1, n)
    m = 128
    g = r = q = 1
    x = ys = y
    steps = 0
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
        steps += r
        if steps > max_steps:
            return None
    if g == n:
        # backtrack one step at a time
        while True:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            if g > 1:
                break
    return g if g != n else None


def _split(n: int, rng: random.Random, max_steps: int, attempts: int) -> int:
    for _ in range(attempts):
        d = _rho(n, rng, max_steps)
        if d is not None:
            return d
    raise FactorizationBudgetExceeded(f"pollard rho gave up on {n}")


def factor(
    n: int,
    seed: int = 0,
    max_steps: int = RHO_MAX_STEPS,
    attempts: int = RHO_ATTEMPTS,
) -> Factorization:
    """Complete factorization: trial division below 1000, then Pollard rho."""
    if n < 1:
        raise ValueError("factor() needs n >= 1")
    counts: dict[int, int] = {}
    m = n
    for q in _SMALL_PRIMES:
        if q * q > m:
            break
        while m % q == 0:
            counts[q] = counts.get(q, 0) + 1
            m //= q
    rng = random.Random(seed)
    stack = [m] if m > 1 else []
    while stack:
        k = stack.pop()
        if is_prime(k):
            counts[k] = counts.get(k, 0) + 1
            continue
        r = math.isqrt(k)
        if r * r == k:
            stack += [r, r]
            continue
        d = _split(k, rng, max_steps, attempts)
        stack += [d, k // d]
    return Factorization(n, tuple(sorted(counts.items())))


# --- CRT ---------------------------------------------------------------------


def crt(residues: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Combine congruences x = r_i (mod m_i); moduli need not be coprime."""
    if not residues:
        raise ValueError("crt() needs at least one congruence")
    r, m = residues[0]
    r %= m
    for r2, m2 in residues[1:]:
        g = math.gcd(m, m2)
        if (r2 - r) % g:
            raise IncompatibleCongruences(f"{r} mod {m} vs {r2} mod {m2}")
        step = m2 // g
        k = ((r2 - r) // g * pow(m // g, -1, step)) % step if step > 1 else 0
        r += m * k
        m *= step
        r %= m
    return r, m


# --- normal forms ------------------------------------------------------------

Matrix = list[list[int]]


def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class SnfDecomposition:
    """U @ original @ V == D with U, V unimodular."""

    U: Matrix
    V: Matrix
    D: Matrix
    original: Matrix

    @property
    def diagonal(self) -> list[int]:
        return [self.D[i][i] for i in range(min(len(self.D), len(self.D[0]) if self.D else 0))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d)


def smith_normal_form(M: Sequence[Sequence[int]]) -> SnfDecomposition:
    rows = len(M)
    cols = len(M[0]) if rows else 0
    A = [list(map(int, row)) for row in M]
    U = _identity(rows)
    V = _identity(cols)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for X in (A, V):
            for row in X:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        for X in (A, U):
            rd, rs = X[dst], X[src]
            for k in range(len(rd)):
                rd[k] += q * rs[k]

    def add_col(dst, src, q):  # col_dst += q * col_src
        for X in (A, V):
            for row in X:
                row[dst] += q * row[src]

    for t in range(min(rows, cols)):
        while True:
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            swap_rows(t, best[0])
            swap_cols(t, best[1])
            piv = A[t][t]
            dirty = False
            for i in range(t + 1, rows):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // piv))
                    dirty = dirty or A[i][t] != 0
            for j in range(t + 1, cols):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // piv))
                    dirty = dirty or A[t][j] != 0
            if dirty:
                continue
            bad = next(
                (i for i in range(t + 1, rows) for j in range(t + 1, cols) if A[i][j] % piv),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if t < rows and A[t][t] < 0:
            add_row(t, t, -2)
    return SnfDecomposition(U, V, A, [list(map(int, row)) for row in M])


def hermite_basis(vectors: Iterable[Sequence[int]], dim: int) -> tuple[tuple[int, ...], ...]:
    """Canonical echelon basis of a full-rank lattice in Z^dim.

    Returns h_0..h_{dim-1} with h_i[j] == 0 for j < i, h_i[i] > 0 and
    0 <= h_k[i] < h_i[i] for k < i. Raises ValueError if the vectors do
    not span a full-rank lattice.
    """
    pool = [list(v) for v in vectors if any(v)]
    basis: list[list[int]] = []
    for col in range(dim):
        active = [v for v in pool if v[col]]
        rest = [v for v in pool if not v[col]]
        while len(active) > 1:
            active.sort(key=lambda v: abs(v[col]))
            piv = active[0]
            nxt = [piv]
            for v in active[1:]:
                q = v[col] // piv[col]
                w = [a - q * b for a, b in zip(v, piv)]
                if w[col]:
                    nxt.append(w)
                elif any(w):
                    rest.append(w)
            active = nxt
        if not active:
            raise ValueError("lattice is not full rank")
        piv = active[0]
        if piv[col] < 0:
            piv = [-a for a in piv]
        for k, h in enumerate(basis):
            q = h[col] // piv[col]
            if q:
                basis[k] = [a - q * b for a, b in zip(h, piv)]
        basis.append(piv)
        pool = rest
    return tuple(tuple(h) for h in basis)


def reduce_mod_hermite(t: Sequence[int], basis: Sequence[Sequence[int]], symmetric: bool = False) -> tuple[int, ...]:
    """Reduce t modulo the lattice of an echelon basis from hermite_basis.

    With symmetric=False coordinate i lands in [0, h_i[i]); otherwise in
    (-h_i[i]/2, h_i[i]/2].
    """
    t = list(t)
    for i, h in enumerate(basis):
        d = h[i]
        q = t[i] // d
        if symmetric and 2 * (t[i] - q * d) > d:
            q += 1
        if q:
            t = [a - q * b for a, b in zip(t, h)]
    return tuple(t)


# --- linear systems ----------------------------------------------------------


@dataclass(frozen=True)
class AffineSolutionSet:
    """The coset offset + span(basis) inside Z^r.

    `basis` holds the lattice generators in echelon form; for congruence
    systems it is a full-rank Hermite basis and `offset` is reduced.
    """

    offset: tuple[int, ...]
    basis: tuple[tuple[int, ...], ...]

    def contains(self, c: Sequence[int]) -> bool:
        diff = [a - b for a, b in zip(c, self.offset)]
        return not any(reduce_mod_hermite(diff, self.basis))


def solve_integer_system(A: Sequence[Sequence[int]], b: Sequence[int]):
    """Solve A x = b over Z.

    Returns (x0, kernel) where kernel is a list of basis vectors of
    {x : A x = 0}, or None when there is no integer solution.
    """
    rows = len(A)
    cols = len(A[0]) if rows else 0
    snf = smith_normal_form(A)
    Ub = [sum(u * v for u, v in zip(row, b)) for row in snf.U]
    diag = snf.diagonal
    k = snf.rank
    y = [0] * cols
    for i in range(rows):
        d = diag[i] if i < len(diag) else 0
        if d:
            if Ub[i] % d:
                return None
            y[i] = Ub[i] // d
        elif Ub[i]:
            return None
    V = snf.V
    x0 = [sum(V[i][j] * y[j] for j in range(cols)) for i in range(cols)]
    kernel = [[V[i][j] for i in range(cols)] for j in range(k, cols)]
    return x0, kernel


def solve_congruence_system(
    A: Sequence[Sequence[int]], b: Sequence[int], moduli: Sequence[int], r: int | None = None
) -> AffineSolutionSet | None:
    """All c in Z^r with A c = b (mod moduli[row]), or None if unsolvable.

    The system is homogenized by appending one modulus column per row and
    solved once through the Smith normal form.
    """
    rows = len(A)
    if r is None:
        r = len(A[0]) if rows else 0
    if r == 0:
        ok = all(bi % mi == 0 for bi, mi in zip(b, moduli))
        return AffineSolutionSet((), ()) if ok else None
    if rows == 0:
        return AffineSolutionSet((0,) * r, hermite_basis(_identity(r), r))
    H = [list(A[i]) + [moduli[i] if j == i else 0 for j in range(rows)] for i in range(rows)]
    sol = solve_integer_system(H, b)
    if sol is None:
        return None
    x0, kernel = sol
    big = math.lcm(*moduli)
    gens = [v[:r] for v in kernel] + [[big * int(i == j) for j in range(r)] for i in range(r)]
    basis = hermite_basis(gens, r)
    return AffineSolutionSet(reduce_mod_hermite(x0[:r], basis), basis)


# --- discrete logarithms in cyclic groups ------------------------------------


def bsgs(
    op: Callable,
    power: Callable,
    identity,
    base,
    target,
    order: int,
    table_cap: int = BSGS_TABLE_CAP,
) -> int | None:
    """Smallest k in [0, order) with base^k == target, or None."""
    if target == identity:
        return 0
    s = math.isqrt(max(order - 1, 0)) + 1
    if s > table_cap:
        raise TableTooLarge(f"baby-step table of {s} entries exceeds cap {table_cap}")
    table = {}
    cur = identity
    for j in range(s):
        table.setdefault(cur, j)
        cur = op(cur, base)
    giant = power(base, -s)
    gamma = target
    for i in range(s + 1):
        j = table.get(gamma)
        if j is not None:
            k = i * s + j
            if k < order:
                return k
        gamma = op(gamma, giant)
    return None


def pohlig_hellman(
    op: Callable,
    power: Callable,
    identity,
    base,
    target,
    order: int,
    fact: Factorization,
    table_cap: int = BSGS_TABLE_CAP,
) -> int | None:
    """k mod order with base^k == target, or None when target is not in <base>."""
    parts = []
    for q, e in fact:
        qe = q**e
        cof = order // qe
        b_q = power(base, cof)
        t_q = power(target, cof)
        gamma = power(b_q, q ** (e - 1))
        x = 0
        for k in range(e):
            h = power(op(power(b_q, -x), t_q), q ** (e - 1 - k))
            d = bsgs(op, power, identity, gamma, h, q, table_cap)
            if d is None:
                return None
            x += d * q**k
        parts.append((x, qe))
    k = crt(parts)[0] if parts else 0
    return k if power(base, k) == target else None
