"""Decide whether P lies in the subgroup generated by P_1..P_r by reducing
modulo many primes.

A prime where the reduced system has no solution proves P is not in the
subgroup. Otherwise the per-prime solution cosets are intersected; once the
smallest representative stops changing it is checked by exact arithmetic.
The same engine runs on E(Q) and on the multiplicative group of Q.
"""

from __future__ import annotations

import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Iterable, Iterator, Sequence

from . import ec_finite as fin
from .arith import TableTooLarge, factor, is_prime, pohlig_hellman, solve_congruence_system
from .ec_finite import LocalMembership
from .ec_rational import (
    CurveQ,
    PointQ,
    linear_combination,
    reduce_point,
    scalar_mul,
    torsion_order,
)
from .relation import (
    Contradiction,
    CosetConstraint,
    absorb,
    candidate,
    is_stable,
    push,
    scaled_candidate,
)

log = logging.getLogger(__name__)

# Beyond this the brute-force fallback after an ambiguous count is too slow.
BRUTE_FALLBACK_LIMIT = 10**6
# Fresh primes used to screen a proposal before exact verification.
SCREEN_PRIMES = 6
EXHAUSTIVE_LIMIT = 50
CM_CAVEAT = (
    "The non-CM hypothesis behind guaranteed termination is not checked; "
    "dependent verdicts are verified exactly and independent verdicts carry a "
    "witness prime, so both are unconditional."
)


class InvalidInput(ValueError):
    pass


class Skip(Exception):
    """A prime that could not be processed; it is logged and ignored."""


@dataclass(frozen=True)
class DetectorConfig:
    prime_bound: int = 10**5
    stability_window: int = 5
    coeff_bound: int = 2**20
    saturation_bound: int = 64
    seed: int = 0
    max_skipped_fraction: float = 0.1
    worker_count: int = 1

    def __post_init__(self):
        for name in ("prime_bound", "stability_window", "coeff_bound", "saturation_bound", "worker_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0 < self.max_skipped_fraction <= 1:
            raise ValueError("max_skipped_fraction must lie in (0, 1]")


# --- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class Dependent:
    coeffs: tuple[int, ...]
    verified: bool = True
    kind = "dependent"

    @classmethod
    def certify(cls, holds: Callable[[int, Sequence[int]], bool], coeffs) -> "Dependent":
        coeffs = tuple(coeffs)
        if not holds(1, coeffs):
            raise AssertionError(f"relation {coeffs} does not hold exactly")
        return cls(coeffs)


@dataclass(frozen=True)
class Independent:
    witness_prime: int | None
    local_detail: LocalMembership | None = None
    certificate: str = "witness_prime"
    kind = "independent"


@dataclass(frozen=True)
class SaturationNeeded:
    a: int
    coeffs: tuple[int, ...]
    verified: bool = True
    kind = "saturation_needed"

    @classmethod
    def certify(cls, holds, a: int, coeffs) -> "SaturationNeeded":
        coeffs = tuple(coeffs)
        if a < 2 or not holds(a, coeffs):
            raise AssertionError(f"{a}*P = {coeffs} does not hold exactly")
        return cls(a, coeffs)


@dataclass(frozen=True)
class Inconclusive:
    reason: str  # budget_exhausted | no_stable_candidate | too_many_skipped_primes
    kind = "inconclusive"


Verdict = Dependent | Independent | SaturationNeeded | Inconclusive


@dataclass
class RunReport:
    seed: int
    primes_processed: int = 0
    primes_skipped: list = field(default_factory=list)
    stability_trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    alarms: list = field(default_factory=list)
    caveats: list = field(default_factory=list)


def _prime_seed(seed: int, p: int, salt: int = 0) -> int:
    return (seed * 1_000_003 + p) * 7919 + salt


# --- per-prime kernels (module level so worker processes can pickle them) ----


def _counted(E: fin.CurveFp, rng: random.Random) -> int:
    try:
        return fin.count_points(E, rng)
    except fin.AmbiguousOrder:
        if E.p <= BRUTE_FALLBACK_LIMIT:
            log.info("ambiguous order mod %d, counting by brute force", E.p)
            return fin.count_points_brute(E)
        raise Skip("ambiguous_order")


def ec_local(curve: CurveQ, target: PointQ, gens: Sequence[PointQ], p: int, seed: int, salt: int = 0) -> LocalMembership:
    """Local membership of r_p(target) in <r_p(gens)>; raises Skip."""
    Ep = curve.reduce(p)
    rng = random.Random(_prime_seed(seed, p, salt))
    n = _counted(Ep, rng)
    try:
        for attempt in range(2):
            S = fin.group_structure(Ep, n, rng)
            try:
                return fin.local_membership(
                    Ep, S, reduce_point(curve, target, p), [reduce_point(curve, g, p) for g in gens]
                )
            except fin.InternalInconsistency:
                log.warning("inconsistent structure mod %d (attempt %d), recomputing", p, attempt)
        raise Skip("internal_inconsistency")
    except fin.StructureNotFound:
        raise Skip("structure_not_found")
    except TableTooLarge:
        raise Skip("table_cap")


def primitive_root(p: int) -> int:
    qs = factor(p - 1).primes
    g = 2
    while any(pow(g, (p - 1) // q, p) == 1 for q in qs):
        g += 1
    return g


def mul_local(x: Fraction, gens: Sequence[Fraction], p: int, seed: int = 0, salt: int = 0) -> LocalMembership:
    """Local membership of x mod p in the subgroup of F_p^* generated by gens."""
    m = p - 1
    fact = factor(m)
    g = primitive_root(p)

    def res(q: Fraction) -> int:
        return q.numerator * pow(q.denominator, -1, p) % p

    def log_g(v: int) -> int:
        k = pohlig_hellman(lambda a, b: a * b % p, lambda a, k: pow(a, k, p), 1, g, v, m, fact)
        assert k is not None, "primitive root must generate F_p^*"
        return k

    t = log_g(res(x))
    ks = [log_g(res(q)) for q in gens]
    coset = solve_congruence_system([ks], [t], [m], r=len(gens))
    return LocalMembership(p, coset, m, (0, t), tuple((0, k) for k in ks))


def _try(fn, p):
    try:
        return p, fn(p)
    except Skip as exc:
        return p, exc


def _stream(fn: Callable, primes: Iterable[int], workers: int) -> Iterator:
    """Yield (p, result-or-Skip) in increasing prime order."""
    if workers <= 1:
        for p in primes:
            yield _try(fn, p)
        return
    it = iter(primes)
    chunk = workers * 4
    with ProcessPoolExecutor(max_workers=workers) as pool:
        while True:
            batch = [p for _, p in zip(range(chunk), it)]
            if not batch:
                return
            yield from pool.map(partial(_try, fn), batch)


# --- the shared detection loop -----------------------------------------------


@dataclass
class _Problem:
    r: int
    local: Callable[[int], LocalMembership]  # raises Skip
    recheck: Callable[[int], LocalMembership]
    holds: Callable[[int, Sequence[int]], bool]  # exact a*P == sum c_i P_i
    screen: Callable[[int, Sequence[int], int], bool]  # cheap check at fresh primes after p
    exhaustive: Callable[[int], bool] | None  # True when target is in the local subgroup
    primes: Iterable[int]


def _attempt(prob: _Problem, C: CosetConstraint, cfg: DetectorConfig, p: int, report: RunReport):
    """Try the current coset's proposal, then the saturation fallback."""
    c = candidate(C, cfg.coeff_bound)
    if c is not None and prob.screen(1, c, p) and prob.holds(1, c):
        return Dependent.certify(prob.holds, c)
    for a in range(2, cfg.saturation_bound + 1):
        alpha = scaled_candidate(C, a, cfg.coeff_bound)
        if alpha is None or not prob.screen(a, alpha, p) or not prob.holds(a, alpha):
            continue
        if all(x % a == 0 for x in alpha):
            reduced = tuple(x // a for x in alpha)
            if prob.holds(1, reduced):
                return Dependent.certify(prob.holds, reduced)
        msg = f"saturation fallback fired: {a}*P = {list(alpha)} after prime {p}"
        log.error(msg)
        report.alarms.append(msg)
        return SaturationNeeded.certify(prob.holds, a, alpha)
    return None


def _detect(prob: _Problem, cfg: DetectorConfig, report: RunReport) -> Verdict:
    C = CosetConstraint.initial(prob.r)
    history: list = []
    tried: set = set()
    contradicted = False
    local = prob.local
    for p, res in _stream(local, prob.primes, cfg.worker_count):
        if isinstance(res, Skip):
            report.primes_skipped.append([p, str(res)])
            continue
        report.primes_processed += 1
        if not res.solvable:
            fresh = prob.recheck(p)
            if fresh.solvable:
                raise fin.InternalInconsistency(f"witness prime {p} did not survive recomputation")
            if prob.exhaustive is not None and p <= EXHAUSTIVE_LIMIT and prob.exhaustive(p):
                raise fin.InternalInconsistency(f"witness prime {p} refuted by exhaustive closure")
            report.stability_trace.append([p, None])
            return Independent(p, res)
        if not contradicted:
            try:
                C = absorb(C, res.coset, p)
            except Contradiction as exc:
                contradicted = True
                report.warnings.append(
                    f"coset contradiction: prime {exc.prime} vs primes {list(exc.earlier)}; "
                    "no coefficient vector fits both, continuing to search for a witness prime"
                )
        c = None if contradicted else candidate(C, cfg.coeff_bound)
        history = push(history, c)
        report.stability_trace.append([p, list(c) if c is not None else None])
        if c is not None and c not in tried and is_stable(history, cfg.stability_window):
            tried.add(c)
            verdict = _attempt(prob, C, cfg, p, report)
            if verdict is not None:
                return verdict
    total = report.primes_processed + len(report.primes_skipped)
    if total and len(report.primes_skipped) / total > cfg.max_skipped_fraction:
        return Inconclusive("too_many_skipped_primes")
    if history and not tried and not contradicted:
        return Inconclusive("no_stable_candidate")
    return Inconclusive("budget_exhausted")


# --- elliptic curves ---------------------------------------------------------


def _ec_holds(curve, target, gens, a, coeffs) -> bool:
    return scalar_mul(curve, a, target) == linear_combination(curve, coeffs, gens)


def _ec_screen(curve, target, gens, a, coeffs, after: int) -> bool:
    checked = 0
    q = after + 1
    while checked < SCREEN_PRIMES:
        if is_prime(q) and curve.discriminant % q and q > 3:
            Eq = curve.reduce(q)
            lhs = fin.fp_scalar_mul(Eq, a, reduce_point(curve, target, q))
            rhs = None
            for c, g in zip(coeffs, gens):
                rhs = fin.fp_add(Eq, rhs, fin.fp_scalar_mul(Eq, c, reduce_point(curve, g, q)))
            if lhs != rhs:
                return False
            checked += 1
        q += 1
    return True


def subgroup_closure(E: fin.CurveFp, gens: Sequence) -> set:
    """All points of the subgroup generated by gens, by exhaustive closure."""
    seen = {None}
    frontier = [None]
    while frontier:
        nxt = []
        for P in frontier:
            for g in gens:
                Q = fin.fp_add(E, P, g)
                if Q not in seen:
                    seen.add(Q)
                    nxt.append(Q)
        frontier = nxt
    return seen


def _ec_exhaustive(curve, target, gens, p) -> bool:
    Ep = curve.reduce(p)
    return reduce_point(curve, target, p) in subgroup_closure(Ep, [reduce_point(curve, g, p) for g in gens])


def validate_ec(curve: CurveQ, target: PointQ, gens: Sequence[PointQ]) -> None:
    for i, P in enumerate([target, *gens]):
        if not curve.contains(P):
            name = "target" if i == 0 else f"generator {i}"
            raise InvalidInput(f"{name} {P} is not on {curve}")
    for i, g in enumerate(gens, 1):
        if torsion_order(curve, g) is not None:
            raise InvalidInput(f"generator {i} is a torsion point")


def detect_ec(
    curve: CurveQ, target: PointQ, gens: Sequence[PointQ], cfg: DetectorConfig = DetectorConfig()
) -> tuple[Verdict, RunReport]:
    gens = list(gens)
    validate_ec(curve, target, gens)
    report = RunReport(cfg.seed, caveats=[CM_CAVEAT])
    r = len(gens)
    holds = partial(_ec_holds, curve, target, gens)
    if target is None:
        return Dependent.certify(holds, (0,) * r), report
    if torsion_order(curve, target) is not None:
        # the generators span a torsion-free group, so a torsion point is outside it
        return Independent(None, None, "torsion"), report
    prob = _Problem(
        r=r,
        local=partial(_ec_local_at, curve, target, gens, cfg.seed, 0),
        recheck=partial(_ec_local_at, curve, target, gens, cfg.seed + 1, 1),
        holds=holds,
        screen=partial(_ec_screen, curve, target, gens),
        exhaustive=partial(_ec_exhaustive, curve, target, gens),
        primes=_ec_primes(curve, cfg.prime_bound),
    )
    return _detect(prob, cfg, report), report


def _ec_local_at(curve, target, gens, seed, salt, p):
    return ec_local(curve, target, gens, p, seed, salt)


def _ec_primes(curve: CurveQ, bound: int) -> Iterator[int]:
    for p in range(5, bound + 1):
        if is_prime(p) and curve.discriminant % p:
            yield p


# --- the multiplicative group ------------------------------------------------


def _support(q: Fraction) -> set[int]:
    out: set[int] = set()
    for v in (abs(q.numerator), q.denominator):
        out.update(factor(v).primes)
    return out


def _mul_holds(x, gens, a, coeffs) -> bool:
    prod = Fraction(1)
    for c, g in zip(coeffs, gens):
        prod *= g**c
    return x**a == prod


def _mul_screen(x, gens, bad, a, coeffs, after: int) -> bool:
    checked = 0
    q = after + 1
    while checked < SCREEN_PRIMES:
        if is_prime(q) and q not in bad:
            def res(v):
                return v.numerator * pow(v.denominator, -1, q) % q
            rhs = 1
            for c, g in zip(coeffs, gens):
                rhs = rhs * pow(res(g), c, q) % q
            if pow(res(x), a, q) != rhs:
                return False
            checked += 1
        q += 1
    return True


def _mul_exhaustive(x, gens, p) -> bool:
    def res(v):
        return v.numerator * pow(v.denominator, -1, p) % p
    seen = {1}
    frontier = [1]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = v * res(g) % p
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return res(x) in seen


def _mul_local_at(x, gens, seed, salt, p):
    return mul_local(x, gens, p, seed, salt)


def detect_mul(x, gens: Sequence, cfg: DetectorConfig = DetectorConfig()) -> tuple[Verdict, RunReport]:
    x = Fraction(x)
    gens = [Fraction(g) for g in gens]
    if x == 0 or any(g == 0 for g in gens):
        raise InvalidInput("zero is not in the multiplicative group")
    if any(abs(g) == 1 for g in gens):
        raise InvalidInput("generators must not be +1 or -1 (torsion)")
    report = RunReport(cfg.seed)
    r = len(gens)
    holds = partial(_mul_holds, x, gens)
    if x == 1:
        return Dependent.certify(holds, (0,) * r), report
    if x == -1:
        return Independent(None, None, "torsion"), report
    bad = {2}
    for v in [x, *gens]:
        bad |= _support(v)
    prob = _Problem(
        r=r,
        local=partial(_mul_local_at, x, gens, cfg.seed, 0),
        recheck=partial(_mul_local_at, x, gens, cfg.seed + 1, 1),
        holds=holds,
        screen=partial(_mul_screen, x, gens, bad),
        exhaustive=partial(_mul_exhaustive, x, gens),
        primes=(p for p in range(3, cfg.prime_bound + 1) if p not in bad and is_prime(p)),
    )
    return _detect(prob, cfg, report), report


# --- witness-prime search ----------------------------------------------------


@dataclass(frozen=True)
class WitnessQuery:
    I: frozenset
    J: frozenset
    l: int
    M: int
    prime_bound: int

    def __post_init__(self):
        object.__setattr__(self, "I", frozenset(self.I))
        object.__setattr__(self, "J", frozenset(self.J))
        if self.I & self.J:
            raise InvalidInput("I and J must be disjoint")
        if self.M < 1:
            raise InvalidInput("M must be at least 1")
        if not is_prime(self.l):
            raise InvalidInput(f"l = {self.l} is not prime")

    def check_cover(self, r: int) -> None:
        if self.I | self.J != set(range(1, r + 1)):
            raise InvalidInput(f"I and J must partition {{1..{r}}}")


@dataclass
class WitnessResult:
    matches: list  # (prime, orders of the reduced points)
    scanned: int
    matched: int

    @property
    def density(self) -> float:
        return self.matched / self.scanned if self.scanned else 0.0


def l_valuation(n: int, l: int) -> int:
    k = 0
    while n % l == 0:
        n //= l
        k += 1
    return k


def _orders_at(curve, points, p):
    Ep = curve.reduce(p)
    try:
        return p, [fin.order_in_hasse(Ep, reduce_point(curve, P, p)) for P in points]
    except TableTooLarge:
        return p, None


def find_witness_primes(
    curve: CurveQ, points: Sequence[PointQ], q: WitnessQuery, workers: int = 1
) -> WitnessResult:
    """Good primes p <= bound where r_p(P_i) has trivial l-part for i in I
    and order divisible by l^M for j in J (indices are 1-based)."""
    points = list(points)
    q.check_cover(len(points))
    validate_ec(curve, None, points)
    primes = list(_ec_primes(curve, q.prime_bound))
    fn = partial(_orders_at, curve, points)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(fn, primes, chunksize=64))
    else:
        rows = [fn(p) for p in primes]
    matches = []
    scanned = 0
    for p, orders in rows:
        if orders is None:
            continue
        scanned += 1
        if all(orders[i - 1] % q.l for i in q.I) and all(
            l_valuation(orders[j - 1], q.l) >= q.M for j in q.J
        ):
            matches.append((p, orders))
    return WitnessResult(matches, scanned, len(matches))


# --- diagnostics -------------------------------------------------------------


def local_report(curve: CurveQ, points: Sequence[PointQ], p: int, seed: int = 0) -> dict:
    """Machine-readable evidence at one prime: group order, structure, the
    coordinates of each point and whether points[0] lies in <points[1:]>."""
    if p < 5 or not is_prime(p) or curve.discriminant % p == 0:
        return {"prime": p, "status": "bad_prime"}
    Ep = curve.reduce(p)
    rng = random.Random(_prime_seed(seed, p))
    try:
        n = _counted(Ep, rng)
        S = fin.group_structure(Ep, n, rng)
        reduced = [reduce_point(curve, P, p) for P in points]
        coords = [list(fin.coordinates(Ep, S, P)) for P in reduced]
        lm = fin.local_membership(Ep, S, reduced[0], reduced[1:]) if reduced else None
    except (Skip, fin.StructureNotFound, fin.InternalInconsistency, TableTooLarge) as exc:
        return {"prime": p, "status": "skipped", "reason": str(exc) or type(exc).__name__}
    out = {
        "prime": p,
        "status": "ok",
        "order": n,
        "structure": [S.d1, S.d2],
        "generators": [_fp_json(S.g1), _fp_json(S.g2)],
        "reduced_points": [_fp_json(P) for P in reduced],
        "coordinates": coords,
        "membership": None,
    }
    if lm is not None:
        out["membership"] = {
            "solvable": lm.solvable,
            "offset": list(lm.coset.offset) if lm.solvable else None,
            "lattice": [list(v) for v in lm.coset.basis] if lm.solvable else None,
        }
    return out


def _fp_json(P):
    return None if P is None else [P[0], P[1]]


def local_detail_json(lm: LocalMembership | None):
    if lm is None:
        return None
    return {
        "prime": lm.p,
        "solvable": lm.solvable,
        "modulus": lm.modulus,
        "target_coordinates": list(lm.target_coords),
        "generator_coordinates": [list(c) for c in lm.gen_coords],
    }
