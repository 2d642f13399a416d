"""Manipulation gains, exhaustive k-SNM audits, the group expansion and lower-bound arithmetic."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator

from .core import (Tournament, TournamentError, canonical_labeling, check_size,
                   enumerate_tournaments, gen_balanced, members, parse_trn, to_mask, to_trn)
from .lp import ZERO, Distribution, estimate_epsilon, fraction_str
from .rules import RuleSpec, condorcet_winner_mask, exact_distribution, parse_rule

REFERENCE_EPSILON = Fraction(16, 10000)


class GainTooSmall(ValueError):
    pass


# ---------------------------------------------------------------- evaluation cache

class RuleCache:
    """Exact distributions memoised per labeled tournament.

    With ``canonical=True`` a miss is resolved through the canonical
    representative, so each isomorphism class is solved once.
    """

    def __init__(self, rule: RuleSpec, canonical: bool | None = None):
        self.rule = rule
        if canonical is None:
            canonical = rule.kind in ("SLP", "AUGMENTED")
        self.canonical = canonical
        self.labeled: dict[Tournament, Distribution] = {}
        self.classes: dict[bytes, Distribution] = {}
        self.solves = 0

    def __call__(self, T: Tournament) -> Distribution:
        d = self.labeled.get(T)
        if d is not None:
            return d
        if self.canonical:
            key, order = canonical_labeling(T)
            base = self.classes.get(key)
            if base is None:
                base = self.classes[key] = exact_distribution(T.relabel(order), self.rule)
                self.solves += 1
            d = base.relabel(order)
        else:
            d = exact_distribution(T, self.rule)
            self.solves += 1
        self.labeled[T] = d
        return d


# ---------------------------------------------------------------- adjacency

def s_adjacent_variants(T: Tournament, S) -> Iterator[Tournament]:
    """All tournaments agreeing with T outside S x S (T itself included, first)."""
    S = sorted(S)
    check_size("|S|", len(S), 8)
    inside = [(a, b) for a, b in combinations(S, 2)]
    base = list(T.rows)
    for a, b in inside:
        base[a] &= ~(1 << b)
        base[b] &= ~(1 << a)
    own = 0
    for idx, (a, b) in enumerate(inside):
        if T.beats(b, a):
            own |= 1 << idx
    count = 1 << len(inside)
    for step in range(count):
        pattern = step ^ own  # step 0 reproduces T
        rows = list(base)
        for idx, (a, b) in enumerate(inside):
            if pattern >> idx & 1:
                rows[b] |= 1 << a
            else:
                rows[a] |= 1 << b
        yield Tournament(T.n, tuple(rows))


@dataclass
class ManipulationWitness:
    T: Tournament
    S: frozenset[int]
    T_prime: Tournament
    gain: Fraction
    rule: RuleSpec | None = None
    dist_T: Distribution | None = None
    dist_T_prime: Distribution | None = None

    def __post_init__(self):
        for i in range(self.T.n):
            for j in range(i + 1, self.T.n):
                if not (i in self.S and j in self.S) and self.T.beats(i, j) != self.T_prime.beats(i, j):
                    raise ValueError(f"T and T' differ on match {i + 1}-{j + 1} outside S")

    @property
    def mass_before(self) -> Fraction:
        return self.dist_T.mass(self.S)

    @property
    def mass_after(self) -> Fraction:
        return self.dist_T_prime.mass(self.S)

    def to_json(self, n: int | None = None, k: int | None = None) -> str:
        return json.dumps({
            "rule": str(self.rule) if self.rule else None,
            "n": self.T.n if n is None else n,
            "k": len(self.S) if k is None else k,
            "gain": fraction_str(self.gain),
            "T": to_trn(self.T),
            "S": sorted(i + 1 for i in self.S),
            "T_prime": to_trn(self.T_prime),
            "dist_T": self.dist_T.to_json() if self.dist_T else None,
            "dist_T_prime": self.dist_T_prime.to_json() if self.dist_T_prime else None,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ManipulationWitness":
        data = json.loads(text)
        T, T2 = parse_trn(data["T"]), parse_trn(data["T_prime"])
        rule = parse_rule(data["rule"]) if data.get("rule") else None
        d1 = Distribution.from_json(data["dist_T"]) if data.get("dist_T") else None
        d2 = Distribution.from_json(data["dist_T_prime"]) if data.get("dist_T_prime") else None
        return cls(T, frozenset(i - 1 for i in data["S"]), T2, Fraction(data["gain"]), rule, d1, d2)


def coalition_gain(rule: RuleSpec, T: Tournament, S, cache=None) -> tuple[Fraction, Tournament]:
    """max over S-adjacent T' of the coalition's mass gain; first maximiser wins ties."""
    evaluate = cache or RuleCache(rule)
    S = frozenset(S)
    before = evaluate(T).mass(S)
    best, best_T = ZERO, T
    for T2 in s_adjacent_variants(T, S):
        g = evaluate(T2).mass(S) - before
        if g > best:
            best, best_T = g, T2
    return best, best_T


def witness(rule: RuleSpec, T: Tournament, S, T2: Tournament, cache=None) -> ManipulationWitness:
    evaluate = cache or RuleCache(rule)
    d1, d2 = evaluate(T), evaluate(T2)
    S = frozenset(S)
    return ManipulationWitness(T, S, T2, d2.mass(S) - d1.mass(S), rule, d1, d2)


# ---------------------------------------------------------------- audits

@dataclass
class AuditReport:
    rule: RuleSpec
    n: int
    k: int
    max_gain: Fraction
    witness: ManipulationWitness | None
    tournaments_scanned: int
    wall_time: float = field(default=0.0, compare=False)
    canonical_only: bool = True

    def to_json(self) -> str:
        return json.dumps({
            "rule": str(self.rule), "n": self.n, "k": self.k,
            "max_gain": fraction_str(self.max_gain),
            "tournaments_scanned": self.tournaments_scanned,
            "canonical_only": self.canonical_only,
            "wall_time": round(self.wall_time, 3),
            "witness": json.loads(self.witness.to_json(self.n, self.k)) if self.witness else None,
        }, indent=2)


def _coalitions(n: int, k: int):
    for size in range(2, min(k, n) + 1):
        yield from combinations(range(n), size)


def _scan_class(args):
    rule, T, k = args
    cache = RuleCache(rule)
    best = (ZERO, None)
    for S in _coalitions(T.n, k):
        g, T2 = coalition_gain(rule, T, S, cache)
        if g > best[0]:
            best = (g, (S, T2))
    return best


def _audit_labeled(rule: RuleSpec, n: int, k: int):
    # every S-adjacency class is scanned once: gain = max - min mass within it
    cache = RuleCache(rule)
    coalitions = [(S, to_mask(S)) for S in _coalitions(n, k)]
    classes: dict[tuple[int, tuple[int, ...]], list] = {}
    scanned = 0
    for T in enumerate_tournaments(n):
        scanned += 1
        d = cache(T)
        for idx, (S, mask) in enumerate(coalitions):
            key = (idx, tuple(r & ~mask if (1 << i) & mask else r for i, r in enumerate(T.rows)))
            m = d.mass(S)
            slot = classes.get(key)
            if slot is None:
                classes[key] = [m, T, m, T]
            else:
                if m < slot[0]:
                    slot[0], slot[1] = m, T
                if m > slot[2]:
                    slot[2], slot[3] = m, T
    best = (ZERO, None)
    for (idx, _), (lo, T_lo, hi, T_hi) in classes.items():
        if hi - lo > best[0]:
            best = (hi - lo, (coalitions[idx][0], T_lo, T_hi))
    return best, scanned, cache


def snm_audit(rule: RuleSpec, n: int, k: int, canonical_only: bool = True,
              workers: int = 1) -> AuditReport:
    """Largest coalition gain over all n-team tournaments and coalitions of size <= k.

    Coalitions of size 1 cannot change any match and are skipped.
    """
    if k > n:
        raise TournamentError(f"coalition size k={k} exceeds n={n}")
    heavy = rule.kind in ("SLP", "AUGMENTED")
    check_size("n", n, 6 if canonical_only else (5 if heavy else 6))
    t0 = time.perf_counter()
    if canonical_only:
        reps = list(enumerate_tournaments(n, canonical_only=True))
        jobs = [(rule, T, k) for T in reps]
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_scan_class, jobs))
        else:
            results = [_scan_class(j) for j in jobs]
        best_gain, best_wit = ZERO, None
        # reps are in canonical-key order, so strict '>' keeps ties deterministic
        for T, (g, hit) in zip(reps, results):
            if g > best_gain:
                best_gain, best_wit = g, (T, hit)
        wit = None
        if best_wit is not None:
            T, (S, T2) = best_wit
            wit = witness(rule, T, S, T2)
        scanned = len(reps)
    else:
        (best_gain, hit), scanned, cache = _audit_labeled(rule, n, k)
        wit = None
        if hit is not None:
            S, T_lo, T_hi = hit
            wit = witness(rule, T_lo, S, T_hi, cache)
    return AuditReport(rule, n, k, best_gain, wit, scanned,
                       time.perf_counter() - t0, canonical_only)


def iter_witnesses(rule: RuleSpec, n: int, k: int, threshold, cache=None):
    """Every (T, S, T') with gain > threshold, T over canonical representatives."""
    check_size("n", n, 6)
    threshold = Fraction(threshold)
    cache = cache or RuleCache(rule)
    for T in enumerate_tournaments(n, canonical_only=True):
        for S in _coalitions(n, k):
            before = cache(T).mass(S)
            for T2 in s_adjacent_variants(T, S):
                if cache(T2).mass(S) - before > threshold:
                    yield witness(rule, T, S, T2, cache)


def find_slp_witness(n: int, k: int, threshold=Fraction(1, 2), argmax: bool = False,
                     rule: RuleSpec | None = None) -> ManipulationWitness | None:
    """First SLP manipulation beating ``threshold`` in canonical order (or the best one)."""
    rule = rule or RuleSpec("SLP")
    best = None
    for w in iter_witnesses(rule, n, k, threshold):
        if not argmax:
            return w
        if best is None or w.gain > best.gain:
            best = w
    return best


def condorcet_manipulation_gain(rule: RuleSpec, T: Tournament, cache=None) -> tuple[Fraction, int]:
    """Largest gain of a coalition {v} + beaters(v) that makes v a Condorcet winner.

    Returns (gain, v).  This is the LP0 side of the rule's manipulability on T.
    """
    evaluate = cache or RuleCache(rule)
    d = evaluate(T)
    best = (ZERO, -1)
    for v in range(T.n):
        S = members(T.in_mask(v)) + [v]
        if len(S) == 1:
            continue
        rows = list(T.rows)
        for u in S:
            if u != v:
                rows[u] &= ~(1 << v)
                rows[v] |= 1 << u
        T2 = Tournament(T.n, tuple(rows))
        g = evaluate(T2).mass(S) - d.mass(S)
        if g > best[0]:
            best = (g, v)
    return best


# ---------------------------------------------------------------- expansion

def expand_tournament(T: Tournament, z: int) -> Tournament:
    """Replace team i by a z-balanced group v_{i,0..2z-2}; copy T between groups.

    Copy x of team i is team i * (2z - 1) + x.
    """
    if z < 1:
        raise ValueError("z must be a positive integer")
    g = 2 * z - 1
    size = T.n * g
    check_size("n(2z-1)", size, 32)
    group = gen_balanced(z).rows if z > 1 else (0,)
    rows = []
    for i in range(T.n):
        cross = 0
        for j in members(T.rows[i]):
            cross |= ((1 << g) - 1) << (j * g)
        for x in range(g):
            rows.append(cross | group[x] << (i * g))
    return Tournament(size, tuple(rows))


def collapse_distribution(dist, n: int, z: int) -> Distribution:
    g = 2 * z - 1
    if len(dist) != n * g:
        raise ValueError(f"distribution has {len(dist)} entries, expected {n * g}")
    p = list(dist)
    return Distribution(tuple(sum(p[i * g:(i + 1) * g], ZERO) for i in range(n)))


# ---------------------------------------------------------------- lower bound

@dataclass(frozen=True)
class LowerBoundParams:
    c: Fraction
    delta: Fraction
    epsilon: Fraction
    z: int
    k_prime: int
    n_prime: int
    epsilon_source: str = "given"

    def to_json(self) -> str:
        return json.dumps({
            "c": fraction_str(self.c), "delta": fraction_str(self.delta),
            "epsilon": fraction_str(self.epsilon), "epsilon_float": float(self.epsilon),
            "epsilon_source": self.epsilon_source,
            "z": self.z, "k_prime": self.k_prime, "n_prime": self.n_prime,
        }, indent=2)


def lower_bound_from(c, n: int, coalition_size: int, epsilon, source: str = "given") -> LowerBoundParams:
    c, eps = Fraction(c), Fraction(epsilon)
    if c <= Fraction(1, 2):
        raise GainTooSmall(f"gain {c} does not exceed 1/2")
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    delta = (c - Fraction(1, 2)) / 4
    z = math.ceil((Fraction(1, 2) + eps) / (2 * eps))
    return LowerBoundParams(c, delta, eps, z, coalition_size * (2 * z - 1), n * (2 * z - 1), source)


def derive_lower_bound(wit: ManipulationWitness, epsilon="reference") -> LowerBoundParams:
    """c, delta, eps, z, k', n' for a witness; ``epsilon`` is a value, 'reference' or 'estimate'.

    'estimate' takes the smaller eps of the two witness tournaments.
    """
    if wit.gain <= Fraction(1, 2):
        raise GainTooSmall(f"gain {wit.gain} does not exceed 1/2")
    if epsilon == "reference":
        eps, source = REFERENCE_EPSILON, "reference"
    elif epsilon == "estimate":
        delta = (wit.gain - Fraction(1, 2)) / 4
        eps = min(estimate_epsilon(wit.T, delta), estimate_epsilon(wit.T_prime, delta))
        source = "estimate"
    else:
        eps, source = Fraction(epsilon), "given"
    return lower_bound_from(wit.gain, wit.T.n, len(wit.S), eps, source)


def balanced_floor_check(rule: RuleSpec, k: int) -> tuple[Fraction, Fraction]:
    """(best gain of a k-coalition on balanced(k), the floor (k-1)/(2k-1))."""
    T = gen_balanced(k)
    cache = RuleCache(rule)
    best = ZERO
    for S in combinations(range(T.n), k):
        g, _ = coalition_gain(rule, T, S, cache)
        best = max(best, g)
    return best, Fraction(k - 1, 2 * k - 1)


def kryptonite_gain(rule: RuleSpec, T: Tournament) -> Fraction:
    """Gain of coalition {2..n} (everyone but superman) making the kryptonite a Condorcet winner."""
    n = T.n
    S = list(range(1, n))
    rows = list(T.rows)
    for u in S[:-1]:
        rows[u] &= ~(1 << (n - 1))
        rows[n - 1] |= 1 << u
    T2 = Tournament(n, tuple(rows))
    if condorcet_winner_mask(T2, T2.full) != n - 1:
        raise TournamentError("not a kryptonite tournament")
    d1, d2 = exact_distribution(T, rule), exact_distribution(T2, rule)
    return d2.mass(S) - d1.mass(S)
