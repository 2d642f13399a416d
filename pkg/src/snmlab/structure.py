"""Condorcet winners, covering, uncovered and Banks sets, and rule-level property sweeps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .core import Tournament, check_size, enumerate_tournaments, members, to_trn
from .lp import fraction_str
from .rules import RuleSpec, condorcet_winner_mask, exact_distribution


def condorcet_winner(T: Tournament) -> int | None:
    return condorcet_winner_mask(T, T.full)


@dataclass(frozen=True)
class CoverRelation:
    n: int
    masks: tuple[int, ...]  # bit j of masks[i]: i covers j

    def covers(self, i: int, j: int) -> bool:
        return bool(self.masks[i] >> j & 1)

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in members(self.masks[i])]


def compute_covers(T: Tournament) -> CoverRelation:
    """i covers j iff i beats j and every team beating i also beats j."""
    masks = []
    for i in range(T.n):
        in_i = T.in_mask(i)
        m = 0
        for j in members(T.out_mask(i)):
            if in_i & ~T.in_mask(j) == 0:
                m |= 1 << j
        masks.append(m)
    return CoverRelation(T.n, tuple(masks))


def uncovered_set(T: Tournament) -> frozenset[int]:
    covered = 0
    for m in compute_covers(T).masks:
        covered |= m
    return frozenset(i for i in range(T.n) if not covered >> i & 1)


# ---------------------------------------------------------------- Banks set

@dataclass(frozen=True)
class BanksReport:
    banks_set: frozenset[int]
    witnesses: dict[int, tuple[int, ...]] = field(compare=False)  # member -> chain, top first


def _chain(T: Tournament, S: int) -> tuple[int, ...] | None:
    """Top-first order of S if it induces a transitive subtournament."""
    tm = members(S)
    k = len(tm)
    by_score = {}
    for v in tm:
        s = bin(T.rows[v] & S).count("1")
        if s in by_score:
            return None
        by_score[s] = v
    return tuple(by_score[s] for s in range(k - 1, -1, -1))


def _insertable(T: Tournament, chain: tuple[int, ...], x: int) -> bool:
    # x fits at position p iff it loses to chain[:p] and beats chain[p:]
    for p in range(len(chain) + 1):
        if all(T.beats(c, x) for c in chain[:p]) and all(T.beats(x, c) for c in chain[p:]):
            return True
    return False


def banks_set(T: Tournament) -> BanksReport:
    """Tops of inclusion-maximal transitive subtournaments (subset enumeration)."""
    check_size("n", T.n, 7)
    witnesses: dict[int, tuple[int, ...]] = {}
    outside_all = T.full
    for S in range(1, 1 << T.n):
        chain = _chain(T, S)
        if chain is None or chain[0] in witnesses:
            continue
        if any(_insertable(T, chain, x) for x in members(outside_all & ~S)):
            continue
        witnesses[chain[0]] = chain
    return BanksReport(frozenset(witnesses), dict(sorted(witnesses.items())))


# ---------------------------------------------------------------- property sweeps

@dataclass
class PropertyReport:
    rule: str
    property: str
    n: int | None
    verdict: str  # 'pass' or 'fail'
    counterexample: dict | None = None
    checked: int = 0
    counterexamples: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> str:
        out = {"rule": self.rule, "property": self.property, "n": self.n,
               "verdict": self.verdict, "checked": self.checked}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return json.dumps(out, indent=2)


def _tournaments(n: int, tournaments: Iterable[Tournament] | None, canonical_only: bool):
    if tournaments is not None:
        return list(tournaments)
    return enumerate_tournaments(n, canonical_only=canonical_only)


def check_condorcet_consistent(rule: RuleSpec, n: int, tournaments=None,
                               canonical_only: bool = False) -> PropertyReport:
    checked = 0
    for T in _tournaments(n, tournaments, canonical_only):
        checked += 1
        w = condorcet_winner(T)
        if w is None:
            continue
        p = exact_distribution(T, rule)[w]
        if p != 1:
            cx = {"trn": to_trn(T), "details": {"winner": w + 1, "probability": fraction_str(p)}}
            return PropertyReport(str(rule), "condorcet", n, "fail", cx, checked)
    return PropertyReport(str(rule), "condorcet", n, "pass", None, checked)


def check_cover_consistent(rule: RuleSpec, n: int, tournaments=None,
                           canonical_only: bool = False) -> PropertyReport:
    """Every covered team must get probability exactly 0."""
    if tournaments is None:
        check_size("n", n, 6)
    checked = 0
    for T in _tournaments(n, tournaments, canonical_only):
        checked += 1
        covers = compute_covers(T)
        covered = 0
        for m in covers.masks:
            covered |= m
        if not covered:
            continue
        dist = exact_distribution(T, rule)
        for j in members(covered):
            if dist[j] > 0:
                by = next(i for i in range(T.n) if covers.covers(i, j))
                cx = {"trn": to_trn(T), "details": {"covered": j + 1, "covered_by": by + 1,
                                                    "probability": fraction_str(dist[j])}}
                return PropertyReport(str(rule), "cover", n, "fail", cx, checked)
    return PropertyReport(str(rule), "cover", n, "pass", None, checked)


def check_monotone(rule: RuleSpec, n: int, tournaments=None, collect_all: bool = False,
                   cache: dict | None = None) -> PropertyReport:
    """For every T and every u beating v: flipping that match must not raise r_u.

    Counterexample details carry (u, v, r_u(T), r_u(T')) with 1-based teams.
    ``collect_all`` keeps scanning and lists every violation found.
    """
    if tournaments is None:
        check_size("n", n, 5 if rule.kind in ("SLP", "AUGMENTED") else 6)
    cache = {} if cache is None else cache

    def dist(T):
        d = cache.get(T)
        if d is None:
            d = cache[T] = exact_distribution(T, rule)
        return d

    found = []
    checked = 0
    for T in _tournaments(n, tournaments, False):
        checked += 1
        dT = dist(T)
        for u in range(T.n):
            for v in members(T.rows[u]):
                T2 = T.flip(u, v)
                before, after = dT[u], dist(T2)[u]
                if after > before:
                    found.append({"trn": to_trn(T), "trn_prime": to_trn(T2),
                                  "details": {"u": u + 1, "v": v + 1,
                                              "r_u_T": fraction_str(before),
                                              "r_u_T_prime": fraction_str(after)}})
                    if not collect_all:
                        return PropertyReport(str(rule), "monotone", n, "fail", found[0],
                                              checked, found)
    verdict = "fail" if found else "pass"
    return PropertyReport(str(rule), "monotone", n, verdict, found[0] if found else None,
                          checked, found)


def monotone_pair(cx: dict) -> tuple[Fraction, Fraction]:
    d = cx["details"]
    return Fraction(d["r_u_T"]), Fraction(d["r_u_T_prime"])


def is_transitive(T: Tournament) -> bool:
    return sorted(T.scores()) == list(range(T.n))


def transitive_subsets(T: Tournament):
    for k in range(1, T.n + 1):
        for S in combinations(range(T.n), k):
            if _chain(T, sum(1 << s for s in S)) is not None:
                yield S
