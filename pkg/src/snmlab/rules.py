"""The tournament rules: SLP, RSEB, RKotH, uniform-Condorcet and the augmented mix."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .core import Tournament, TournamentError, check_size, members
from .lp import ONE, ZERO, Distribution, solve_slp

KINDS = ("SLP", "RSEB", "RKOTH", "UNIFORM_CONDORCET", "AUGMENTED")
Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class RuleSpec:
    kind: str
    base: "RuleSpec | None" = None
    c: Fraction | None = None
    method: str = "EXACT"
    sample_count: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "AUGMENTED":
            if self.base is None or self.c is None:
                raise ValueError("AUGMENTED needs a base rule and a mixing weight c")
            object.__setattr__(self, "c", Fraction(self.c))
            if not 0 <= self.c <= 1:
                raise ValueError("mixing weight c must lie in [0, 1]")
        if self.method not in ("EXACT", "MONTE_CARLO"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "MONTE_CARLO":
            if self.kind not in ("RSEB", "RKOTH"):
                raise ValueError("Monte Carlo evaluation exists for RSEB and RKOTH only")
            if not self.sample_count or self.sample_count < 1:
                raise ValueError("sample_count must be >= 1")
            if self.seed is None:
                object.__setattr__(self, "seed", 0)

    def __str__(self):
        if self.kind == "AUGMENTED":
            return f"augmented(base={self.base},c={self.c})"
        name = {"UNIFORM_CONDORCET": "uniform-condorcet"}.get(self.kind, self.kind.lower())
        if self.method == "MONTE_CARLO":
            return f"{name}:mc={self.sample_count},seed={self.seed}"
        return name

    @property
    def exact(self) -> bool:
        return self.method == "EXACT" and (self.base is None or self.base.exact)


SLP = RuleSpec("SLP")
RSEB = RuleSpec("RSEB")
RKOTH = RuleSpec("RKOTH")
UNIFORM_CONDORCET = RuleSpec("UNIFORM_CONDORCET")
AUGMENTED_SLP = RuleSpec("AUGMENTED", base=SLP, c=Fraction(2, 3))

_MC = re.compile(r"mc=(\d+)(?:,seed=(\d+))?$")


def parse_rule(text: str) -> RuleSpec:
    """Parse 'slp', 'rseb[:exact|mc=N,seed=S]', 'rkoth[...]', 'uniform-condorcet',
    'augmented(base=slp,c=2/3)'."""
    s = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"augmented\(base=(.+),c=([0-9/]+)\)", s)
    if m:
        return RuleSpec("AUGMENTED", base=parse_rule(m.group(1)), c=Fraction(m.group(2)))
    name, _, opt = s.partition(":")
    kind = {"slp": "SLP", "rseb": "RSEB", "rkoth": "RKOTH",
            "uniform-condorcet": "UNIFORM_CONDORCET"}.get(name)
    if kind is None:
        raise ValueError(f"unknown rule {text!r}")
    if not opt or opt == "exact":
        return RuleSpec(kind)
    mc = _MC.match(opt)
    if not mc:
        raise ValueError(f"bad evaluation method {opt!r} in {text!r}")
    seed = int(mc.group(2)) if mc.group(2) else 0
    return RuleSpec(kind, method="MONTE_CARLO", sample_count=int(mc.group(1)), seed=seed)


@dataclass(frozen=True)
class RuleEvaluation:
    distribution: Distribution | tuple[float, ...]
    method: str
    sample_count: int | None = None
    half_widths: tuple[float, ...] | None = None
    renormalized: bool = False


def condorcet_winner_mask(T: Tournament, V: int) -> int | None:
    """Team in V beating every other member of V, if any."""
    for i in members(V):
        if V & ~T.rows[i] == 1 << i:
            return i
    return None


def _indicator_if_condorcet(T: Tournament):
    w = condorcet_winner_mask(T, T.full)
    return None if w is None else Distribution.indicator(T.n, w)


# ---------------------------------------------------------------- SLP / uniform

def eval_slp_rule(T: Tournament) -> Distribution:
    return solve_slp(T).solution


def eval_uniform_condorcet(T: Tournament) -> Distribution:
    return _indicator_if_condorcet(T) or Distribution.uniform(T.n)


# ---------------------------------------------------------------- RKotH

def _rkoth_table(T: Tournament, check_prince_only: bool):
    rows = T.rows
    memo: dict[int, dict[int, Fraction]] = {}

    def f(V: int) -> dict[int, Fraction]:
        hit = memo.get(V)
        if hit is not None:
            return hit
        if not check_prince_only:
            w = condorcet_winner_mask(T, V)
            if w is not None:
                memo[V] = res = {w: ONE}
                return res
        tm = members(V)
        share = Fraction(1, len(tm))
        acc: dict[int, Fraction] = {}
        for j in tm:
            rest = V & ~rows[j] & ~(1 << j)
            sub = {j: ONE} if rest == 0 else f(rest)
            for t, p in sub.items():
                acc[t] = acc.get(t, ZERO) + p * share
        memo[V] = acc
        return acc

    return f


def eval_rkoth_exact(T: Tournament) -> Distribution:
    """Randomized King of the Hill by memoised recursion over surviving sets.

    A surviving set with a Condorcet winner is terminal; otherwise every
    survivor is equally likely to be prince and is removed with its victims.
    """
    check_size("n", T.n, 16)
    table = _rkoth_table(T, check_prince_only=False)(T.full)
    return Distribution(tuple(table.get(i, ZERO) for i in range(T.n)))


def eval_rkoth_pseudocode(T: Tournament) -> Distribution:
    """Same rule, literally: draw a prince, stop if the prince is a Condorcet winner."""
    check_size("n", T.n, 16)
    table = _rkoth_table(T, check_prince_only=True)(T.full)
    return Distribution(tuple(table.get(i, ZERO) for i in range(T.n)))


# ---------------------------------------------------------------- RSEB

def bracket_size(n: int) -> int:
    return 1 << max(0, math.ceil(math.log2(n)))


def _bracket_beats(T: Tournament, a: int, b: int) -> bool:
    n = T.n
    if a < n and b < n:
        return T.beats(a, b)
    if a < n or b < n:
        return a < n
    return a < b  # two byes: irrelevant which one advances


def eval_rseb_exact(T: Tournament) -> Distribution:
    """Random single-elimination bracket, averaged exactly over all seedings.

    A uniform seeding splits the field into a uniform unordered pair of
    halves and seeds each half uniformly and independently, so winner
    distributions are memoised per set of slots rather than per permutation.
    Byes take the slots numbered n and up.
    """
    check_size("n", T.n, 8)
    N = bracket_size(T.n)

    @lru_cache(maxsize=None)
    def dist(group: tuple[int, ...]) -> tuple[tuple[int, Fraction], ...]:
        if len(group) == 1:
            return ((group[0], ONE),)
        first, rest = group[0], group[1:]
        half = len(group) // 2
        acc: dict[int, Fraction] = {}
        count = 0
        for others in combinations(rest, half - 1):
            left = (first,) + others
            right = tuple(x for x in rest if x not in others)
            count += 1
            for a, pa in dist(left):
                for b, pb in dist(right):
                    w = a if _bracket_beats(T, a, b) else b
                    acc[w] = acc.get(w, ZERO) + pa * pb
        return tuple((w, p / count) for w, p in sorted(acc.items()))

    table = dict(dist(tuple(range(N))))
    return Distribution(tuple(table.get(i, ZERO) for i in range(T.n)))


# ---------------------------------------------------------------- augmented

def eval_augmented(T: Tournament, base: RuleSpec, c) -> Distribution:
    """Condorcet winner if one exists, else c * base + (1 - c) * uniform."""
    c = Fraction(c)
    cw = _indicator_if_condorcet(T)
    if cw is not None:
        return cw
    b = evaluate(T, base).distribution
    tail = (1 - c) / T.n
    return Distribution(tuple(c * p + tail for p in b))


# ---------------------------------------------------------------- Monte Carlo

def _generator(seed: int) -> np.random.Generator:
    # Philox is counter based: substreams are reproducible from the seed alone
    return np.random.Generator(np.random.Philox(seed))


def _rseb_samples(T: Tournament, count: int, rng: np.random.Generator, chunk: int = 200_000):
    N = bracket_size(T.n)
    strong = np.zeros((N, N), dtype=bool)
    for a in range(N):
        for b in range(N):
            if a != b:
                strong[a, b] = _bracket_beats(T, a, b)
    counts = np.zeros(T.n, dtype=np.int64)
    done = 0
    while done < count:
        size = min(chunk, count - done)
        seeds = rng.permuted(np.tile(np.arange(N, dtype=np.int64), (size, 1)), axis=1)
        while seeds.shape[1] > 1:
            a, b = seeds[:, 0::2], seeds[:, 1::2]
            seeds = np.where(strong[a, b], a, b)
        counts += np.bincount(seeds[:, 0], minlength=N)[:T.n]
        done += size
    return counts


def _rkoth_samples(T: Tournament, count: int, rng: np.random.Generator):
    counts = np.zeros(T.n, dtype=np.int64)
    rows = T.rows
    draws = rng.random((count, T.n))
    cw_cache: dict[int, int | None] = {}
    for s in range(count):
        V = T.full
        step = 0
        while True:
            if V not in cw_cache:
                cw_cache[V] = condorcet_winner_mask(T, V)
            w = cw_cache[V]
            if w is not None:
                break
            tm = members(V)
            j = tm[int(draws[s, step] * len(tm))]
            V &= ~rows[j] & ~(1 << j)
            step += 1
        counts[w] += 1
    return counts


def eval_monte_carlo(T: Tournament, spec: RuleSpec) -> RuleEvaluation:
    """Empirical winner frequencies with per-team 99% normal half-widths."""
    if spec.method != "MONTE_CARLO":
        raise ValueError("spec is not a Monte Carlo spec")
    check_size("n", T.n, 32)
    rng = _generator(spec.seed)
    N = spec.sample_count
    if spec.kind == "RSEB":
        counts = _rseb_samples(T, N, rng)
    else:
        counts = _rkoth_samples(T, N, rng)
    freq = counts / N
    hw = Z99 * np.sqrt(freq * (1 - freq) / N)
    return RuleEvaluation(tuple(float(x) for x in freq), "MONTE_CARLO", N,
                          tuple(float(x) for x in hw))


def _augment_sampled(T: Tournament, spec: RuleSpec) -> RuleEvaluation:
    cw = _indicator_if_condorcet(T)
    if cw is not None:
        return RuleEvaluation(cw, "EXACT")
    base = eval_monte_carlo(T, spec.base)
    c = float(spec.c)
    mixed = [c * p + (1 - c) / T.n for p in base.distribution]
    total = sum(mixed)
    renorm = total != 1.0
    if renorm:
        mixed = [p / total for p in mixed]
    return RuleEvaluation(tuple(mixed), "MONTE_CARLO", base.sample_count,
                          tuple(c * h for h in base.half_widths), renorm)


# ---------------------------------------------------------------- dispatch

_EXACT = {
    "SLP": eval_slp_rule,
    "RSEB": eval_rseb_exact,
    "RKOTH": eval_rkoth_exact,
    "UNIFORM_CONDORCET": eval_uniform_condorcet,
}


def evaluate(T: Tournament, spec: RuleSpec) -> RuleEvaluation:
    if spec.kind == "AUGMENTED":
        if not spec.base.exact:
            return _augment_sampled(T, spec)
        return RuleEvaluation(eval_augmented(T, spec.base, spec.c), "EXACT")
    if spec.method == "MONTE_CARLO":
        return eval_monte_carlo(T, spec)
    return RuleEvaluation(_EXACT[spec.kind](T), "EXACT")


def exact_distribution(T: Tournament, spec: RuleSpec) -> Distribution:
    if not spec.exact:
        raise TournamentError(f"rule {spec} has no exact evaluator")
    return evaluate(T, spec).distribution
