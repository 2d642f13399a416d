import itertools
from fractions import Fraction as F
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from snmlab.core import (enumerate_tournaments, from_code, from_edges, gen_balanced,
                         gen_kryptonite, gen_random, gen_rseb_cover_example, members, transitive)
from snmlab.rules import (AUGMENTED_SLP, RKOTH, RSEB, SLP, UNIFORM_CONDORCET, RuleSpec,
                          bracket_size, condorcet_winner_mask, eval_augmented, eval_rkoth_exact,
                          eval_rkoth_pseudocode, eval_rseb_exact, evaluate, exact_distribution,
                          parse_rule)


def tournaments(lo=2, hi=6):
    return st.integers(lo, hi).flatmap(
        lambda n: st.integers(0, (1 << (n * (n - 1) // 2)) - 1).map(lambda c: from_code(n, c)))


# ---------------------------------------------------------------- brute-force oracles

def rkoth_by_orderings(T):
    """Average over all n! prince orderings; the next prince is the first survivor in order."""
    n = T.n
    acc = [F(0)] * n
    for order in itertools.permutations(range(n)):
        V = T.full
        for j in order:
            if condorcet_winner_mask(T, V) is not None:
                break
            if V >> j & 1:
                rest = V & ~T.rows[j] & ~(1 << j)
                V = rest if rest else 1 << j
        acc[condorcet_winner_mask(T, V)] += 1
    return [x / factorial(n) for x in acc]


def rseb_by_seedings(T):
    """Average over all N! placements of teams and byes into the bracket slots."""
    N = bracket_size(T.n)
    acc = [F(0)] * T.n

    def strong(a, b):
        if a < T.n and b < T.n:
            return T.beats(a, b)
        return a < b if (a >= T.n) == (b >= T.n) else a < T.n

    for seeding in itertools.permutations(range(N)):
        field = list(seeding)
        while len(field) > 1:
            field = [a if strong(a, b) else b for a, b in zip(field[0::2], field[1::2])]
        acc[field[0]] += 1
    return [x / factorial(N) for x in acc]


# ---------------------------------------------------------------- parsing

@pytest.mark.parametrize("text,expected", [
    ("slp", SLP), ("RKOTH:exact", RKOTH), ("rseb", RSEB),
    ("uniform-condorcet", UNIFORM_CONDORCET),
    ("augmented(base=slp,c=2/3)", AUGMENTED_SLP),
    ("rseb:mc=1000,seed=4", RuleSpec("RSEB", method="MONTE_CARLO", sample_count=1000, seed=4)),
])
def test_parse_rule(text, expected):
    spec = parse_rule(text)
    assert spec == expected
    assert parse_rule(str(spec)) == spec


@pytest.mark.parametrize("bad", ["foo", "slp:mc=10", "rseb:mc=x", "augmented(base=slp,c=3/2)"])
def test_parse_rule_rejects(bad):
    with pytest.raises(ValueError):
        parse_rule(bad)


# ---------------------------------------------------------------- RKotH

def test_rkoth_3cycle_uniform():
    assert tuple(eval_rkoth_exact(gen_balanced(2))) == (F(1, 3),) * 3


@pytest.mark.parametrize("k", range(3, 8))
def test_rkoth_kryptonite_superman(k):
    # superman wins with probability (k-1)/(k+1)
    assert eval_rkoth_exact(gen_kryptonite(k + 1))[0] == F(k - 1, k + 1)


def test_rkoth_matches_ordering_oracle_exhaustive_n5():
    for n in range(2, 6):
        for T in enumerate_tournaments(n, canonical_only=True):
            assert list(eval_rkoth_exact(T)) == rkoth_by_orderings(T)


@settings(max_examples=15, deadline=None)
@given(tournaments(6, 6))
def test_rkoth_matches_ordering_oracle_n6(T):
    assert list(eval_rkoth_exact(T)) == rkoth_by_orderings(T)


@settings(max_examples=40, deadline=None)
@given(tournaments(2, 8))
def test_rkoth_pseudocode_agrees(T):
    # stopping early on a surviving Condorcet winner changes nothing: it beats every later prince
    assert eval_rkoth_exact(T) == eval_rkoth_pseudocode(T)


# ---------------------------------------------------------------- RSEB

def test_rseb_four_team_example():
    # 0 beats 1, 2; 1 beats 2, 3; 2 beats 3; 3 beats 0
    T = from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 0)])
    assert list(eval_rseb_exact(T)) == [F(2, 3), F(1, 3), 0, 0]


def test_rseb_kryptonite4():
    assert eval_rseb_exact(gen_kryptonite(4))[0] == F(2, 3)


@settings(max_examples=25, deadline=None)
@given(tournaments(2, 6))
def test_rseb_matches_seeding_oracle(T):
    assert list(eval_rseb_exact(T)) == rseb_by_seedings(T)


def test_rseb_cover_example_gives_covered_team_mass():
    p = eval_rseb_exact(gen_rseb_cover_example())
    assert p[0] > 0


def test_bracket_size():
    assert [bracket_size(n) for n in (1, 2, 3, 4, 5, 8, 9)] == [1, 2, 4, 4, 8, 8, 16]


# ---------------------------------------------------------------- consistency properties

@settings(max_examples=60, deadline=None)
@given(tournaments(2, 7), st.sampled_from([SLP, RKOTH, RSEB, UNIFORM_CONDORCET, AUGMENTED_SLP]))
def test_condorcet_winner_gets_everything(T, rule):
    w = condorcet_winner_mask(T, T.full)
    if rule.kind == "RSEB" and T.n > 8:
        return
    d = exact_distribution(T, rule)
    assert sum(d) == 1
    if w is not None:
        assert d[w] == 1


@settings(max_examples=40, deadline=None)
@given(tournaments(2, 6), st.randoms())
def test_rules_are_neutral(T, rnd):
    perm = list(range(T.n))
    rnd.shuffle(perm)
    for rule in (SLP, RKOTH, RSEB):
        assert exact_distribution(T.relabel(perm), rule).relabel(perm) == exact_distribution(T, rule)


def test_augmented_3cycle_and_mixing():
    C3 = gen_balanced(2)
    assert tuple(eval_augmented(C3, SLP, F(2, 3))) == (F(1, 3),) * 3
    T = gen_random(6, 3)
    if condorcet_winner_mask(T, T.full) is None:
        base = exact_distribution(T, SLP)
        mixed = eval_augmented(T, SLP, F(1, 2))
        assert all(m == p / 2 + F(1, 12) for m, p in zip(mixed, base))
    assert eval_augmented(transitive(5), SLP, F(1, 2))[0] == 1


# ---------------------------------------------------------------- Monte Carlo

def test_monte_carlo_reproducible():
    T = gen_random(7, 1)
    spec = parse_rule("rkoth:mc=2000,seed=9")
    assert evaluate(T, spec) == evaluate(T, spec)


@pytest.mark.parametrize("kind,seed", [("rseb", 3), ("rkoth", 5)])
def test_monte_carlo_converges_to_exact(kind, seed):
    T = gen_random(6, seed)
    exact = exact_distribution(T, parse_rule(kind))
    ev = evaluate(T, parse_rule(f"{kind}:mc=40000,seed={seed}"))
    for p, est, hw in zip(exact, ev.distribution, ev.half_widths):
        # fixed seeds; 4 half-widths leaves ample room while still catching bias
        assert abs(est - float(p)) <= 4 * hw + 1e-9


def test_monte_carlo_kryptonite8_rseb():
    ev = evaluate(gen_kryptonite(8), parse_rule("rseb:mc=200000,seed=1"))
    assert abs(ev.distribution[0] - 6 / 7) <= 1.5 * ev.half_widths[0]


def test_augmented_monte_carlo_renormalises():
    spec = parse_rule("augmented(base=rseb:mc=5000,seed=2,c=2/3)")
    ev = evaluate(gen_balanced(3), spec)
    assert abs(sum(ev.distribution) - 1) < 1e-12
    assert ev.method == "MONTE_CARLO"


@pytest.mark.parametrize("n,seed", [(5, 0), (6, 1), (6, 2)])
def test_rseb_matches_seeding_oracle_fixed(n, seed):
    T = gen_random(n, seed)
    assert list(eval_rseb_exact(T)) == rseb_by_seedings(T)


def test_rkoth_pseudocode_agrees_exhaustive_n5():
    for n in range(2, 6):
        for T in enumerate_tournaments(n):
            assert eval_rkoth_exact(T) == eval_rkoth_pseudocode(T)
