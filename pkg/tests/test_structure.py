import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from snmlab.core import (enumerate_tournaments, from_code, gen_balanced, gen_random,
                         gen_rseb_cover_example, transitive)
from snmlab.rules import RKOTH, RSEB, SLP, UNIFORM_CONDORCET, eval_rkoth_exact
from snmlab.structure import (banks_set, check_condorcet_consistent, check_cover_consistent,
                              check_monotone, compute_covers, condorcet_winner, is_transitive,
                              monotone_pair, transitive_subsets, uncovered_set)


def tournaments(lo=2, hi=7):
    return st.integers(lo, hi).flatmap(
        lambda n: st.integers(0, (1 << (n * (n - 1) // 2)) - 1).map(lambda c: from_code(n, c)))


def covers_by_definition(T, i, j):
    return T.beats(i, j) and all(T.beats(x, j) for x in range(T.n) if T.beats(x, i))


def banks_by_definition(T):
    """Tops of transitive subsets to which no outside team can be added transitively."""
    tops = set()
    for S in transitive_subsets(T):
        if all(not is_transitive(T.subtournament(sorted(S + (x,))))
               for x in range(T.n) if x not in S):
            sub = T.subtournament(S)
            tops.add(S[sub.scores().index(len(S) - 1)])
    return frozenset(tops)


@given(tournaments())
def test_covers_match_definition(T):
    C = compute_covers(T)
    for i in range(T.n):
        for j in range(T.n):
            assert C.covers(i, j) == (i != j and covers_by_definition(T, i, j))


def test_cover_example():
    T = gen_rseb_cover_example()
    assert compute_covers(T).covers(7, 0)  # H covers A
    assert 0 not in uncovered_set(T)


@settings(max_examples=80, deadline=None)
@given(tournaments(2, 6))
def test_banks_matches_definition_and_lies_in_uncovered(T):
    b = banks_set(T).banks_set
    assert b == banks_by_definition(T)
    assert b <= uncovered_set(T)
    assert b


def test_banks_witness_chains_are_maximal_transitive():
    T = gen_random(7, 12)
    rep = banks_set(T)
    for top, chain in rep.witnesses.items():
        assert chain[0] == top
        assert is_transitive(T.subtournament(chain))
        for a, b in zip(chain, chain[1:]):
            assert T.beats(a, b)


def test_banks_3cycle_and_transitive():
    assert banks_set(gen_balanced(2)).banks_set == {0, 1, 2}
    assert banks_set(transitive(5)).banks_set == {0}


def test_banks_equals_rkoth_support_n5():
    for T in enumerate_tournaments(5):
        assert banks_set(T).banks_set == eval_rkoth_exact(T).support()


def test_condorcet_winner():
    assert condorcet_winner(transitive(4)) == 0
    assert condorcet_winner(gen_balanced(3)) is None


def test_property_reports():
    assert check_condorcet_consistent(RKOTH, 5).passed
    assert check_condorcet_consistent(UNIFORM_CONDORCET, 4).passed
    rep = check_cover_consistent(RSEB, 4)
    assert rep.property == "cover"
    out = json.loads(check_cover_consistent(UNIFORM_CONDORCET, 4).to_json())
    assert out["verdict"] == "fail"
    assert set(out["counterexample"]) == {"trn", "details"}
    assert out["counterexample"]["details"]["covered"] >= 1


def test_rkoth_cover_consistent_n6_canonical():
    # covering is isomorphism invariant, so representatives suffice here
    assert check_cover_consistent(RKOTH, 6, canonical_only=True).passed


def test_monotone_checks():
    assert check_monotone(RKOTH, 5).passed
    assert check_monotone(RSEB, 4).passed
    rep = check_monotone(UNIFORM_CONDORCET, 3)
    # throwing a match can destroy a Condorcet winner but never helps the thrower
    assert rep.passed


def test_slp_nonmonotone_at_six_teams():
    reps = enumerate_tournaments(6, canonical_only=True)
    rep = check_monotone(SLP, 6, tournaments=reps, collect_all=True)
    assert not rep.passed
    assert (F(1, 5), F(1, 3)) in {monotone_pair(c) for c in rep.counterexamples}


def test_check_monotone_cap():
    from snmlab.core import SizeOutOfRange
    with pytest.raises(SizeOutOfRange):
        check_monotone(SLP, 6)


def test_augmented_monotone_at_five_but_not_six():
    from snmlab.rules import AUGMENTED_SLP
    assert check_monotone(AUGMENTED_SLP, 5).passed
    six = check_monotone(AUGMENTED_SLP, 6, tournaments=enumerate_tournaments(6, canonical_only=True))
    assert not six.passed


def test_covers_transitive_and_irreflexive_n6():
    for T in enumerate_tournaments(6, canonical_only=True):
        C = compute_covers(T)
        for i in range(T.n):
            assert not C.covers(i, i)
            for j in range(T.n):
                if C.covers(i, j):
                    assert not C.covers(j, i)
                    assert all(C.covers(i, x) for x in range(T.n) if C.covers(j, x))


def test_unique_uncovered_means_condorcet_winner():
    for n in range(2, 7):
        for T in enumerate_tournaments(n):
            u = uncovered_set(T)
            if len(u) == 1:
                assert condorcet_winner(T) == next(iter(u))


def test_transitive_uncovered_is_top():
    for n in range(2, 9):
        assert uncovered_set(transitive(n)) == {0}


def test_cover_consistency_implies_condorcet_consistency():
    from snmlab.rules import AUGMENTED_SLP
    for rule in (RKOTH, RSEB, SLP, UNIFORM_CONDORCET, AUGMENTED_SLP):
        for n in (3, 4):
            if check_cover_consistent(rule, n).passed:
                assert check_condorcet_consistent(rule, n).passed


def test_balanced_is_vertex_transitive():
    from snmlab.core import canonical_form
    for k in range(2, 6):
        T = gen_balanced(k)
        n = T.n
        rot = T.relabel([(i + 1) % n for i in range(n)])
        assert rot == T
        assert canonical_form(rot) == canonical_form(T)
