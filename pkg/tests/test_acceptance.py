"""Acceptance criteria, each at its stated tolerance (exact ones with tolerance 0).

A summary line per criterion is printed at the end of the pytest run.
"""

import random
import time
from fractions import Fraction as F

import pytest

from snmlab.audit import (REFERENCE_EPSILON, derive_lower_bound,
                          find_slp_witness, iter_witnesses, kryptonite_gain, balanced_floor_check,
                          lower_bound_from, snm_audit)
from snmlab.core import enumerate_tournaments, gen_balanced, gen_kryptonite, gen_rseb_cover_example
from snmlab.lp import (build_slp_dual, estimate_epsilon, exact_rank, random_positive_objectives,
                       reoptimize_over_face, simplex_solve, solve_slp)
from snmlab.repro import expansion_check, kryptonite_gain_mc
from snmlab.rules import (AUGMENTED_SLP, RKOTH, RSEB, SLP, UNIFORM_CONDORCET, eval_rkoth_exact,
                          eval_rseb_exact)
from snmlab.structure import (banks_set, check_condorcet_consistent, check_cover_consistent,
                              check_monotone, monotone_pair, uncovered_set)


@pytest.fixture(scope="module")
def witness():
    return find_slp_witness(6, 3, F(1, 2))


def test_c01_slp_value_and_uniqueness_all_six_team(report):
    t0 = time.perf_counter()
    failures = 0
    for T in enumerate_tournaments(6):
        try:
            cert = solve_slp(T)
            assert sum(cert.solution) == 1 and cert.nullity == 1
        except Exception:
            failures += 1
    took = time.perf_counter() - t0
    ok = failures == 0 and took < 600
    assert report("1 SLP value 1 + unique optimum, 32768 tournaments", ok,
                  f"{32768 - failures} certified in {took:.0f}s")


def test_c02_slp_witness(report, witness):
    found = []
    for w in iter_witnesses(SLP, 6, 3, F(1, 2)):
        found.append(w)
    has_fig = any((w.mass_before, w.mass_after) == (F(4, 9), 1) for w in found)
    ok = witness is not None and witness.gain >= F(5, 9) and has_fig
    assert report("2 SLP witness n=6 k=3", ok,
                  f"first gain {witness.gain}, {len(found)} witnesses, 4/9 -> 1 present: {has_fig}")


def test_c03a_lower_bound_pipeline(report):
    p = lower_bound_from(F(5, 9), 6, 3, REFERENCE_EPSILON)
    ok = (p.delta, p.z, p.k_prime, p.n_prime) == (F(1, 72), 157, 939, 1878)
    assert report("3a lower-bound parameters", ok,
                  f"delta={p.delta} z={p.z} k'={p.k_prime} n'={p.n_prime}")


@pytest.mark.xfail(strict=True, reason="max vertex distance is exactly 2*eps here, so the "
                   "largest valid eps is delta/2 = 1/144 ~ 0.0069, about 4.3x the reference 0.0016")
def test_c03b_epsilon_estimate_within_factor_two(report, witness):
    t0 = time.perf_counter()
    delta = (witness.gain - F(1, 2)) / 4
    assert delta == F(1, 72)
    eps = min(estimate_epsilon(witness.T, delta), estimate_epsilon(witness.T_prime, delta))
    took = time.perf_counter() - t0
    ratio = eps / REFERENCE_EPSILON
    ok = F(1, 2) <= ratio <= 2 and took < 1800
    p = derive_lower_bound(witness, eps)
    assert report("3b epsilon estimate within x2 of 0.0016", ok,
                  f"eps={float(eps):.6f} ({eps}), ratio {float(ratio):.2f}, "
                  f"z={p.z} k'={p.k_prime} n'={p.n_prime}, {took:.0f}s")


def test_c04_rkoth_two_coalitions(report):
    gains = {n: snm_audit(RKOTH, n, 2).max_gain for n in (3, 4, 5, 6)}
    ok = all(g == F(1, 3) for g in gains.values())
    assert report("4 RKotH 2-SNM max gain 1/3, n=3..6", ok,
                  " ".join(f"n={n}:{g}" for n, g in gains.items()))


def test_c05_augmented_rule(report):
    worst = F(0)
    for n in range(2, 6):
        for k in range(2, n + 1):
            worst = max(worst, snm_audit(AUGMENTED_SLP, n, k).max_gain)
    condorcet = all(check_condorcet_consistent(AUGMENTED_SLP, n).passed for n in range(2, 6))
    ok = worst <= F(2, 3) and condorcet
    assert report("5 augmented rule gain <= 2/3, n<=5, all k", ok,
                  f"max gain {worst}, Condorcet-consistent: {condorcet}")


def test_c06_banks_equals_rkoth_support(report):
    mismatches = checked = 0
    for n in range(2, 7):
        for T in enumerate_tournaments(n):
            checked += 1
            if banks_set(T).banks_set != eval_rkoth_exact(T).support():
                mismatches += 1
    assert report("6 Banks set = RKotH support, all T n<=6", mismatches == 0,
                  f"{checked} tournaments, {mismatches} mismatches")


def test_c07_cover_consistency(report):
    rkoth_ok = all(check_cover_consistent(RKOTH, n).passed for n in range(2, 7))
    a = eval_rseb_exact(gen_rseb_cover_example())[0]
    ok = rkoth_ok and a > 0
    assert report("7 RKotH cover-consistent n<=6; RSEB gives covered A > 0", ok,
                  f"RKotH: {rkoth_ok}, RSEB P(A) = {a}")


def test_c08a_rkoth_monotone(report):
    ok = all(check_monotone(RKOTH, n).passed for n in range(2, 6))
    assert report("8a RKotH monotone n<=5", ok, "checked all labeled tournaments")


@pytest.mark.xfail(strict=True, reason="SLP is monotone on every 5-team tournament (exhaustive, "
                   "cross-checked in floating point); the 1/5 -> 1/3 instance first appears at n=6")
def test_c08b_slp_nonmonotone_at_five(report):
    rep = check_monotone(SLP, 5, collect_all=True)
    pairs = {monotone_pair(c) for c in rep.counterexamples}
    ok = (F(1, 5), F(1, 3)) in pairs
    six = check_monotone(SLP, 6, tournaments=enumerate_tournaments(6, canonical_only=True),
                         collect_all=True)
    six_pairs = sorted({monotone_pair(c) for c in six.counterexamples})
    assert report("8b SLP counterexample (1/5, 1/3) at n=5", ok,
                  f"n=5: {len(rep.counterexamples)} violations; n=6 pairs: "
                  + ", ".join(f"({a}, {b})" for a, b in six_pairs))


def test_c09_kryptonite(report):
    rk = {k: kryptonite_gain(RKOTH, gen_kryptonite(k + 1)) for k in (3, 4, 5, 6)}
    rk_ok = all(g == F(k - 1, k + 1) for k, g in rk.items())
    rs3 = kryptonite_gain(RSEB, gen_kryptonite(4))
    mc, hw = kryptonite_gain_mc(7, 10**6, seed=1)
    ok = rk_ok and rs3 == F(2, 3) and abs(mc - 6 / 7) <= hw
    assert report("9 kryptonite gains", ok,
                  "RKotH " + " ".join(str(g) for g in rk.values())
                  + f"; RSEB k=3 {rs3}; RSEB k=7 MC {mc:.5f} +- {hw:.5f} vs {6 / 7:.5f}")


def test_c10_expansion(report):
    tours = [gen_balanced(2)] + list(enumerate_tournaments(4))
    results = [expansion_check(T, 2) for T in tours]
    bad = [msg for ok, msg in results if not ok]
    alphas = sorted({msg for _, msg in results})
    assert report("10 expansion z=2: balanced groups, copied edges, LP1 at audited alpha",
                  not bad, f"{len(tours) - len(bad)}/{len(tours)}; {', '.join(alphas)}")


def test_c11_property_suites(report):
    dual_ok = all(simplex_solve(build_slp_dual(T)).value == 1 for T in enumerate_tournaments(6))
    tight_ok = True
    for T in enumerate_tournaments(6):
        cert = solve_slp(T)
        tight_ok &= cert.support <= cert.tight_constraints
    face_ok = all(d == solve_slp(T).solution
                  for n in range(2, 6) for T in enumerate_tournaments(n)
                  for d in reoptimize_over_face(T, random_positive_objectives(n, 20, seed=T.code())))
    rng = random.Random(2024)
    parity_ok = True
    for _ in range(200):
        n = rng.randint(1, 8)
        M = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                s = rng.choice((1, -1))
                M[i][j], M[j][i] = s, -s
        parity_ok &= exact_rank(M) == n - n % 2
    banks_ok = all(banks_set(T).banks_set <= uncovered_set(T)
                   for n in range(2, 7) for T in enumerate_tournaments(n))
    floor_ok = all(g >= f for rule in (SLP, RKOTH, RSEB, UNIFORM_CONDORCET, AUGMENTED_SLP)
                   for k in (2, 3) for g, f in [balanced_floor_check(rule, k)])
    parts = {"duality": dual_ok, "slackness": tight_ok, "face": face_ok, "skew-parity": parity_ok,
             "banks<=uncovered": banks_ok, "balanced-floor": floor_ok}
    assert report("11 property suites", all(parts.values()),
                  " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in parts.items()))
