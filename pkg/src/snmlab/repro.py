"""One-shot reproduction suite: every headline number recomputed and compared."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable

from .audit import (REFERENCE_EPSILON, RuleCache, collapse_distribution, condorcet_manipulation_gain,
                    derive_lower_bound, expand_tournament, find_slp_witness, kryptonite_gain,
                    lower_bound_from, snm_audit)
from .core import (canonical_form, enumerate_tournaments, gen_balanced, gen_kryptonite,
                   gen_rseb_cover_example)
from .lp import check_lp1, fraction_str, solve_slp
from .rules import (AUGMENTED_SLP, RKOTH, RSEB, SLP, RuleSpec, eval_monte_carlo,
                    eval_rkoth_exact, eval_rseb_exact)
from .structure import (banks_set, check_condorcet_consistent, check_cover_consistent,
                        check_monotone, monotone_pair)


@dataclass
class ReproResult:
    claim: str
    reference: str
    computed: str
    tolerance: str
    verdict: str
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _fs(x) -> str:
    return fraction_str(x)


# ---------------------------------------------------------------- claims

def claim_slp_unique():
    bad = 0
    for T in enumerate_tournaments(6):
        try:
            solve_slp(T)
        except Exception:
            bad += 1
    return "value 1, unique, all 32768", f"{32768 - bad}/32768 certified", "0", bad == 0


def claim_slp_witness():
    w = find_slp_witness(6, 3, Fraction(1, 2))
    if w is None:
        return "5/9 (4/9 -> 1)", "none", "0", False
    ok = w.gain >= Fraction(5, 9) and (w.mass_before, w.mass_after) == (Fraction(4, 9), 1)
    return "5/9 (4/9 -> 1)", f"{_fs(w.gain)} ({_fs(w.mass_before)} -> {_fs(w.mass_after)})", "0", ok


def claim_lower_bound():
    p = lower_bound_from(Fraction(5, 9), 6, 3, REFERENCE_EPSILON)
    got = f"delta={_fs(p.delta)} z={p.z} k'={p.k_prime} n'={p.n_prime}"
    ok = (p.delta, p.z, p.k_prime, p.n_prime) == (Fraction(1, 72), 157, 939, 1878)
    return "delta=1/72 z=157 k'=939 n'=1878", got, "0", ok


def claim_epsilon():
    w = find_slp_witness(6, 3, Fraction(1, 2))
    p = derive_lower_bound(w, "estimate")
    ratio = p.epsilon / REFERENCE_EPSILON
    got = f"{float(p.epsilon):.6f} (z={p.z} k'={p.k_prime} n'={p.n_prime})"
    return "0.0016", got, "factor 2", Fraction(1, 2) <= ratio <= 2


def claim_rkoth_2snm():
    gains = [snm_audit(RKOTH, n, 2).max_gain for n in (3, 4, 5, 6)]
    return "1/3", " ".join(_fs(g) for g in gains), "0", all(g == Fraction(1, 3) for g in gains)


def claim_augmented():
    worst = Fraction(0)
    for n in range(2, 6):
        for k in range(2, n + 1):
            worst = max(worst, snm_audit(AUGMENTED_SLP, n, k).max_gain)
    condorcet = all(check_condorcet_consistent(AUGMENTED_SLP, n).passed for n in range(2, 6))
    got = f"max {_fs(worst)}" + ("" if condorcet else ", not Condorcet-consistent")
    return "<= 2/3", got, "0", worst <= Fraction(2, 3) and condorcet


def claim_banks():
    mismatched = sum(1 for n in range(2, 7) for T in enumerate_tournaments(n)
                     if banks_set(T).banks_set != eval_rkoth_exact(T).support())
    return "0 mismatches", f"{mismatched} mismatches", "0", mismatched == 0


def claim_rkoth_cover():
    ok = all(check_cover_consistent(RKOTH, n).passed for n in range(2, 7))
    return "pass", _verdict(ok), "0", ok


def claim_rseb_cover():
    p = eval_rseb_exact(gen_rseb_cover_example())[0]
    return "> 0", _fs(p), "0", p > 0


def claim_rkoth_monotone():
    ok = all(check_monotone(RKOTH, n).passed for n in range(2, 6))
    return "pass", _verdict(ok), "0", ok


def claim_slp_nonmonotone(n: int = 5):
    r = check_monotone(SLP, n, collect_all=True)
    pairs = sorted({monotone_pair(c) for c in r.counterexamples})
    hit = (Fraction(1, 5), Fraction(1, 3)) in pairs
    got = ", ".join(f"{_fs(a)}->{_fs(b)}" for a, b in pairs) or "monotone"
    return "1/5->1/3", got, "0", hit


def claim_kryptonite_rkoth():
    gains = [kryptonite_gain(RKOTH, gen_kryptonite(k + 1)) for k in (3, 4, 5, 6)]
    ok = all(g == Fraction(k - 1, k + 1) for g, k in zip(gains, (3, 4, 5, 6)))
    return "1/2 3/5 2/3 5/7", " ".join(_fs(g) for g in gains), "0", ok


def claim_kryptonite_rseb3():
    g = kryptonite_gain(RSEB, gen_kryptonite(4))
    return "2/3", _fs(g), "0", g == Fraction(2, 3)


def claim_kryptonite_rseb7_mc():
    gain, hw = kryptonite_gain_mc(7, 10**6, seed=1)
    ok = abs(gain - 6 / 7) <= hw
    return "6/7", f"{gain:.5f} +- {hw:.5f}", "99% CI", ok


def kryptonite_gain_mc(k: int, samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo RSEB gain of everyone-but-superman on the (k+1)-team kryptonite tournament.

    After the manipulation the kryptonite is a Condorcet winner, so the
    coalition's mass becomes exactly 1; only the pre-manipulation mass is
    sampled, and the half-width is that estimate's.
    """
    T = gen_kryptonite(k + 1)
    ev = eval_monte_carlo(T, RuleSpec("RSEB", method="MONTE_CARLO", sample_count=samples, seed=seed))
    superman = ev.distribution[0]
    return superman, ev.half_widths[0]


def expansion_check(T, z: int = 2) -> tuple[bool, str]:
    """Structure of expand(T, z) plus LP1 feasibility of its collapsed RKotH lottery."""
    big = expand_tournament(T, z)
    g = 2 * z - 1
    target = canonical_form(gen_balanced(z))
    for i in range(T.n):
        if canonical_form(big.subtournament(range(i * g, (i + 1) * g))) != target:
            return False, f"group {i + 1} is not balanced"
    for a, b in product(range(big.n), repeat=2):
        if a // g != b // g and big.beats(a, b) != T.beats(a // g, b // g):
            return False, f"cross edge {a + 1}-{b + 1} does not copy T"
    cache = RuleCache(RKOTH)
    alpha, _ = condorcet_manipulation_gain(RKOTH, big, cache)
    dist = collapse_distribution(cache(big), T.n, z)
    check = check_lp1(T, dist, alpha, z)
    return check.passed, f"alpha={_fs(alpha)}"


def claim_expansion():
    tours = [gen_balanced(2)] + list(enumerate_tournaments(4))
    failures = [msg for ok, msg in (expansion_check(T) for T in tours) if not ok]
    got = f"{len(tours) - len(failures)}/{len(tours)} pass"
    return f"{len(tours)}/{len(tours)} pass", got, "0", not failures


CLAIMS: dict[str, Callable] = {
    "cor3.2-slp-unique": claim_slp_unique,
    "lemma4.3-slp-witness": claim_slp_witness,
    "sec4.1-lower-bound": claim_lower_bound,
    "sec4.1-epsilon-estimate": claim_epsilon,
    "thm1.3-rkoth-2snm": claim_rkoth_2snm,
    "thm1.2-augmented": claim_augmented,
    "lemma1.5-banks-rkoth": claim_banks,
    "lemma6.4-rkoth-cover": claim_rkoth_cover,
    "obs2.11-rseb-cover": claim_rseb_cover,
    "lemma6.9-rkoth-monotone": claim_rkoth_monotone,
    "appendixB-slp-nonmonotone": claim_slp_nonmonotone,
    "appendixB-kryptonite-rkoth": claim_kryptonite_rkoth,
    "appendixB-kryptonite-rseb3": claim_kryptonite_rseb3,
    "appendixB-kryptonite-rseb7-mc": claim_kryptonite_rseb7_mc,
    "lemma4.1-expansion": claim_expansion,
}


def select(selectors: list[str] | None) -> list[str]:
    """Claim ids matching any selector (full id or the part before the first '-')."""
    if not selectors:
        return list(CLAIMS)
    chosen = []
    for cid in CLAIMS:
        head = cid.split("-", 1)[0]
        if any(s == cid or s == head or cid.startswith(s) for s in selectors):
            chosen.append(cid)
    unknown = [s for s in selectors
               if not any(s == c or s == c.split("-", 1)[0] or c.startswith(s) for c in CLAIMS)]
    if unknown:
        raise KeyError(f"unknown claim selector(s): {', '.join(unknown)}")
    return chosen


def run_claims(selectors: list[str] | None = None) -> list[ReproResult]:
    results = []
    for cid in select(selectors):
        t0 = time.perf_counter()
        ref, got, tol, ok = CLAIMS[cid]()
        results.append(ReproResult(cid, ref, got, tol, _verdict(ok), time.perf_counter() - t0))
    return results


def to_csv(results: list[ReproResult]) -> str:
    # runtime is left out so that repeated runs are byte-identical
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["claim", "reference", "computed", "tolerance", "verdict"])
    for r in results:
        w.writerow([r.claim, r.reference, r.computed, r.tolerance, r.verdict])
    return buf.getvalue()


def to_table(results: list[ReproResult]) -> str:
    head = ("claim", "reference", "computed", "tol", "verdict", "time")
    rows = [(r.claim, r.reference, r.computed, r.tolerance, r.verdict.upper(), f"{r.runtime:.1f}s")
            for r in results]
    widths = [max(len(x[i]) for x in [head, *rows]) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [head, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
