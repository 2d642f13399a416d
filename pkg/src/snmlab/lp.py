"""Exact rational linear programming for SLP(T) and friends.

Everything here is ``fractions.Fraction``; no floats enter this module.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .core import Tournament, check_size, members

HALF = Fraction(1, 2)
ZERO = Fraction(0)
ONE = Fraction(1)


class CertificateFailure(RuntimeError):
    """The SLP optimum failed its value or uniqueness certificate."""


# ---------------------------------------------------------------- distributions

@dataclass(frozen=True)
class Distribution:
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        probs = tuple(Fraction(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if any(p < 0 for p in probs):
            raise ValueError(f"negative probability in {self}")
        if sum(probs) != 1:
            raise ValueError(f"probabilities sum to {sum(probs)}, not 1")

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def __iter__(self):
        return iter(self.probs)

    def __str__(self):
        return " ".join(str(p) for p in self.probs)

    def mass(self, teams) -> Fraction:
        return sum((self.probs[i] for i in teams), ZERO)

    def support(self) -> frozenset[int]:
        return frozenset(i for i, p in enumerate(self.probs) if p > 0)

    def relabel(self, perm: Sequence[int]) -> "Distribution":
        """Distribution of ``T`` given this one for ``T.relabel(perm)``."""
        out = [ZERO] * len(self.probs)
        for new, old in enumerate(perm):
            out[old] = self.probs[new]
        return Distribution(tuple(out))

    def to_json(self) -> list[str]:
        return [fraction_str(p) for p in self.probs]

    @classmethod
    def from_json(cls, data) -> "Distribution":
        return cls(tuple(Fraction(x) for x in data))

    @classmethod
    def indicator(cls, n: int, i: int) -> "Distribution":
        return cls(tuple(ONE if j == i else ZERO for j in range(n)))

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls((Fraction(1, n),) * n)


def fraction_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------- general LP

@dataclass(frozen=True)
class LinearProgram:
    """``sense`` c.x subject to A[i].x (relations[i]) b[i]; relations in {'>=', '<=', '=='}."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    c: tuple[Fraction, ...]
    sense: str = "min"
    relations: tuple[str, ...] | None = None
    nonneg: tuple[bool, ...] | None = None

    def __post_init__(self):
        m, n = len(self.A), len(self.c)
        if len(self.b) != m or any(len(row) != n for row in self.A):
            raise ValueError("inconsistent LP dimensions")
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown sense {self.sense!r}")
        if self.relations is None:
            object.__setattr__(self, "relations", (">=",) * m)
        if self.nonneg is None:
            object.__setattr__(self, "nonneg", (True,) * n)
        if len(self.relations) != m or len(self.nonneg) != n:
            raise ValueError("inconsistent LP dimensions")
        if any(r not in (">=", "<=", "==") for r in self.relations):
            raise ValueError(f"unknown relation in {self.relations}")

    @property
    def num_vars(self) -> int:
        return len(self.c)

    def dump(self) -> str:
        """Debug text: one 'a1 a2 ... an REL b' line per row, rationals as num/den."""
        lines = [f"{self.sense} " + " ".join(fraction_str(x) for x in self.c)]
        for row, rel, rhs in zip(self.A, self.relations, self.b):
            lines.append(" ".join(fraction_str(x) for x in row) + f" {rel} {fraction_str(rhs)}")
        return "\n".join(lines) + "\n"

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        if any(nn and xi < 0 for nn, xi in zip(self.nonneg, x)):
            return False
        for row, rel, rhs in zip(self.A, self.relations, self.b):
            lhs = sum((a * xi for a, xi in zip(row, x) if a), ZERO)
            if rel == ">=" and lhs < rhs or rel == "<=" and lhs > rhs or rel == "==" and lhs != rhs:
                return False
        return True

    def objective(self, x: Sequence[Fraction]) -> Fraction:
        return sum((ci * xi for ci, xi in zip(self.c, x)), ZERO)


@dataclass(frozen=True)
class LPResult:
    status: str  # 'optimal', 'infeasible' or 'unbounded'
    x: tuple[Fraction, ...] | None = None
    value: Fraction | None = None
    basis: tuple[int, ...] = field(default=(), compare=False)


def _pivot(tab: list[list[Fraction]], r: int, col: int) -> None:
    prow = tab[r]
    piv = prow[col]
    if piv != 1:
        inv = 1 / piv
        prow[:] = [v * inv for v in prow]
    nz = [(j, v) for j, v in enumerate(prow) if v]
    for i, row in enumerate(tab):
        if i == r:
            continue
        f = row[col]
        if f:
            for j, v in nz:
                row[j] -= f * v


def _bland(tab: list[list[Fraction]], basis: list[int], ncols: int, allowed) -> str:
    """Minimise the objective held in the last row; Bland's rule throughout."""
    m = len(tab) - 1
    obj = tab[m]
    while True:
        col = next((j for j in range(ncols) if allowed[j] and obj[j] < 0), None)
        if col is None:
            return "optimal"
        best = None
        for i in range(m):
            a = tab[i][col]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best[0] or ratio == best[0] and basis[i] < basis[best[1]]:
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        r = best[1]
        _pivot(tab, r, col)
        basis[r] = col


def simplex_solve(lp: LinearProgram) -> LPResult:
    """Two-phase tableau simplex in exact arithmetic with Bland's anti-cycling rule."""
    n = lp.num_vars
    # column map: each original variable -> (plus column, minus column or None)
    cols: list[tuple[int, int | None]] = []
    nc = 0
    for nn in lp.nonneg:
        if nn:
            cols.append((nc, None))
            nc += 1
        else:
            cols.append((nc, nc + 1))
            nc += 2
    m = len(lp.A)
    n_struct = nc
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_of: list[int | None] = []
    for row, rel in zip(lp.A, lp.relations):
        r = [ZERO] * n_struct
        for k, a in enumerate(row):
            if a:
                p, q = cols[k]
                r[p] = Fraction(a)
                if q is not None:
                    r[q] = -Fraction(a)
        rows.append(r)
    n_slack = sum(1 for rel in lp.relations if rel != "==")
    total = n_struct + n_slack
    s = n_struct
    for i, rel in enumerate(lp.relations):
        rows[i].extend([ZERO] * n_slack)
        if rel == "<=":
            rows[i][s] = ONE
            slack_of.append(s)
            s += 1
        elif rel == ">=":
            rows[i][s] = -ONE
            slack_of.append(s)
            s += 1
        else:
            slack_of.append(None)
        b = Fraction(lp.b[i])
        if b < 0:
            rows[i] = [-v for v in rows[i]]
            b = -b
        rhs.append(b)
    basis: list[int] = []
    art_rows = []
    for i in range(m):
        sc = slack_of[i]
        if sc is not None and rows[i][sc] == 1:
            basis.append(sc)
        else:
            basis.append(-1)
            art_rows.append(i)
    n_art = len(art_rows)
    ncols = total + n_art
    tab = []
    for i in range(m):
        tab.append(rows[i] + [ZERO] * n_art + [rhs[i]])
    for k, i in enumerate(art_rows):
        tab[i][total + k] = ONE
        basis[i] = total + k

    if n_art:
        phase1 = [ZERO] * (ncols + 1)
        for k, i in enumerate(art_rows):
            for j in range(ncols + 1):
                phase1[j] -= tab[i][j]
            phase1[total + k] = ZERO
        tab.append(phase1)
        _bland(tab, basis, ncols, [True] * ncols)
        if tab[-1][-1] != 0:
            return LPResult("infeasible")
        tab.pop()
        # drive remaining artificials out of the basis; drop redundant rows
        i = 0
        while i < len(tab):
            if basis[i] >= total:
                col = next((j for j in range(total) if tab[i][j]), None)
                if col is None:
                    tab.pop(i)
                    basis.pop(i)
                    continue
                _pivot(tab, i, col)
                basis[i] = col
            i += 1
    sign = 1 if lp.sense == "min" else -1
    cost = [ZERO] * ncols
    for k, ck in enumerate(lp.c):
        p, q = cols[k]
        cost[p] = sign * Fraction(ck)
        if q is not None:
            cost[q] = -sign * Fraction(ck)
    obj = cost + [ZERO]
    for i, bv in enumerate(basis):
        cb = obj[bv]
        if cb:
            row = tab[i]
            obj = [o - cb * v for o, v in zip(obj, row)]
    tab.append(obj)
    allowed = [j < total for j in range(ncols)]
    status = _bland(tab, basis, ncols, allowed)
    if status == "unbounded":
        return LPResult("unbounded")
    tab.pop()
    values = [ZERO] * ncols
    for i, bv in enumerate(basis):
        values[bv] = tab[i][-1]
    x = []
    for p, q in cols:
        x.append(values[p] - (values[q] if q is not None else ZERO))
    x = tuple(x)
    return LPResult("optimal", x, lp.objective(x), tuple(basis))


# ---------------------------------------------------------------- SLP

def slp_rows(T: Tournament, self_weight: Fraction = HALF) -> tuple[tuple[Fraction, ...], ...]:
    """Row i: coefficient 1 on every team beating i, ``self_weight`` on i itself."""
    n = T.n
    out = []
    for i in range(n):
        inm = T.in_mask(i)
        out.append(tuple(self_weight if j == i else (ONE if inm >> j & 1 else ZERO)
                         for j in range(n)))
    return tuple(out)


def build_slp(T: Tournament) -> LinearProgram:
    n = T.n
    return LinearProgram(slp_rows(T), (HALF,) * n, (ONE,) * n, "min")


def build_slp_dual(T: Tournament) -> LinearProgram:
    n = T.n
    A = []
    for i in range(n):
        out = T.out_mask(i)
        A.append(tuple(HALF if j == i else (ONE if out >> j & 1 else ZERO) for j in range(n)))
    return LinearProgram(tuple(A), (HALF,) * n, (ONE,) * n, "max", ("<=",) * n)


def skew_matrix(T: Tournament, support) -> list[list[int]]:
    idx = sorted(support)
    return [[0 if a == b else (1 if T.beats(a, b) else -1) for b in idx] for a in idx]


def exact_rank(matrix: Sequence[Sequence[int]]) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination."""
    M = [list(map(int, row)) for row in matrix]
    if not M:
        return 0
    rows, cols = len(M), len(M[0])
    rank = 0
    prev = 1
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if M[r][c]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][c]
        for r in range(rank + 1, rows):
            f = M[r][c]
            M[r] = [(p * M[r][j] - f * M[rank][j]) // prev for j in range(cols)]
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def skew_support_rank(T: Tournament, support) -> int:
    if not support:
        raise ValueError("support must be nonempty")
    return exact_rank(skew_matrix(T, support))


@dataclass(frozen=True)
class SlpCertificate:
    solution: Distribution
    tight_constraints: frozenset[int]
    support: frozenset[int]
    support_rank: int

    @property
    def nullity(self) -> int:
        return len(self.support) - self.support_rank


def _row_value(row, p) -> Fraction:
    return sum((a * x for a, x in zip(row, p) if a and x), ZERO)


def solve_slp(T: Tournament) -> SlpCertificate:
    """Unique optimum of SLP(T) together with its value/tightness/uniqueness certificate."""
    lp = build_slp(T)
    res = simplex_solve(lp)
    if res.status != "optimal" or res.value != 1:
        raise CertificateFailure(f"SLP optimum is {res.status} with value {res.value}, expected 1")
    p = res.x
    tight = frozenset(i for i, row in enumerate(lp.A) if _row_value(row, p) == HALF)
    support = frozenset(i for i, x in enumerate(p) if x > 0)
    if not support <= tight:
        raise CertificateFailure(f"support {sorted(support)} not tight in {sorted(tight)}")
    rank = skew_support_rank(T, support)
    if len(support) - rank != 1:
        raise CertificateFailure(f"skew matrix on support has nullity {len(support) - rank}")
    # p restricted to the support spans that one-dimensional nullspace
    S = sorted(support)
    skew = skew_matrix(T, S)
    if any(sum(a * p[j] for a, j in zip(row, S)) != 0 for row in skew):
        raise CertificateFailure("support vector is not in the skew nullspace")
    return SlpCertificate(Distribution(p), tight, support, rank)


def reoptimize_over_face(T: Tournament, objectives: Sequence[Sequence[Fraction]]) -> list[Distribution]:
    """Minimise each objective over {SLP(T)-feasible p with sum p = 1}."""
    base = build_slp(T)
    A = base.A + ((ONE,) * T.n,)
    b = base.b + (ONE,)
    rel = base.relations + ("==",)
    out = []
    for c in objectives:
        res = simplex_solve(LinearProgram(A, b, tuple(map(Fraction, c)), "min", rel))
        out.append(Distribution(res.x))
    return out


def random_positive_objectives(n: int, count: int, seed: int) -> list[tuple[Fraction, ...]]:
    rng = random.Random(seed)
    return [tuple(Fraction(rng.randint(1, 1000), rng.randint(1, 1000)) for _ in range(n))
            for _ in range(count)]


# ---------------------------------------------------------------- LP0 / LP1

@dataclass(frozen=True)
class ConstraintCheck:
    passed: bool
    violated_rows: tuple[int, ...] = ()
    reason: str = ""


def _simplex_violation(n: int, dist) -> str:
    if len(dist) != n:
        return f"distribution has {len(dist)} entries for {n} teams"
    if any(Fraction(p) < 0 for p in dist):
        return "negative entry"
    if sum(Fraction(p) for p in dist) != 1:
        return "entries do not sum to 1"
    return ""


def check_lp0(T: Tournament, dist, alpha, k=None) -> ConstraintCheck:
    """p_i + mass of i's beaters >= 1 - alpha for every i with fewer than k beaters.

    ``k=None`` means k = infinity (every row applies).
    """
    bad = _simplex_violation(T.n, dist)
    if bad:
        return ConstraintCheck(False, (), bad)
    alpha = Fraction(alpha)
    p = [Fraction(x) for x in dist]
    violated = []
    for i in range(T.n):
        beaters = members(T.in_mask(i))
        if k is not None and len(beaters) > k - 1:
            continue
        if p[i] + sum((p[j] for j in beaters), ZERO) < 1 - alpha:
            violated.append(i)
    return ConstraintCheck(not violated, tuple(violated))


def check_lp1(T: Tournament, dist, alpha, z: int) -> ConstraintCheck:
    """mass of i's beaters + z/(2z-1) p_i >= 1 - alpha for every i."""
    if z < 1:
        raise ValueError("z must be a positive integer")
    bad = _simplex_violation(T.n, dist)
    if bad:
        return ConstraintCheck(False, (), bad)
    alpha = Fraction(alpha)
    w = Fraction(z, 2 * z - 1)
    p = [Fraction(x) for x in dist]
    violated = [i for i in range(T.n)
                if sum((p[j] for j in members(T.in_mask(i))), ZERO) + w * p[i] < 1 - alpha]
    return ConstraintCheck(not violated, tuple(violated))


# ---------------------------------------------------------------- epsilon estimate

def _solve_square(M: list[list[Fraction]], rhs_cols: list[list[Fraction]]):
    """Solve M X = R for several right-hand sides; None if M is singular."""
    n = len(M)
    aug = [list(M[i]) + [col[i] for col in rhs_cols] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c]), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        pr = aug[c]
        inv = 1 / pr[c]
        pr[:] = [v * inv for v in pr]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], pr)]
    return [[aug[i][n + k] for i in range(n)] for k in range(len(rhs_cols))]


class EpsilonPolytope:
    """P_eps = {x in [0,1]^n : A x >= b - eps} for the SLP rows of T, as eps varies.

    Every vertex of P_eps is ``u + eps * w`` for some basis of n tight rows,
    and is a vertex exactly on an eps-interval, so the bases are solved once.
    """

    def __init__(self, T: Tournament):
        n = self.n = T.n
        A = slp_rows(T)
        # rows G x >= h0 - eps * e
        self.G = [list(r) for r in A]
        self.h0 = [HALF] * n
        self.e = [ONE] * n
        for i in range(n):
            unit = [ZERO] * n
            unit[i] = ONE
            self.G.append(unit)
            self.h0.append(ZERO)
            self.e.append(ZERO)
            self.G.append([-v for v in unit])
            self.h0.append(-ONE)
            self.e.append(ZERO)
        self.vertices = []  # (u, w, lo, hi) with hi possibly None for unbounded
        m = len(self.G)
        for B in itertools.combinations(range(m), n):
            sol = _solve_square([self.G[r] for r in B],
                                [[self.h0[r] for r in B], [-self.e[r] for r in B]])
            if sol is None:
                continue
            u, w = sol
            lo, hi = ZERO, None
            ok = True
            for r in range(m):
                if r in B:
                    continue
                g = self.G[r]
                # g.(u + eps w) >= h0 - eps e  <=>  a + eps d >= 0
                a = sum((gi * ui for gi, ui in zip(g, u) if gi), ZERO) - self.h0[r]
                d = sum((gi * wi for gi, wi in zip(g, w) if gi), ZERO) + self.e[r]
                if d == 0:
                    if a < 0:
                        ok = False
                        break
                elif d > 0:
                    lo = max(lo, -a / d)
                else:
                    bound = -a / d
                    hi = bound if hi is None else min(hi, bound)
                if hi is not None and hi < lo:
                    ok = False
                    break
            if ok:
                self.vertices.append((tuple(u), tuple(w), lo, hi))
        self.A = A
        self._dist_cache: dict[tuple[Fraction, ...], Fraction] = {}

    def vertices_at(self, eps: Fraction) -> set[tuple[Fraction, ...]]:
        out = set()
        for u, w, lo, hi in self.vertices:
            if lo <= eps and (hi is None or eps <= hi):
                out.add(tuple(ui + eps * wi for ui, wi in zip(u, w)))
        return out

    def in_p0(self, y) -> bool:
        return all(0 <= v <= 1 for v in y) and all(_row_value(row, y) >= HALF for row in self.A)

    def distance_to_p0(self, y) -> Fraction:
        """l1 distance from y to P_0 via min sum t, -t <= x - y <= t, x in P_0."""
        y = tuple(y)
        if y in self._dist_cache:
            return self._dist_cache[y]
        if self.in_p0(y):
            d = ZERO
        else:
            n = self.n
            A, b, rel = [], [], []
            for row in self.A:
                A.append(tuple(row) + (ZERO,) * n)
                b.append(HALF)
                rel.append(">=")
            for i in range(n):
                ex = [ZERO] * (2 * n)
                ex[i] = ONE
                A.append(tuple(ex))
                b.append(ONE)
                rel.append("<=")
                up = [ZERO] * (2 * n)
                up[i], up[n + i] = ONE, -ONE
                A.append(tuple(up))
                b.append(y[i])
                rel.append("<=")
                dn = [ZERO] * (2 * n)
                dn[i], dn[n + i] = ONE, ONE
                A.append(tuple(dn))
                b.append(y[i])
                rel.append(">=")
            c = (ZERO,) * n + (ONE,) * n
            d = simplex_solve(LinearProgram(tuple(A), tuple(b), c, "min", tuple(rel))).value
        self._dist_cache[y] = d
        return d

    def max_distance(self, eps: Fraction) -> Fraction:
        # distance to a convex set is convex, so the max over P_eps sits at a vertex
        return max((self.distance_to_p0(y) for y in self.vertices_at(eps)), default=ZERO)


def estimate_epsilon(T: Tournament, delta, resolution_bits: int = 20) -> Fraction:
    """Largest eps = g / 2^bits (g = 1..2^bits) whose P_eps stays within l1 distance delta of P_0.

    Returns 0 when even the smallest grid step fails.
    """
    check_size("n", T.n, 6)
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    poly = EpsilonPolytope(T)
    scale = 1 << resolution_bits
    ok = lambda g: poly.max_distance(Fraction(g, scale)) <= delta
    if ok(scale):
        return ONE
    lo, hi = 0, scale  # ok(lo) holds (eps=0 is P_0 itself), ok(hi) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return Fraction(lo, scale)
