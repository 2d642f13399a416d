"""Tournament values, generators, canonical forms and the .trn text format.

Teams are 0-based everywhere in the API.  Anything rendered for people
(error messages, .trn comments, CLI tables) uses 1-based labels.

A tournament on ``n`` teams is stored as ``n`` row bitmasks: bit ``j`` of
``rows[i]`` is set iff team ``i`` beats team ``j``.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

MAX_TEAMS = 32


class TournamentError(ValueError):
    """Base class for malformed tournament data."""


class ReflexiveEdge(TournamentError):
    def __init__(self, i: int):
        self.i = i
        super().__init__(f"team {i + 1} is recorded as beating itself")


class IncompleteOrSymmetricPair(TournamentError):
    def __init__(self, i: int, j: int, both: bool):
        self.i, self.j, self.both = i, j, both
        what = "both beat each other" if both else "have no recorded result"
        super().__init__(f"teams {i + 1} and {j + 1} {what}")


class SizeOutOfRange(TournamentError):
    def __init__(self, what: str, value: int, limit: int):
        self.what, self.value, self.limit = what, value, limit
        super().__init__(f"{what}={value} exceeds the limit {limit} "
                         "(set TF_MAX_N to override at your own risk)")


class IndexOutOfRange(TournamentError, IndexError):
    def __init__(self, i: int, n: int):
        self.i, self.n = i, n
        super().__init__(f"team index {i} is not in range for {n} teams")


def size_cap(default: int) -> int:
    """Desk-scale limit, overridable through the TF_MAX_N environment variable."""
    override = os.environ.get("TF_MAX_N")
    return int(override) if override else default


def check_size(what: str, value: int, default_cap: int) -> None:
    cap = size_cap(default_cap)
    if value > cap:
        raise SizeOutOfRange(what, value, cap)


@dataclass(frozen=True)
class Tournament:
    n: int
    rows: tuple[int, ...]

    def beats(self, i: int, j: int) -> bool:
        return bool(self.rows[i] >> j & 1)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def out_mask(self, i: int) -> int:
        return self.rows[i]

    def in_mask(self, i: int) -> int:
        return self.full & ~self.rows[i] & ~(1 << i)

    def out_degree(self, i: int) -> int:
        return bin(self.rows[i]).count("1")

    def scores(self) -> tuple[int, ...]:
        return tuple(bin(r).count("1") for r in self.rows)

    def matrix(self) -> list[list[bool]]:
        return [[self.beats(i, j) for j in range(self.n)] for i in range(self.n)]

    def flip(self, i: int, j: int) -> "Tournament":
        """The tournament with the single match between i and j reversed."""
        rows = list(self.rows)
        bit_i, bit_j = 1 << i, 1 << j
        rows[i] ^= bit_j
        rows[j] ^= bit_i
        return Tournament(self.n, tuple(rows))

    def relabel(self, perm: Sequence[int]) -> "Tournament":
        """Team ``i`` of the result is team ``perm[i]`` of ``self``."""
        n = self.n
        pos = [0] * n
        for new, old in enumerate(perm):
            pos[old] = new
        rows = []
        for new in range(n):
            r = self.rows[perm[new]]
            m = 0
            while r:
                low = r & -r
                m |= 1 << pos[low.bit_length() - 1]
                r ^= low
            rows.append(m)
        return Tournament(n, tuple(rows))

    def subtournament(self, teams: Sequence[int]) -> "Tournament":
        teams = list(teams)
        rows = []
        for a in teams:
            m = 0
            for b_idx, b in enumerate(teams):
                if self.rows[a] >> b & 1:
                    m |= 1 << b_idx
            rows.append(m)
        return Tournament(len(teams), tuple(rows))

    def code(self) -> int:
        """Upper-triangle bit code in pair order (0,1), (0,2), ..., (n-2,n-1)."""
        c = 0
        bit = 0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.rows[i] >> j & 1:
                    c |= 1 << bit
                bit += 1
        return c


def pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def from_code(n: int, code: int) -> Tournament:
    rows = [0] * n
    bit = 0
    for i in range(n):
        for j in range(i + 1, n):
            if code >> bit & 1:
                rows[i] |= 1 << j
            else:
                rows[j] |= 1 << i
            bit += 1
    return Tournament(n, tuple(rows))


def validate(raw) -> Tournament:
    """Build a Tournament from an n x n boolean relation (or a Tournament).

    Raises ReflexiveEdge, IncompleteOrSymmetricPair or SizeOutOfRange.
    """
    if isinstance(raw, Tournament):
        raw = raw.matrix()
    matrix = [list(map(bool, row)) for row in raw]
    n = len(matrix)
    if n < 2 or n > MAX_TEAMS:
        raise SizeOutOfRange("n", n, MAX_TEAMS)
    for i, row in enumerate(matrix):
        if len(row) != n:
            raise TournamentError(f"row {i + 1} has {len(row)} entries, expected {n}")
    rows = []
    for i in range(n):
        if matrix[i][i]:
            raise ReflexiveEdge(i)
        m = 0
        for j in range(n):
            if i != j:
                if matrix[i][j] == matrix[j][i]:
                    a, b = min(i, j), max(i, j)
                    raise IncompleteOrSymmetricPair(a, b, matrix[i][j])
                if matrix[i][j]:
                    m |= 1 << j
        rows.append(m)
    return Tournament(n, tuple(rows))


def from_edges(n: int, edges: Iterable[tuple[int, int]], default_lower_wins: bool = True) -> Tournament:
    """Tournament from (winner, loser) pairs; unlisted matches go to the lower index."""
    decided = {}
    for w, l in edges:
        decided[frozenset((w, l))] = (w, l)
    matrix = [[False] * n for _ in range(n)]
    for i, j in pairs(n):
        w, l = decided.get(frozenset((i, j)), (i, j) if default_lower_wins else (j, i))
        matrix[w][l] = True
    return validate(matrix)


def members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def to_mask(teams: Iterable[int]) -> int:
    m = 0
    for t in teams:
        m |= 1 << t
    return m


def _check_index(T: Tournament, i: int) -> None:
    if not 0 <= i < T.n:
        raise IndexOutOfRange(i, T.n)


def out_neighborhood(T: Tournament, i: int) -> frozenset[int]:
    _check_index(T, i)
    return frozenset(members(T.out_mask(i)))


def in_neighborhood(T: Tournament, i: int) -> frozenset[int]:
    _check_index(T, i)
    return frozenset(members(T.in_mask(i)))


def coalition(T: Tournament, teams: Iterable[int]) -> frozenset[int]:
    """Validated coalition: nonempty, no duplicates, every index in range."""
    teams = list(teams)
    if not teams:
        raise TournamentError("a coalition needs at least one team")
    if len(set(teams)) != len(teams):
        raise TournamentError(f"duplicate team in coalition {sorted(t + 1 for t in teams)}")
    for t in teams:
        _check_index(T, t)
    return frozenset(teams)


# ---------------------------------------------------------------- generators

def gen_balanced(k: int) -> Tournament:
    """The k-balanced tournament: 2k-1 teams, i beats i+1, ..., i+k-1 (mod 2k-1)."""
    if k < 2:
        raise TournamentError("balanced tournaments need k >= 2")
    n = 2 * k - 1
    if n > MAX_TEAMS:
        raise SizeOutOfRange("2k-1", n, MAX_TEAMS)
    rows = tuple(to_mask((i + d) % n for d in range(1, k)) for i in range(n))
    return Tournament(n, rows)


def gen_kryptonite(n: int, inner: Tournament | None = None) -> Tournament:
    """Superman (team 0) beats all but the kryptonite (team n-1), who loses to the rest.

    ``inner`` fixes the matches among teams 1..n-2 (relabelled 0..n-3); when
    omitted the lower index wins.
    """
    if n < 3:
        raise TournamentError("kryptonite tournaments need n >= 3")
    if n > MAX_TEAMS:
        raise SizeOutOfRange("n", n, MAX_TEAMS)
    m = n - 2
    if inner is not None and inner.n != m:
        raise TournamentError(f"inner tournament has {inner.n} teams, expected {m}")
    edges = [(0, j) for j in range(1, n - 1)] + [(n - 1, 0)]
    edges += [(j, n - 1) for j in range(1, n - 1)]
    for a, b in pairs(m):
        if inner is None or inner.beats(a, b):
            edges.append((a + 1, b + 1))
        else:
            edges.append((b + 1, a + 1))
    return from_edges(n, edges)


RSEB_COVER_LABELS = "ABCDEFGH"


def gen_rseb_cover_example() -> Tournament:
    """Eight teams A..H in which H covers A yet A can win a seeded bracket."""
    A, B, C, D, E, F, G, H = range(8)
    edges = [(A, x) for x in (B, C, E)] + [(x, A) for x in (D, F, G, H)]
    edges += [(H, x) for x in (B, C, E)] + [(x, H) for x in (D, F, G)]
    edges += [(C, D), (E, F), (E, G)]
    return from_edges(8, edges)


def gen_random(n: int, seed: int) -> Tournament:
    rng = random.Random(seed)
    return from_code(n, rng.getrandbits(n * (n - 1) // 2))


def transitive(n: int) -> Tournament:
    """Team i beats every j > i."""
    return Tournament(n, tuple(((1 << n) - 1) & ~((1 << (i + 1)) - 1) for i in range(n)))


# ----------------------------------------------------------- canonical forms

def _refine(T: Tournament) -> list[int]:
    """Isomorphism-invariant vertex colouring (iterated score refinement)."""
    n = T.n
    colour = list(T.scores())
    while True:
        sigs = [(colour[v], tuple(sorted(colour[u] for u in members(T.rows[v]))))
                for v in range(n)]
        # descending so strong teams get low positions
        ranked = {s: r for r, s in enumerate(sorted(set(sigs), reverse=True))}
        new = [ranked[s] for s in sigs]
        if len(set(new)) == len(set(colour)):
            return new
        colour = new


def canonical_labeling(T: Tournament) -> tuple[bytes, tuple[int, ...]]:
    """Return (key, order) with ``T.relabel(order)`` the canonical representative.

    The key is the lexicographically largest column-major bit string over all
    relabelings that respect the refined colour classes; refinement is
    isomorphism invariant, so equal keys iff isomorphic.
    """
    n = T.n
    colour = _refine(T)
    slots = sorted(range(n), key=lambda v: colour[v])
    slot_colour = [colour[v] for v in slots]
    rows = T.rows
    partial: list[tuple[int, ...]] = [()]
    for b in range(n):
        want = slot_colour[b]
        best = -1
        nxt = []
        for chosen in partial:
            used = set(chosen)
            for v in range(n):
                if colour[v] != want or v in used:
                    continue
                col = 0
                for a in chosen:
                    col = col << 1 | (rows[a] >> v & 1)
                if col > best:
                    best = col
                    nxt = [chosen + (v,)]
                elif col == best:
                    nxt.append(chosen + (v,))
        partial = nxt
    order = partial[0]
    canon = T.relabel(order)
    bits = 0
    for j in range(1, n):
        for i in range(j):
            bits = bits << 1 | (canon.rows[i] >> j & 1)
    nbytes = max(1, (n * (n - 1) // 2 + 7) // 8)
    return bytes([n]) + bits.to_bytes(nbytes, "big"), order


def canonical_form(T: Tournament) -> bytes:
    check_size("n", T.n, 10)
    return canonical_labeling(T)[0]


def canonical_representative(T: Tournament) -> Tournament:
    key, order = canonical_labeling(T)
    return T.relabel(order)


# ---------------------------------------------------------------- enumeration

def enumerate_tournaments(n: int, canonical_only: bool = False) -> Iterator[Tournament]:
    """All labeled n-team tournaments, or one canonical representative per class.

    Representatives come out sorted by canonical key (deterministic order).
    """
    if n < 2:
        raise TournamentError("tournaments need at least two teams")
    if canonical_only:
        check_size("n", n, 7)
        yield from (T for _, T in _canonical_classes(n))
        return
    check_size("n", n, 6)
    for code in range(1 << (n * (n - 1) // 2)):
        yield from_code(n, code)


_CLASSES: dict[int, list[tuple[bytes, Tournament]]] = {}


def _canonical_classes(n: int) -> list[tuple[bytes, Tournament]]:
    # every n-tournament is an (n-1)-tournament plus one vertex, so growing
    # representatives one team at a time reaches every class
    if n in _CLASSES:
        return _CLASSES[n]
    found: dict[bytes, Tournament] = {}
    if n == 2:
        T = transitive(2)
        found[canonical_labeling(T)[0]] = T
    else:
        for base in (T for _, T in _canonical_classes(n - 1)):
            for pattern in range(1 << (n - 1)):
                rows = [r | ((pattern >> i & 1) << (n - 1)) for i, r in enumerate(base.rows)]
                rows.append(~pattern & ((1 << (n - 1)) - 1))
                T = Tournament(n, tuple(rows))
                key, order = canonical_labeling(T)
                if key not in found:
                    found[key] = T.relabel(order)
    _CLASSES[n] = sorted(found.items())
    return _CLASSES[n]


def count_labeled(n: int) -> int:
    return 1 << (n * (n - 1) // 2)


# ---------------------------------------------------------------- text formats

def to_trn(T: Tournament) -> str:
    lines = [str(T.n)]
    for i in range(T.n):
        lines.append("".join("-" if i == j else ("1" if T.beats(i, j) else "0")
                             for j in range(T.n)))
    return "\n".join(lines) + "\n"


def parse_trn(text: str) -> Tournament:
    """Parse the .trn format; both tournament invariants are checked bit-exactly."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise TournamentError("empty .trn data")
    try:
        n = int(lines[0])
    except ValueError:
        raise TournamentError(f"first line must be the team count, got {lines[0]!r}") from None
    if n < 2 or n > MAX_TEAMS:
        raise SizeOutOfRange("n", n, MAX_TEAMS)
    body = lines[1:]
    if len(body) != n:
        raise TournamentError(f"expected {n} relation lines, found {len(body)}")
    matrix = []
    for i, line in enumerate(body):
        if len(line) != n:
            raise TournamentError(f"line {i + 2} has {len(line)} characters, expected {n}")
        row = []
        for j, ch in enumerate(line):
            if ch == "-":
                if i != j:
                    raise TournamentError(f"'-' off the diagonal at row {i + 1}, column {j + 1}")
                row.append(False)
            elif ch in "01":
                if i == j:
                    if ch == "1":
                        raise ReflexiveEdge(i)
                    raise TournamentError(f"diagonal entry of row {i + 1} must be '-'")
                row.append(ch == "1")
            else:
                raise TournamentError(f"bad character {ch!r} at row {i + 1}, column {j + 1}")
        matrix.append(row)
    return validate(matrix)


def read_trn(path) -> Tournament:
    with open(path) as fh:
        return parse_trn(fh.read())


def write_trn(T: Tournament, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_trn(T))


def to_json(T: Tournament) -> str:
    return json.dumps({"n": T.n, "beats": T.matrix()})


def from_json(text: str) -> Tournament:
    data = json.loads(text)
    T = validate(data["beats"])
    if T.n != data["n"]:
        raise TournamentError(f"declared n={data['n']} but relation has {T.n} rows")
    return T
