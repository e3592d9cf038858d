"""Root systems of simply-laced type (A, D, E) and their Weyl groups.

Roots are integer coordinate tuples in the simple-root basis.  Positive
roots are kept in a fixed total order (height, then lexicographic);
signed indices 0..m-1 are the positive roots and m..2m-1 their
negatives.  Weyl elements are stored as permutations of the signed
index set together with the lexicographically least reduced word,
found by breadth-first enumeration from the identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError, ResourceError

RANK_CAP = 6
WEYL_CAP = 60000

_POS_COUNT = {"A": lambda n: n * (n + 1) // 2, "D": lambda n: n * (n - 1), "E": lambda n: 36}


def _adjacency(type_label: str, rank: int) -> set[tuple[int, int]]:
    if type_label == "A":
        if not 1 <= rank <= RANK_CAP:
            raise ConfigError(f"type A supports rank 1..{RANK_CAP}, got {rank}")
        return {(i, i + 1) for i in range(rank - 1)}
    if type_label == "D":
        if not 4 <= rank <= RANK_CAP:
            raise ConfigError(f"type D supports rank 4..{RANK_CAP}, got {rank}")
        edges = {(i, i + 1) for i in range(rank - 2)}
        edges.add((rank - 3, rank - 1))
        return edges
    if type_label == "E":
        if rank != 6:
            raise ConfigError(f"type E supports rank 6 only, got {rank}")
        return {(0, 2), (2, 3), (3, 4), (4, 5), (1, 3)}
    raise ConfigError(f"unsupported type {type_label!r}: expected A, D or E")


class RootSystem:
    """Simply-laced root system with a fixed order on the positive roots."""

    def __init__(self, type_label: str, rank: int):
        self.type_label = type_label
        self.rank = rank
        adj = _adjacency(type_label, rank)
        cartan = [[0] * rank for _ in range(rank)]
        for i in range(rank):
            cartan[i][i] = 2
        for i, j in adj:
            cartan[i][j] = cartan[j][i] = -1
        self.cartan = tuple(tuple(row) for row in cartan)

        simples = [tuple(1 if j == i else 0 for j in range(rank)) for i in range(rank)]
        roots = set(simples) | {tuple(-c for c in r) for r in simples}
        frontier = set(roots)
        while frontier:
            new = set()
            for g in frontier:
                for i in range(rank):
                    r = self._reflect_simple(i, g)
                    if r not in roots:
                        new.add(r)
            roots |= new
            frontier = new
        pos = [r for r in roots if all(c >= 0 for c in r)]
        pos.sort(key=lambda r: (sum(r), r))
        expected = _POS_COUNT[type_label](rank)
        assert len(pos) == expected, (len(pos), expected)
        self.pos_roots = tuple(pos)
        self.npos = len(pos)
        self.heights = tuple(sum(r) for r in pos)
        self._index = {r: i for i, r in enumerate(pos)}
        for i, r in enumerate(pos):
            self._index[tuple(-c for c in r)] = i + self.npos
        self.all_roots = self.pos_roots + tuple(
            tuple(-c for c in r) for r in self.pos_roots
        )
        self.simple_idx = tuple(self._index[s] for s in simples)

    # -- indexing -----------------------------------------------------------
    def index(self, root) -> int:
        try:
            return self._index[tuple(root)]
        except KeyError:
            raise DomainError(f"{root} is not a root of {self}") from None

    def root(self, idx: int):
        return self.all_roots[idx]

    def is_positive(self, idx: int) -> bool:
        return idx < self.npos

    def negate(self, idx: int) -> int:
        return idx + self.npos if idx < self.npos else idx - self.npos

    def height(self, idx: int) -> int:
        return self.heights[idx] if idx < self.npos else -self.heights[idx - self.npos]

    def pairing(self, root, i: int) -> int:
        """<root, alpha_i^vee> via the Cartan matrix."""
        return sum(c * self.cartan[i][j] for j, c in enumerate(root))

    def _reflect_simple(self, i: int, root):
        c = self.pairing(root, i)
        out = list(root)
        out[i] -= c
        return tuple(out)

    def reflect_idx(self, i: int, idx: int) -> int:
        return self._index[self._reflect_simple(i, self.all_roots[idx])]

    def add_roots(self, a: int, b: int) -> int | None:
        """Index of root(a) + root(b), or None if the sum is not a root."""
        s = tuple(x + y for x, y in zip(self.all_roots[a], self.all_roots[b]))
        return self._index.get(s)

    def __repr__(self):
        return f"RootSystem({self.type_label}{self.rank})"

    def __eq__(self, other):
        return isinstance(other, RootSystem) and (self.type_label, self.rank) == (
            other.type_label,
            other.rank,
        )

    def __hash__(self):
        return hash((self.type_label, self.rank))


_SYSTEMS: dict[tuple[str, int], RootSystem] = {}


def build_root_system(type_label: str, rank: int) -> RootSystem:
    key = (type_label, rank)
    if key not in _SYSTEMS:
        _SYSTEMS[key] = RootSystem(type_label, rank)
    return _SYSTEMS[key]


class Weyl:
    """A Weyl group element: signed-root permutation plus canonical word."""

    __slots__ = ("group", "word", "perm", "length", "_hash")

    def __init__(self, group, word, perm):
        self.group = group
        self.word = word
        self.perm = perm
        m = group.system.npos
        self.length = sum(1 for i in range(m) if perm[i] >= m)
        self._hash = hash(perm)

    def act_idx(self, idx: int) -> int:
        return self.perm[idx]

    def act(self, root):
        sys = self.group.system
        return sys.root(self.perm[sys.index(root)])

    def inverse(self) -> "Weyl":
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return self.group.by_perm[tuple(inv)]

    def __mul__(self, other: "Weyl") -> "Weyl":
        perm = tuple(self.perm[j] for j in other.perm)
        return self.group.by_perm[perm]

    def __eq__(self, other):
        return self is other or (isinstance(other, Weyl) and self.perm == other.perm)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.word:
            return "e"
        return "*".join(f"s{i + 1}" for i in self.word)


class WeylGroup:
    """Full enumeration of W with canonical (lex-least reduced) words."""

    def __init__(self, system: RootSystem, cap: int = WEYL_CAP):
        self.system = system
        m2 = 2 * system.npos
        simple_perms = [
            tuple(system.reflect_idx(i, g) for g in range(m2))
            for i in range(system.rank)
        ]
        ident = Weyl(self, (), tuple(range(m2)))
        self.by_perm = {ident.perm: ident}
        self.elements = [ident]
        frontier = [ident]
        while frontier:
            new = []
            for w in frontier:
                for i in range(system.rank):
                    perm = tuple(w.perm[j] for j in simple_perms[i])
                    if perm not in self.by_perm:
                        v = Weyl(self, w.word + (i,), perm)
                        assert v.length == len(v.word)
                        self.by_perm[perm] = v
                        new.append(v)
                        if len(self.by_perm) > cap:
                            raise ResourceError(
                                f"Weyl group of {system} exceeds cap {cap}"
                            )
            frontier = new
            self.elements.extend(new)
        self.identity = ident
        self.simples = [self.by_perm[tuple(p)] for p in simple_perms]
        self.longest = max(self.elements, key=lambda w: w.length)
        assert 2 * self.longest.length == m2 or system.rank == 0

    def element_from_word(self, word) -> Weyl:
        w = self.identity
        for i in word:
            w = w * self.simples[i]
        return w

    def __len__(self):
        return len(self.elements)


_GROUPS: dict[tuple[str, int], WeylGroup] = {}


def weyl_group(system: RootSystem, cap: int = WEYL_CAP) -> WeylGroup:
    key = (system.type_label, system.rank)
    if key not in _GROUPS:
        _GROUPS[key] = WeylGroup(system, cap)
    return _GROUPS[key]


# ---------------------------------------------------------------------------
# operations


def act(w: Weyl, root):
    """w applied to a root (tuple in or signed index into the system)."""
    if isinstance(root, int):
        return w.act_idx(root)
    return w.act(root)


def descents(w: Weyl) -> frozenset[int]:
    """R(w): the simple indices i with l(w s_i) < l(w)."""
    sys = w.group.system
    return frozenset(
        i for i, si in enumerate(sys.simple_idx) if not sys.is_positive(w.perm[si])
    )


def inversion_sets(w: Weyl) -> tuple[frozenset[int], frozenset[int]]:
    """(Phi_w^-, Phi_w^+): positive-root indices sent negative resp. positive."""
    sys = w.group.system
    m = sys.npos
    neg = frozenset(i for i in range(m) if w.perm[i] >= m)
    pos = frozenset(range(m)) - neg
    assert len(neg) == w.length
    return neg, pos


@dataclass(frozen=True)
class ParabolicSubset:
    J: frozenset[int]
    w_J: Weyl
    X_J: tuple[Weyl, ...]
    Y_J: tuple[Weyl, ...]
    W_J: tuple[Weyl, ...] = field(repr=False, default=())


def parabolic_data(group: WeylGroup, J) -> ParabolicSubset:
    J = frozenset(J)
    sys = group.system
    if not J <= set(range(sys.rank)):
        raise DomainError(f"J={sorted(J)} is not a subset of the simple indices")
    members = []
    for w in group.elements:
        inv, _ = inversion_sets(w)
        if all(
            all(sys.pos_roots[g][j] == 0 for j in range(sys.rank) if j not in J)
            for g in inv
        ):
            members.append(w)
    w_J = max(members, key=lambda w: w.length)
    X = tuple(
        sorted(
            (w for w in group.elements if not (descents(w) & J)),
            key=lambda w: (w.length, w.word),
        )
    )
    Y = tuple(w for w in X if descents(w * w_J) == J)
    for x in X:
        assert (x * w_J).length == x.length + w_J.length
    return ParabolicSubset(J, w_J, X, Y, tuple(members))


def poincare_poly(group: WeylGroup) -> dict[int, int]:
    """Coefficients of sum_w q^l(w) as a dict degree -> count."""
    out: dict[int, int] = {}
    for w in group.elements:
        out[w.length] = out.get(w.length, 0) + 1
    return out


def cell_roots(system: RootSystem, v: Weyl) -> tuple[int, ...]:
    """Positive-root indices of Phi_{v}^- in the standard order."""
    m = system.npos
    return tuple(i for i in range(m) if v.perm[i] >= m)
