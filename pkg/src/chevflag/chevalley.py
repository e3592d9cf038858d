"""Exact group calculus in simply-laced Chevalley groups over GF(q).

Unipotent elements are canonical ordered products of root elements;
multiplication is commutator collection driven by a structure-constant
table.  The table (commutator signs and Weyl-conjugation signs) is read
off a faithful matrix model: SL(n+1) for type A, and integral
exponentials in the adjoint representation of a cocycle-signed
Chevalley basis for types D and E.  Tables are cached to disk with a
hash stamp.

Conventions fixed here and recorded in every cache file:
  * positive roots ordered by (height, lexicographic coordinates);
  * Weyl representatives  n_i = x_i(1) x_{-i}(-1) x_i(1),  and
    w-dot = n_{i1} ... n_{ik} along the canonical reduced word;
  * torus elements are coordinate vectors along the simple coroots
    (simply connected form).
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .errors import ConfigError, DomainError, ResourceError, UnsupportedOracle
from .fields import FiniteField, GFq
from .rootsys import RootSystem, Weyl, WeylGroup, weyl_group

TABLE_VERSION = 1
COLLECT_GUARD = 200000

# ---------------------------------------------------------------------------
# small exact matrix helpers


def _imat_id(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _imat_mul(A, B):
    n = len(A)
    m = len(B[0])
    k = len(B)
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for t in range(k):
            a = Ai[t]
            if a:
                Bt = B[t]
                Oi = out[i]
                for j in range(m):
                    Oi[j] += a * Bt[j]
    return out


def fmat_id(F, n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def fmat_mul(F, A, B):
    n = len(A)
    m = len(B[0])
    k = len(B)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = 0
            for t in range(k):
                a = A[i][t]
                if a:
                    s = F.add(s, F.mul(a, B[t][j]))
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def fmat_det2(F, A):
    return F.sub(F.mul(A[0][0], A[1][1]), F.mul(A[0][1], A[1][0]))


# ---------------------------------------------------------------------------
# matrix engines


class TypeAEngine:
    """SL(n+1): x_{e_i - e_j}(c) = I + c E_ij."""

    def __init__(self, system: RootSystem):
        if system.type_label != "A":
            raise UnsupportedOracle("matrix oracle: type A only")
        self.system = system
        self.dim = system.rank + 1
        self._pairs = {}
        for g, root in enumerate(system.pos_roots):
            ones = [i for i, c in enumerate(root) if c]
            assert all(c == 1 for c in root if c)
            i, j = ones[0], ones[-1] + 1
            self._pairs[g] = (i, j)
            self._pairs[g + system.npos] = (j, i)

    def x_int(self, g, c):
        i, j = self._pairs[g]
        M = _imat_id(self.dim)
        M[i][j] = c
        return M

    def n_int(self, i):
        sys = self.system
        a = sys.simple_idx[i]
        na = sys.negate(a)
        return _imat_mul(_imat_mul(self.x_int(a, 1), self.x_int(na, -1)), self.x_int(a, 1))

    def n_inv_int(self, i):
        sys = self.system
        a = sys.simple_idx[i]
        na = sys.negate(a)
        return _imat_mul(_imat_mul(self.x_int(a, -1), self.x_int(na, 1)), self.x_int(a, -1))

    def torus_int(self, values):
        # values are +-1 only in integer mode
        d = [1] * self.dim
        for j, t in enumerate(values):
            d[j] *= t
            d[j + 1] //= t
        M = _imat_id(self.dim)
        for r in range(self.dim):
            M[r][r] = d[r]
        return M

    # field-valued atoms ---------------------------------------------------
    def x_field(self, F, g, c):
        i, j = self._pairs[g]
        M = [list(r) for r in fmat_id(F, self.dim)]
        M[i][j] = c
        return tuple(tuple(r) for r in M)

    def n_field(self, F, i):
        sys = self.system
        a = sys.simple_idx[i]
        na = sys.negate(a)
        one = F.one
        m1 = F.neg(one)
        M = fmat_mul(F, self.x_field(F, a, one), self.x_field(F, na, m1))
        return fmat_mul(F, M, self.x_field(F, a, one))

    def torus_field(self, F, values):
        d = [F.one] * self.dim
        for j, t in enumerate(values):
            d[j] = F.mul(d[j], t)
            d[j + 1] = F.mul(d[j + 1], F.inv(t))
        return tuple(
            tuple(d[r] if r == s else 0 for s in range(self.dim)) for r in range(self.dim)
        )


class AdjointEngine:
    """Integral adjoint representation of the cocycle-signed Chevalley basis.

    Basis order: e_gamma for positive gamma (standard order), then
    h_1..h_n, then e_gamma for negative gamma.  Bracket rules:
      [h_i, e_g] = <g, a_i^vee> e_g,   [e_g, e_-g] = -h_g,
      [e_g, e_d] = eps(g, d) e_{g+d}  when g+d is a root,
    with eps the bimultiplicative sign cocycle on the root lattice.
    The full Jacobi identity is verified before a table is cached.
    """

    def __init__(self, system: RootSystem):
        self.system = system
        n = system.rank
        m = system.npos
        self.dim = 2 * m + n
        neg = [[False] * n for _ in range(n)]
        for i in range(n):
            neg[i][i] = True
            for j in range(i + 1, n):
                if system.cartan[i][j] == -1:
                    neg[i][j] = True
        self._eps_neg = neg
        self._brackets = {}
        for a in range(self.dim):
            for b in range(self.dim):
                self._brackets[(a, b)] = self._bracket(a, b)
        self._check_jacobi()
        self._admats = [self._ad(a) for a in range(self.dim)]

    # basis index helpers ---------------------------------------------------
    def _b_of_root(self, g):
        m, n = self.system.npos, self.system.rank
        return g if g < m else m + n + (g - m)

    def _root_of_b(self, b):
        m, n = self.system.npos, self.system.rank
        if b < m:
            return b
        if b >= m + n:
            return m + (b - m - n)
        return None

    def eps(self, groot, droot) -> int:
        e = 0
        for i, gi in enumerate(groot):
            if gi:
                for j, dj in enumerate(droot):
                    if dj and self._eps_neg[i][j]:
                        e += gi * dj
        return -1 if e % 2 else 1

    def _bracket(self, a, b) -> dict[int, int]:
        sys = self.system
        m, n = sys.npos, sys.rank
        ra, rb = self._root_of_b(a), self._root_of_b(b)
        if ra is None and rb is None:
            return {}
        if ra is None:  # a = h_i
            i = a - m
            coef = sys.pairing(sys.root(rb), i)
            return {b: coef} if coef else {}
        if rb is None:
            i = b - m
            coef = -sys.pairing(sys.root(ra), i)
            return {a: coef} if coef else {}
        groot, droot = sys.root(ra), sys.root(rb)
        if rb == sys.negate(ra):
            out = {}
            for i, c in enumerate(groot):
                if c:
                    out[m + i] = -c
            return out
        s = sys.add_roots(ra, rb)
        if s is None:
            return {}
        return {self._b_of_root(s): self.eps(groot, droot)}

    def _check_jacobi(self):
        br = self._brackets

        def mergebr(vec: dict[int, int], sign: int, out: dict[int, int]):
            for d, cd in vec.items():
                pass

        dim = self.dim
        for a in range(dim):
            for b in range(a + 1, dim):
                ab = br[(a, b)]
                for c in range(b + 1, dim):
                    acc: dict[int, int] = {}
                    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                        for d, cd in br[(x, y)].items():
                            for e2, ce in br[(d, z)].items():
                                v = acc.get(e2, 0) + cd * ce
                                if v:
                                    acc[e2] = v
                                else:
                                    acc.pop(e2, None)
                    assert not acc, f"Jacobi fails on basis triple {(a, b, c)}"

    def _ad(self, a):
        M = [[0] * self.dim for _ in range(self.dim)]
        for b in range(self.dim):
            for c, coef in self._brackets[(a, b)].items():
                M[c][b] = coef
        return M

    def _gen_ad(self, g):
        """ad of the pinning generator for signed root g (f = -e_{-g})."""
        b = self._b_of_root(g)
        A = self._admats[b]
        if g < self.system.npos:
            return A
        return [[-x for x in row] for row in A]

    def x_int(self, g, c):
        A = self._gen_ad(g)
        A2 = _imat_mul(A, A)
        A3 = _imat_mul(A2, A)
        assert all(all(x == 0 for x in row) for row in A3), "generator not 3-step nilpotent"
        n = self.dim
        out = _imat_id(n)
        for i in range(n):
            for j in range(n):
                assert A2[i][j] % 2 == 0
                out[i][j] += c * A[i][j] + c * c * (A2[i][j] // 2)
        return out

    def n_int(self, i):
        sys = self.system
        a = sys.simple_idx[i]
        na = sys.negate(a)
        return _imat_mul(_imat_mul(self.x_int(a, 1), self.x_int(na, -1)), self.x_int(a, 1))

    def n_inv_int(self, i):
        sys = self.system
        a = sys.simple_idx[i]
        na = sys.negate(a)
        return _imat_mul(_imat_mul(self.x_int(a, -1), self.x_int(na, 1)), self.x_int(a, -1))

    def torus_int(self, values):
        sys = self.system
        n = self.dim
        M = _imat_id(n)
        for b in range(n):
            r = self._root_of_b(b)
            if r is None:
                continue
            root = sys.root(r)
            t = 1
            for j, v in enumerate(values):
                if v == -1 and sys.pairing(root, j) % 2:
                    t = -t
            M[b][b] = t
        return M

    # field-valued atoms ----------------------------------------------------
    def x_field(self, F, g, c):
        A = self._gen_ad(g)
        n = self.dim
        c2 = F.mul(c, c)
        out = []
        A2 = _imat_mul(A, A)
        for i in range(n):
            row = []
            for j in range(n):
                v = 1 if i == j else 0
                v = F.add(v, F.mul(c, A[i][j] % F.p))
                v = F.add(v, F.mul(c2, (A2[i][j] // 2) % F.p))
                row.append(v)
            out.append(tuple(row))
        return tuple(out)

    def n_field(self, F, i):
        sys = self.system
        a = sys.simple_idx[i]
        na = sys.negate(a)
        one = F.one
        m1 = F.neg(one)
        M = fmat_mul(F, self.x_field(F, a, one), self.x_field(F, na, m1))
        return fmat_mul(F, M, self.x_field(F, a, one))

    def torus_field(self, F, values):
        sys = self.system
        n = self.dim
        rows = []
        for b in range(n):
            r = self._root_of_b(b)
            t = F.one
            if r is not None:
                root = sys.root(r)
                for j, v in enumerate(values):
                    e = sys.pairing(root, j)
                    if e:
                        t = F.mul(t, F.pw(v, e % (F.q - 1) or (F.q - 1)))
            rows.append(tuple(t if b == s else 0 for s in range(n)))
        return tuple(rows)


def engine_for(system: RootSystem):
    if system.type_label == "A":
        return TypeAEngine(system)
    return AdjointEngine(system)


# ---------------------------------------------------------------------------
# structure-constant table


def _order_hash(system: RootSystem) -> str:
    payload = json.dumps([list(r) for r in system.pos_roots])
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class StructureTable:
    """Signs c_{ab} for [x_a, x_b] = x_{a+b}(c_{ab} a b) and eta_{i,g} for
    n_i x_g(c) n_i^{-1} = x_{s_i g}(eta_{i,g} c), plus n_i^2 torus data."""

    def __init__(self, system: RootSystem, comm, eta, order_hash):
        self.system = system
        self.comm = comm
        self.eta = eta
        self.order_hash = order_hash

    @classmethod
    def build(cls, system: RootSystem) -> "StructureTable":
        eng = engine_for(system)
        m = system.npos

        def match_sign(M, g):
            plus = eng.x_int(g, 1)
            if M == plus:
                return 1
            if M == eng.x_int(g, -1):
                return -1
            raise AssertionError(f"engine result is not x_{g}(+-1)")

        comm = {}
        for a in range(m):
            for b in range(m):
                if a == b:
                    continue
                s = system.add_roots(a, b)
                if s is None:
                    continue
                xa, xb = eng.x_int(a, 1), eng.x_int(b, 1)
                xai, xbi = eng.x_int(a, -1), eng.x_int(b, -1)
                M = _imat_mul(_imat_mul(xa, xb), _imat_mul(xai, xbi))
                comm[(a, b)] = match_sign(M, s)

        eta = {}
        nmats = [eng.n_int(i) for i in range(system.rank)]
        nim = [eng.n_inv_int(i) for i in range(system.rank)]
        for i in range(system.rank):
            for g in range(2 * m):
                M = _imat_mul(_imat_mul(nmats[i], eng.x_int(g, 1)), nim[i])
                eta[(i, g)] = match_sign(M, system.reflect_idx(i, g))

        # sanity: braid relations and n_i^2 = alpha_i^vee(-1)
        for i in range(system.rank):
            for j in range(i + 1, system.rank):
                if system.cartan[i][j] == -1:
                    assert _imat_mul(_imat_mul(nmats[i], nmats[j]), nmats[i]) == _imat_mul(
                        _imat_mul(nmats[j], nmats[i]), nmats[j]
                    )
                else:
                    assert _imat_mul(nmats[i], nmats[j]) == _imat_mul(nmats[j], nmats[i])
            values = [1] * system.rank
            values[i] = -1
            assert _imat_mul(nmats[i], nmats[i]) == eng.torus_int(values)

        return cls(system, comm, eta, _order_hash(system))

    # -- cache --------------------------------------------------------------
    def payload(self) -> dict:
        return {
            "version": TABLE_VERSION,
            "type": self.system.type_label,
            "rank": self.system.rank,
            "order_hash": self.order_hash,
            "comm": {f"{a},{b}": s for (a, b), s in sorted(self.comm.items())},
            "eta": {f"{i},{g}": s for (i, g), s in sorted(self.eta.items())},
        }

    def stamped_json(self) -> str:
        payload = self.payload()
        body = json.dumps(payload, sort_keys=True)
        sha = hashlib.sha256(body.encode()).hexdigest()
        return json.dumps({"sha256": sha, "table": payload}, sort_keys=True)

    @classmethod
    def from_stamped_json(cls, system: RootSystem, text: str) -> "StructureTable":
        doc = json.loads(text)
        body = json.dumps(doc["table"], sort_keys=True)
        if hashlib.sha256(body.encode()).hexdigest() != doc["sha256"]:
            raise ConfigError("structure-constant cache failed its hash check")
        t = doc["table"]
        if (
            t["version"] != TABLE_VERSION
            or t["type"] != system.type_label
            or t["rank"] != system.rank
            or t["order_hash"] != _order_hash(system)
        ):
            raise ConfigError("structure-constant cache does not match this system")
        comm = {tuple(map(int, k.split(","))): v for k, v in t["comm"].items()}
        eta = {tuple(map(int, k.split(","))): v for k, v in t["eta"].items()}
        return cls(system, comm, eta, t["order_hash"])


def default_cache_dir() -> Path:
    env = os.environ.get("CHEVFLAG_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "chevflag"


_TABLES: dict[tuple[str, int], StructureTable] = {}


def structure_table(system: RootSystem, cache_dir: Path | None = None) -> StructureTable:
    key = (system.type_label, system.rank)
    if key in _TABLES:
        return _TABLES[key]
    cdir = cache_dir or default_cache_dir()
    path = cdir / (
        f"constants-{system.type_label}{system.rank}"
        f"-v{TABLE_VERSION}-{_order_hash(system)}.json"
    )
    table = None
    if path.exists():
        try:
            table = StructureTable.from_stamped_json(system, path.read_text())
        except (ConfigError, KeyError, json.JSONDecodeError):
            table = None
    if table is None:
        table = StructureTable.build(system)
        try:
            cdir.mkdir(parents=True, exist_ok=True)
            path.write_text(table.stamped_json())
        except OSError:
            pass
    _TABLES[key] = table
    return table


# ---------------------------------------------------------------------------
# group elements


class UnipotentElement:
    """Canonical ordered product of positive root elements."""

    __slots__ = ("ctx", "coords")

    def __init__(self, ctx: "Chevalley", coords):
        self.ctx = ctx
        self.coords = tuple(coords)

    @property
    def is_id(self):
        return not self.coords

    def coeff(self, g: int) -> int:
        for r, c in self.coords:
            if r == g:
                return c
        return 0

    def support(self):
        return tuple(r for r, _ in self.coords)

    def as_dict(self):
        return dict(self.coords)

    def __mul__(self, other: "UnipotentElement") -> "UnipotentElement":
        if self.ctx is not other.ctx:
            raise DomainError("unipotent elements from different contexts")
        return UnipotentElement(
            self.ctx, self.ctx.collect(self.coords + other.coords)
        )

    def inverse(self) -> "UnipotentElement":
        F = self.ctx.field
        rev = [(r, F.neg(c)) for r, c in reversed(self.coords)]
        return UnipotentElement(self.ctx, self.ctx.collect(rev))

    def __eq__(self, other):
        return (
            isinstance(other, UnipotentElement)
            and self.ctx is other.ctx
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        if not self.coords:
            return "u[id]"
        sys = self.ctx.system
        return "*".join(f"x{list(sys.root(r))}({c})" for r, c in self.coords)


class TorusElement:
    """Coordinates along the simple coroots: t = prod_i a_i^vee(t_i)."""

    __slots__ = ("ctx", "values")

    def __init__(self, ctx: "Chevalley", values):
        values = tuple(values)
        if len(values) != ctx.system.rank or any(v == 0 for v in values):
            raise DomainError("torus coordinates must be rank-many units")
        self.ctx = ctx
        self.values = values

    @property
    def is_id(self):
        return all(v == 1 for v in self.values)

    def alpha_eval(self, g: int) -> int:
        """Value of the root with signed index g on this torus element."""
        sys, F = self.ctx.system, self.ctx.field
        root = sys.root(g)
        out = F.one
        for j, t in enumerate(self.values):
            e = sys.pairing(root, j)
            if e:
                out = F.mul(out, F.pw(t, e % (F.q - 1) or (F.q - 1)))
        return out

    def __mul__(self, other: "TorusElement") -> "TorusElement":
        F = self.ctx.field
        return TorusElement(
            self.ctx, (F.mul(a, b) for a, b in zip(self.values, other.values))
        )

    def inverse(self) -> "TorusElement":
        F = self.ctx.field
        return TorusElement(self.ctx, (F.inv(a) for a in self.values))

    def __eq__(self, other):
        return (
            isinstance(other, TorusElement)
            and self.ctx is other.ctx
            and self.values == other.values
        )

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return f"t{self.values}"


class Chevalley:
    """Bundles a root system, its structure table and a coordinate field."""

    def __init__(self, system: RootSystem, field: FiniteField, cache_dir=None):
        self.system = system
        self.field = field
        self.table = structure_table(system, cache_dir)
        self.group = weyl_group(system)
        self._std_pos = {g: g for g in range(system.npos)}

    # -- constructors --------------------------------------------------------
    def unipotent(self, items) -> UnipotentElement:
        if isinstance(items, dict):
            items = sorted(items.items())
        return UnipotentElement(self, self.collect(list(items)))

    def root_elt(self, g: int, c: int) -> UnipotentElement:
        if g >= self.system.npos:
            raise DomainError("root_elt builds positive-root elements only")
        return UnipotentElement(self, self.collect([(g, c)]))

    def id_u(self) -> UnipotentElement:
        return UnipotentElement(self, ())

    def torus(self, values) -> TorusElement:
        return TorusElement(self, values)

    def torus_id(self) -> TorusElement:
        return TorusElement(self, (self.field.one,) * self.system.rank)

    def simple_root_idx(self, i: int) -> int:
        return self.system.simple_idx[i]

    # -- collection ------------------------------------------------------------
    def collect(self, factors, pos_of=None):
        """Collect a factor list into canonical order (or the order given
        by pos_of: root index -> position)."""
        sys, F = self.system, self.field
        if pos_of is None:
            pos_of = self._std_pos
        items = [(g, c) for g, c in factors if c]
        for g, _ in items:
            if g >= sys.npos:
                raise DomainError("collection handles positive roots only")
        i = 0
        steps = 0
        while i < len(items) - 1 if items else False:
            steps += 1
            if steps > COLLECT_GUARD:
                raise ResourceError("collection failed to terminate within guard")
            (a, ca), (b, cb) = items[i], items[i + 1]
            if a == b:
                c = F.add(ca, cb)
                items[i : i + 2] = [(a, c)] if c else []
                i = max(i - 1, 0)
            elif pos_of[a] > pos_of[b]:
                repl = [(b, cb), (a, ca)]
                s = sys.add_roots(a, b)
                if s is not None:
                    sign = self.table.comm[(a, b)]
                    cv = F.mul(ca, cb)
                    if sign < 0:
                        cv = F.neg(cv)
                    repl = [(s, cv)] + repl
                items[i : i + 2] = repl
                i = max(i - 1, 0)
            else:
                i += 1
        return tuple(items)

    def recollect(self, u: UnipotentElement, order) -> tuple:
        """Factors of u in the total order given as a sequence of root indices."""
        pos_of = {g: p for p, g in enumerate(order)}
        if len(pos_of) != self.system.npos:
            raise DomainError("order must be a permutation of the positive roots")
        return self.collect(list(u.coords), pos_of)

    def split_first(self, u: UnipotentElement, first_roots):
        """u = head * tail with head supported on first_roots (in standard
        order) and tail on the complement."""
        first = [g for g in range(self.system.npos) if g in set(first_roots)]
        rest = [g for g in range(self.system.npos) if g not in set(first_roots)]
        order = first + rest
        fac = self.recollect(u, order)
        fs = set(first)
        head = tuple((g, c) for g, c in fac if g in fs)
        tail = tuple((g, c) for g, c in fac if g not in fs)
        return UnipotentElement(self, head), UnipotentElement(self, tail)

    # -- conjugation -------------------------------------------------------------
    def conj_root(self, w: Weyl, g: int, c: int):
        """(g', c') with  w-dot x_g(c) w-dot^{-1} = x_{g'}(c')."""
        eta = self.table.eta
        for i in reversed(w.word):
            c = c if eta[(i, g)] > 0 else self.field.neg(c)
            g = self.system.reflect_idx(i, g)
        return g, c

    def conj_by_weyl(self, w: Weyl, u: UnipotentElement) -> UnipotentElement:
        out = []
        for g, c in u.coords:
            g2, c2 = self.conj_root(w, g, c)
            if g2 >= self.system.npos:
                raise DomainError(
                    "conjugation leaves the unipotent radical; "
                    "reduce at the flag level instead"
                )
            out.append((g2, c2))
        return UnipotentElement(self, self.collect(out))

    def conj_by_torus(self, t: TorusElement, u: UnipotentElement) -> UnipotentElement:
        F = self.field
        return UnipotentElement(
            self, tuple((g, F.mul(t.alpha_eval(g), c)) for g, c in u.coords)
        )

    # -- rank-1 decomposition ------------------------------------------------------
    def sl2_decompose(self, i: int, c: int):
        """n_i x_i(c) n_i^{-1} = f n_i h g  with f = g = x_i(-1/c), h = a_i^vee(c)."""
        if c == 0:
            raise DomainError("sl2 decomposition is defined away from the identity")
        F = self.field
        d = F.neg(F.inv(c))
        a = self.system.simple_idx[i]
        f = self.root_elt(a, d)
        values = [F.one] * self.system.rank
        values[i] = c
        return f, TorusElement(self, values), self.root_elt(a, d)

    def sl2_decompose_nun(self, i: int, c: int):
        """n_i x_i(c) n_i = f h n_i g  with f = g = x_i(-1/c), h = a_i^vee(-1/c)."""
        if c == 0:
            raise DomainError("sl2 decomposition is defined away from the identity")
        F = self.field
        d = F.neg(F.inv(c))
        a = self.system.simple_idx[i]
        values = [F.one] * self.system.rank
        values[i] = d
        return self.root_elt(a, d), TorusElement(self, values), self.root_elt(a, d)

    # -- factorization ---------------------------------------------------------------
    def factor_rel(self, u: UnipotentElement, v_roots):
        """(a, b) and (b', a') with u = a b = b' a', b, b' in the ordered
        product over v_roots and a, a' in the complement product."""
        vset = set(v_roots)
        for g in vset:
            for h in vset:
                s = self.system.add_roots(g, h)
                if s is not None and s < self.system.npos and s not in vset:
                    raise DomainError(
                        "v_roots is not closed under root addition: "
                        f"{self.system.root(g)} + {self.system.root(h)}"
                    )
        comp = [g for g in range(self.system.npos) if g not in vset]
        vlist = [g for g in range(self.system.npos) if g in vset]
        fac1 = self.recollect(u, comp + vlist)
        a = UnipotentElement(self, tuple(x for x in fac1 if x[0] not in vset))
        b = UnipotentElement(self, tuple(x for x in fac1 if x[0] in vset))
        fac2 = self.recollect(u, vlist + comp)
        b2 = UnipotentElement(self, tuple(x for x in fac2 if x[0] in vset))
        a2 = UnipotentElement(self, tuple(x for x in fac2 if x[0] not in vset))
        return (a, b), (b2, a2)

    # -- words and the type-A matrix oracle ----------------------------------------
    def word_of_unipotent(self, u: UnipotentElement):
        return [("r", g, c) for g, c in u.coords]

    def word_of_root(self, g: int, c: int):
        """Atoms for x_g(c), expanding negative-root elements through
        Weyl representatives."""
        sys = self.system
        if c == 0:
            return []
        if g < sys.npos:
            return [("r", g, c)]
        # negative root: pull toward -alpha_i, then flip through n_i
        root = sys.root(g)
        for i in range(sys.rank):
            if sys.pairing(root, i) < 0 and sys.negate(g) != sys.simple_idx[i]:
                g2 = sys.reflect_idx(i, g)
                sign = self.table.eta[(i, g2)]
                c2 = c if sign > 0 else self.field.neg(c)
                return [("s", i)] + self.word_of_root(g2, c2) + self.si_inv_word(i)
        # g = -alpha_i
        i = sys.root(sys.negate(g)).index(1)
        a = sys.simple_idx[i]
        sign = self.table.eta[(i, a)]
        c2 = c if sign > 0 else self.field.neg(c)
        return [("s", i), ("r", a, c2)] + self.si_inv_word(i)

    def si_inv_word(self, i: int):
        """n_i^{-1} = a_i^vee(-1) n_i."""
        F = self.field
        values = [F.one] * self.system.rank
        values[i] = F.neg(F.one)
        return [("t", tuple(values)), ("s", i)]

    def word_of_weyl(self, w: Weyl):
        return [("s", i) for i in w.word]

    def word_inverse(self, word):
        F = self.field
        out = []
        for atom in reversed(word):
            if atom[0] == "r":
                out.append(("r", atom[1], F.neg(atom[2])))
            elif atom[0] == "s":
                out.extend(self.si_inv_word(atom[1]))
            else:
                out.append(("t", tuple(F.inv(v) for v in atom[1])))
        return out

    def to_matrix(self, word):
        """(n+1)x(n+1) matrix over GF(q) of a group word; type A only."""
        if self.system.type_label != "A":
            raise UnsupportedOracle(
                f"matrix oracle unavailable for type {self.system.type_label}"
            )
        eng = self._engine()
        F = self.field
        M = fmat_id(F, eng.dim)
        for atom in word:
            if atom[0] == "r":
                M2 = eng.x_field(F, atom[1], atom[2])
            elif atom[0] == "s":
                M2 = eng.n_field(F, atom[1])
            else:
                M2 = eng.torus_field(F, atom[1])
            M = fmat_mul(F, M, M2)
        return M

    def oracle_matrix(self, word):
        """Faithful-representation matrix of a word for any type (adjoint
        for D/E); used by tests, not part of the public oracle contract."""
        eng = self._engine()
        F = self.field
        M = fmat_id(F, eng.dim)
        for atom in word:
            if atom[0] == "r":
                M2 = eng.x_field(F, atom[1], atom[2])
            elif atom[0] == "s":
                M2 = eng.n_field(F, atom[1])
            else:
                M2 = eng.torus_field(F, atom[1])
            M = fmat_mul(F, M, M2)
        return M

    def _engine(self):
        if not hasattr(self, "_eng"):
            self._eng = engine_for(self.system)
        return self._eng

    def random_unipotent(self, rng) -> UnipotentElement:
        co = []
        for g in range(self.system.npos):
            c = rng.randrange(self.field.q)
            if c:
                co.append((g, c))
        return UnipotentElement(self, tuple(co))

    def random_word(self, rng, length: int):
        sys, F = self.system, self.field
        word = []
        for _ in range(length):
            kind = rng.randrange(3)
            if kind == 0:
                g = rng.randrange(2 * sys.npos)
                c = rng.randrange(1, F.q)
                word.extend(self.word_of_root(g, c))
            elif kind == 1:
                word.append(("s", rng.randrange(sys.rank)))
            else:
                vals = tuple(rng.randrange(1, F.q) for _ in range(sys.rank))
                word.append(("t", vals))
        return word


def mul_unipotent(u: UnipotentElement, v: UnipotentElement) -> UnipotentElement:
    return u * v


_CONTEXTS: dict[tuple, Chevalley] = {}


def chevalley_ctx(system: RootSystem, field: FiniteField) -> Chevalley:
    key = (system.type_label, system.rank, field.p, field.k)
    if key not in _CONTEXTS:
        _CONTEXTS[key] = Chevalley(system, field)
    return _CONTEXTS[key]
