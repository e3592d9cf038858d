"""Self-enclosed subgroups of the unipotent radical U.

A subgroup H of U(F_q) is self-enclosed with respect to a total order
on the positive roots when, for every k, the set of k-th factors of the
elements of H (re-collected into that order) is exactly H intersected
with the k-th root subgroup.  This module houses the slice computation,
per-order verdicts, the recursive closure construction along the height
order, root factorizations, coset projections, and the subfield-tower
construction.

Subgroups are stored as explicit sets of canonical coordinate tuples.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .chevalley import Chevalley, UnipotentElement
from .errors import DomainError, PreconditionError, ResourceError
from .fields import GF
from .rootsys import Weyl, cell_roots

SUBGROUP_CAP = 2**16
EXHAUSTIVE_ORDER_CAP = 720
SAMPLE_ORDERS = 50

Coords = tuple  # canonical ((root_idx, code), ...) in the standard order


@dataclass(frozen=True)
class UnipotentSubgroup:
    ctx: Chevalley
    elements: frozenset
    generators: tuple

    @property
    def size(self) -> int:
        return len(self.elements)

    def contains(self, u: UnipotentElement) -> bool:
        return u.coords in self.elements

    def as_elements(self):
        return [UnipotentElement(self.ctx, c) for c in sorted(self.elements)]


def gen_subgroup(ctx: Chevalley, gens, cap: int = SUBGROUP_CAP) -> frozenset:
    """Closure of a finite generating set under multiplication."""
    gens = [g.coords if isinstance(g, UnipotentElement) else tuple(g) for g in gens]
    seen = {()}
    frontier = [()]
    while frontier:
        nxt = []
        for c in frontier:
            u = UnipotentElement(ctx, c)
            for g in gens:
                v = (u * UnipotentElement(ctx, g)).coords
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
                    if len(seen) > cap:
                        raise ResourceError(f"subgroup exceeds cap {cap}")
        frontier = nxt
    return frozenset(seen)


def make_subgroup(ctx: Chevalley, gens, cap: int = SUBGROUP_CAP) -> UnipotentSubgroup:
    gens = [g.coords if isinstance(g, UnipotentElement) else tuple(g) for g in gens]
    return UnipotentSubgroup(ctx, gen_subgroup(ctx, gens, cap), tuple(gens))


def is_subgroup(ctx: Chevalley, elements) -> bool:
    els = {c if isinstance(c, tuple) else c.coords for c in elements}
    if () not in els:
        return False
    # grow a small generating set rather than closing over all elements
    gens: list = []
    span = frozenset({()})
    try:
        for h in sorted(els):
            if h not in span:
                gens.append(h)
                span = gen_subgroup(ctx, gens, cap=len(els))
    except ResourceError:
        return False
    return span == frozenset(els)


def is_p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


# ---------------------------------------------------------------------------
# orders and slices


def height_order(ctx: Chevalley) -> tuple[int, ...]:
    return tuple(range(ctx.system.npos))


def order_is_height_compatible(ctx: Chevalley, order) -> bool:
    hts = [ctx.system.heights[g] for g in order]
    return all(a <= b for a, b in zip(hts, hts[1:]))


def orders_to_check(ctx: Chevalley, spec="auto", seed: int = 0):
    """Order sample per policy: always the height order; all orders when
    m! <= 720; otherwise seeded random orders."""
    m = ctx.system.npos
    if isinstance(spec, (list, tuple)) and spec and isinstance(spec[0], (list, tuple)):
        return [tuple(o) for o in spec]
    std = height_order(ctx)
    if spec == "std":
        return [std]
    fact = 1
    for i in range(2, m + 1):
        fact *= i
    if spec == "all" or (spec == "auto" and fact <= EXHAUSTIVE_ORDER_CAP):
        return [tuple(p) for p in itertools.permutations(range(m))]
    count = spec if isinstance(spec, int) else SAMPLE_ORDERS
    rng = random.Random(seed)
    out = [std]
    seen = {std}
    while len(out) < count:
        p = list(range(m))
        rng.shuffle(p)
        t = tuple(p)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def slice_at(ctx: Chevalley, X, order, k: int) -> frozenset:
    """Set of k-th factors (field codes) of the elements of X re-collected
    into the given order."""
    g = order[k]
    pos_of = {r: p for p, r in enumerate(order)}
    out = set()
    for coords in X:
        fac = dict(ctx.collect(list(coords), pos_of))
        out.add(fac.get(g, 0))
    return frozenset(out)


def root_intersection_codes(X, g: int) -> frozenset:
    """Codes of X intersected with the root subgroup U_g."""
    out = {0} if () in X else set()
    for coords in X:
        if len(coords) == 1 and coords[0][0] == g:
            out.add(coords[0][1])
    return frozenset(out)


def is_self_enclosed(ctx: Chevalley, H, orders="auto", seed: int = 0):
    """Per-order verdicts; H must be a subgroup (element set)."""
    els = {c if isinstance(c, tuple) else c.coords for c in H}
    if not is_subgroup(ctx, els):
        raise DomainError("self-enclosedness is defined for subgroups")
    verdicts = []
    for order in orders_to_check(ctx, orders, seed):
        ok = True
        for k in range(ctx.system.npos):
            if slice_at(ctx, els, order, k) != root_intersection_codes(els, order[k]):
                ok = False
                break
        verdicts.append((order, ok))
    return verdicts


def self_enclosed_all(verdicts) -> bool:
    return all(ok for _, ok in verdicts)


# ---------------------------------------------------------------------------
# closure along the height order (the recursive construction)


def _additive_span(F, codes) -> frozenset:
    span = {0}
    frontier = [0]
    codes = [c for c in codes if c]
    while frontier:
        nxt = []
        for a in frontier:
            for c in codes:
                v = F.add(a, c)
                if v not in span:
                    span.add(v)
                    nxt.append(v)
        frontier = nxt
    return frozenset(span)


def closure(ctx: Chevalley, X, cap: int = SUBGROUP_CAP) -> UnipotentSubgroup:
    """Finite p-group containing X, self-enclosed on the height order,
    built by the recursive slice construction."""
    els = {c if isinstance(c, tuple) else c.coords for c in X}
    m = ctx.system.npos
    order = height_order(ctx)
    F = ctx.field
    groups: list[frozenset] = []
    gen_pool: list[Coords] = []
    for k in range(m):
        Xk = slice_at(ctx, els, order, k)
        if gen_pool:
            Yk = slice_at(ctx, gen_subgroup(ctx, gen_pool, cap), order, k)
        else:
            Yk = frozenset({0})
        Hk = _additive_span(F, set(Xk) | set(Yk))
        groups.append(Hk)
        g = order[k]
        gen_pool.extend(((g, c),) for c in Hk if c)
    H = gen_subgroup(ctx, gen_pool, cap)
    for c in els:
        assert c in H, "closure failed to contain its input"
    assert is_p_power(len(H), F.p)
    return UnipotentSubgroup(ctx, H, tuple(sorted(gen_pool)))


def minimal_self_enclosed(ctx: Chevalley, X, orders="auto", cap: int = SUBGROUP_CAP):
    """Brute-force least fixpoint: repeatedly add slice witnesses over the
    sampled orders until every slice equals the intersection.  Exact when
    the order list is exhaustive."""
    els = set(gen_subgroup(ctx, [c if isinstance(c, tuple) else c.coords for c in X], cap))
    order_list = orders_to_check(ctx, orders)
    changed = True
    while changed:
        changed = False
        for order in order_list:
            for k in range(ctx.system.npos):
                g = order[k]
                missing = slice_at(ctx, els, order, k) - root_intersection_codes(els, g)
                for c in missing:
                    if c:
                        els = set(gen_subgroup(ctx, list(els) + [((g, c),)], cap))
                        changed = True
    return UnipotentSubgroup(ctx, frozenset(els), ())


# ---------------------------------------------------------------------------
# factorization and projections


def root_factor(ctx: Chevalley, H: UnipotentSubgroup):
    """Ordered factors (root, codes) with H = prod of its root slices.

    Requires self-enclosedness on the working (height) order."""
    order = height_order(ctx)
    for k in range(ctx.system.npos):
        if slice_at(ctx, H.elements, order, k) != root_intersection_codes(H.elements, order[k]):
            raise PreconditionError("H is not self-enclosed on the height order")
    factors = [(g, tuple(sorted(root_intersection_codes(H.elements, g)))) for g in order]
    total = 1
    for _, codes in factors:
        total *= len(codes)
    assert total == H.size, "root factors do not enumerate H"
    return factors


def restrict_to_cell(ctx: Chevalley, H: UnipotentSubgroup, w: Weyl) -> UnipotentSubgroup:
    """H_w = H intersected with U_w (elements supported on Phi_w^-)."""
    cell = set(cell_roots(ctx.system, w))
    els = frozenset(c for c in H.elements if all(g in cell for g, _ in c))
    return UnipotentSubgroup(ctx, els, ())


def enumerate_unipotent(ctx: Chevalley, roots=None, cap: int = SUBGROUP_CAP):
    """All elements of the product of the given root subgroups."""
    sys, F = ctx.system, ctx.field
    roots = list(range(sys.npos)) if roots is None else sorted(roots)
    total = F.q ** len(roots)
    if total > cap:
        raise ResourceError(f"enumeration of {total} elements exceeds cap {cap}")
    out = []
    for codes in itertools.product(range(F.q), repeat=len(roots)):
        out.append(tuple((g, c) for g, c in zip(roots, codes) if c))
    return out


def coset_projections(ctx: Chevalley, H: UnipotentSubgroup, v_roots, cap: int = SUBGROUP_CAP):
    """(H_V, _V H, H \\cap V) over the root-subgroup product V.

    The transversals are the complement products coming from the unique
    ordered factorizations u = x v and u = v y; the explicit coset
    decomposition of U over V is verified while U is small enough to
    enumerate."""
    vset = set(v_roots)
    for g in vset:
        for h in vset:
            s = ctx.system.add_roots(g, h)
            if s is not None and s < ctx.system.npos and s not in vset:
                raise DomainError("V is not a subgroup product (roots not closed)")
    total = ctx.field.q ** ctx.system.npos
    if total <= cap:
        # each complement-product element meets each left/right coset once
        V = [UnipotentElement(ctx, c) for c in enumerate_unipotent(ctx, sorted(vset))]
        comp = [
            UnipotentElement(ctx, c)
            for c in enumerate_unipotent(
                ctx, [g for g in range(ctx.system.npos) if g not in vset]
            )
        ]
        left = {(x * v).coords for x in comp for v in V}
        right = {(v * y).coords for y in comp for v in V}
        assert len(left) == total and len(right) == total, "transversal check failed"
    HV = set()
    VH = set()
    for h in H.elements:
        he = UnipotentElement(ctx, h)
        _, v = ctx.split_first(he, [g for g in range(ctx.system.npos) if g not in vset])
        HV.add(v.coords)
        v2, _ = ctx.split_first(he, sorted(vset))
        VH.add(v2.coords)
    cap_set = frozenset(
        c for c in H.elements if all(g in vset for g, _ in c)
    )
    return frozenset(HV), frozenset(VH), cap_set


# ---------------------------------------------------------------------------
# the subfield tower


def tower_subgroup(p: int, base_deg: int, ambient_deg: int, exponents, system):
    """H = prod_k U_{delta_k, q^{a_k}} inside U(F_{q^N}) with q = p^base_deg,
    N = ambient_deg, exponents a_k listed along the height order.

    Closure requires lcm(a_i, a_j) | a_k whenever delta_i + delta_j =
    delta_k; ascending divisibility chains satisfy this.
    """
    amb = GF(p, base_deg * ambient_deg)
    ctx = Chevalley(system, amb)
    m = system.npos
    if len(exponents) != m:
        raise DomainError(f"need {m} exponents, got {len(exponents)}")
    slices = []
    for a in exponents:
        if ambient_deg % a:
            raise DomainError(f"exponent {a} does not divide the ambient degree")
        sub = GF(p, base_deg * a)
        emb = sub.embed_into(amb)
        slices.append(frozenset(emb))
    gens = []
    for g, codes in enumerate(slices):
        gens.extend(((g, c),) for c in codes if c)
    els = gen_subgroup(ctx, gens)
    expected = 1
    for codes in slices:
        expected *= len(codes)
    if len(els) != expected:
        raise DomainError(
            "tower is not closed: exponents must satisfy the lcm condition "
            f"(got {len(els)} elements, expected {expected})"
        )
    return ctx, UnipotentSubgroup(ctx, els, tuple(gens))
