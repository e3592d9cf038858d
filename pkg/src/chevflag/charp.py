"""Equal-characteristic toolkit: formal group sums, fixed points under
finite p-groups, the abelian product dichotomy, and the two reduction
procedures that drive a nonzero E_J vector to a single-cell group-sum
element and then down the Bruhat order to the identity cell.

Every reduction emits a replayable certificate: the exact sequence of
group-algebra operators applied, the recognized shapes, and a rank-based
membership check of each produced vector in the submodule generated by
the input.  The underlying arguments are for infinite unipotent groups;
in the finite model a failed step is reported as data, never patched.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dfield

import numpy as np

from .chevalley import UnipotentElement
from .errors import ConfigError, DomainError, PreconditionError
from .flagmod import EJPresentation, _codes_of_u, _u_of_codes
from .linalg import Echelon, nullspace_mod
from .rootsys import Weyl, cell_roots
from .errors import ResourceError
from .selfenc import (
    UnipotentSubgroup,
    closure,
    gen_subgroup,
    is_p_power,
)


def _is_subgroup_set(ch, els) -> bool:
    els = frozenset(els)
    if () not in els:
        return False
    try:
        return gen_subgroup(ch, list(els), cap=len(els)) == els
    except ResourceError:
        return False


def _require_equal_char(pres: EJPresentation):
    if pres.field.kind != "prime" or pres.field.ell != pres.ch.field.p:
        raise ConfigError(
            "this procedure needs char F = p = char of the ground field "
            f"(got F = {pres.field}, p = {pres.ch.field.p})"
        )


def apply_group_sum(pres: EJPresentation, elements, v: np.ndarray, *, equal_char=True):
    """X-bar applied to a vector: the sum of the translates by X."""
    if equal_char:
        _require_equal_char(pres)
    ell = pres.field.ell
    out = np.zeros_like(v)
    for x in elements:
        u = x if isinstance(x, UnipotentElement) else UnipotentElement(pres.ch, x)
        out = (out + pres.act_vec(pres.ch.word_of_unipotent(u), v)) % ell
    return out


def abelian_sum_identity(G, H, K, Hp, mul, identity, p: int) -> str:
    """Lemma dichotomy for G = H x K abelian p-group and |H'| = |H|:
    H'-bar K-bar equals 0 or G-bar in characteristic p; returns which."""
    G, H, K, Hp = list(G), list(H), list(K), list(Hp)
    if len(Hp) != len(H):
        raise PreconditionError("|H'| must equal |H|")
    if not is_p_power(len(G), p):
        raise PreconditionError("G must be a finite p-group")
    if len(H) * len(K) != len(G):
        raise PreconditionError("G = H x K must be a direct decomposition")
    if set(mul(h, k) for h in H for k in K) != set(G):
        raise PreconditionError("H K does not cover G")
    for a in G[: min(len(G), 20)]:
        for b in G[: min(len(G), 20)]:
            if mul(a, b) != mul(b, a):
                raise PreconditionError("G is not abelian")
    counts: dict = {}
    for hp in Hp:
        for k in K:
            g = mul(hp, k)
            counts[g] = counts.get(g, 0) + 1
    residues = {g: counts.get(g, 0) % p for g in G}
    vals = set(residues.values())
    if vals == {0}:
        return "zero"
    if vals == {1}:
        return "full"
    raise AssertionError("dichotomy violated: product is neither 0 nor G-bar")


def fixed_points(pres: EJPresentation, v_gens, S_rows: np.ndarray) -> np.ndarray:
    """Basis (rows) of the V-fixed subspace of the row space S_rows."""
    _require_equal_char(pres)
    ell = pres.field.ell
    if S_rows.shape[0] == 0:
        return S_rows
    blocks = []
    for g in v_gens:
        u = g if isinstance(g, UnipotentElement) else UnipotentElement(pres.ch, g)
        M = pres.word_matrix(pres.ch.word_of_unipotent(u))
        A = (M @ S_rows.T - S_rows.T) % ell
        # check stability: image of each row must stay inside S
        ech = Echelon(pres.field, pres.dim)
        for r in S_rows:
            ech.add(r)
        for r in S_rows:
            img = (M @ r) % ell
            if not ech.contains(img):
                raise DomainError("S is not stable under V")
        blocks.append(A)
    stacked = np.vstack(blocks) % ell
    K = nullspace_mod(stacked, ell)
    return (K @ S_rows) % ell


# ---------------------------------------------------------------------------
# certificates


@dataclass
class CertStep:
    op: str
    data: dict
    out_nonzero: bool


@dataclass
class Certificate:
    kind: str
    steps: list = dfield(default_factory=list)
    ok: bool = False
    failure: str = ""
    w: Weyl | None = None
    subgroup: tuple = ()
    membership_checked: bool = False

    def log(self, op, out, **data):
        self.steps.append(CertStep(op, data, bool(np.any(out))))

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "ok": self.ok,
            "failure": self.failure,
            "w": list(self.w.word) if self.w is not None else None,
            "subgroup_size": len(self.subgroup) if self.subgroup else 0,
            "steps": [{"op": s.op, "nonzero": s.out_nonzero, **{k: v for k, v in s.data.items() if isinstance(v, (int, str, list))}} for s in self.steps],
            "membership_checked": self.membership_checked,
        }


def submodule_of(pres: EJPresentation, seeds, with_words: bool = False):
    """Echelon basis of the FG-submodule generated by the seed vectors.

    With with_words=True, also return the kept spanning vectors together
    with the generator word that produced each from the first seed."""
    ell = pres.field.ell
    gen_words = [list(wd) for wd in pres.space.generators()]
    gens = [pres.word_matrix(wd) for wd in gen_words]
    ech = Echelon(pres.field, pres.dim)
    queue = []
    for s in seeds:
        s = s % ell
        if ech.add(s):
            queue.append((s, []))
    head = 0
    while head < len(queue):
        v, word = queue[head]
        head += 1
        for M, gw in zip(gens, gen_words):
            img = (M @ v) % ell
            if ech.add(img):
                queue.append((img, gw + word))
    if with_words:
        return ech, queue
    return ech


FALLBACK_COMBO_CAP = 65536


def _fallback_search(pres, kept, predicate, cap: int = FALLBACK_COMBO_CAP):
    """Deterministic search for a vector of recognized shape among the
    F-combinations of the kept spanning vectors; the returned certificate
    data expresses the vector as an explicit group-algebra operator
    applied to the seed."""
    ell = pres.field.ell
    rank = len(kept)
    if ell**rank > cap:
        return None
    for combo in itertools.product(range(ell), repeat=rank):
        if not any(combo):
            continue
        v = np.zeros(pres.dim, dtype=np.int64)
        for c, (kv, _) in zip(combo, kept):
            if c:
                v = (v + c * kv) % ell
        rec = predicate(v)
        if rec is not None:
            cert_data = [
                [int(c), [_atom_json(a) for a in w]]
                for c, (_, w) in zip(combo, kept)
                if c
            ]
            return v, rec, cert_data
    return None


def _atom_json(atom):
    if atom[0] == "t":
        return ["t", [int(x) for x in atom[1]]]
    return [atom[0]] + [int(x) for x in atom[1:]]


def recognize_cell_group_sum(pres: EJPresentation, v: np.ndarray):
    """If v = lam * X-bar w C_J for a subgroup X of the w-cell group, return
    (w, X elements, lam); otherwise None."""
    ell = pres.field.ell
    live = [w for w in pres.ws if any(v[k] for k in pres.cell_indices(w))]
    if len(live) != 1:
        return None
    w = live[0]
    cell = pres.cells[w]
    coeffs = {}
    for k in pres.cell_indices(w):
        c = int(v[k]) % ell
        if c:
            _, codes = pres.labels[k]
            coeffs[codes] = c
    vals = set(coeffs.values())
    if len(vals) != 1:
        return None
    lam = vals.pop()
    els = {
        _u_of_codes(pres.ch, cell, codes).coords for codes in coeffs
    }
    if not _is_subgroup_set(pres.ch, els):
        return None
    return w, frozenset(els), lam


# ---------------------------------------------------------------------------
# Lemma "oneterm": from a nonzero vector to X-bar w C_J


def _support_elements(pres: EJPresentation, v: np.ndarray):
    out = []
    for k in np.flatnonzero(v % pres.field.ell):
        w, codes = pres.labels[int(k)]
        out.append(_u_of_codes(pres.ch, pres.cells[w], codes))
    return out


def _fixed_vector_min_cells(pres, V: UnipotentSubgroup, xi, cert):
    """A nonzero V-fixed vector in span(V xi), preferring few live cells;
    returns (vector, combination over the translates v*xi)."""
    ell = pres.field.ell
    cols = []
    vs = sorted(V.elements)
    for c in vs:
        u = UnipotentElement(pres.ch, c)
        cols.append(pres.act_vec(pres.ch.word_of_unipotent(u), xi.copy()))
    ech = Echelon(pres.field, pres.dim, track=True)
    for col in cols:
        ech.add(col)
    R = ech.dense_rows()
    gens = [UnipotentElement(pres.ch, c) for c in V.generators] or [
        UnipotentElement(pres.ch, c) for c in vs
    ]
    blocks = []
    for g in gens:
        M = pres.word_matrix(pres.ch.word_of_unipotent(g))
        blocks.append((M @ R.T - R.T) % ell)
    K = nullspace_mod(np.vstack(blocks) % ell, ell)
    if K.shape[0] == 0:
        return None, None
    KR = (K @ R) % ell
    # prefer a fixed vector supported on a single cell
    for w in pres.ws:
        outside = [
            k for k in range(pres.dim) if k not in set(pres.cell_indices(w))
        ]
        if outside:
            sub = KR[:, outside]
            Z = nullspace_mod(sub.T, ell) if sub.size else np.eye(KR.shape[0], dtype=np.int64)
            Z = Z if sub.size else Z
            cand = (Z @ KR) % ell if Z.size else np.zeros((0, pres.dim), dtype=np.int64)
        else:
            cand = KR
        for row in cand:
            if row.any():
                eta = row % ell
                combo = ech.coords(eta)
                return eta, _combo_to_elements(combo, vs)
    eta = KR[0] % ell
    return eta, _combo_to_elements(ech.coords(eta), vs)


def _combo_to_elements(combo, vs):
    return sorted((vs[k], int(c)) for k, c in (combo or {}).items())


def _subgroups_of_root_line(F):
    """All additive F_p-subspaces of (F_q, +), smallest first."""
    from itertools import combinations

    p = F.p
    els = list(F.elements())
    spans = {}
    for r in range(F.k + 1):
        for basis in combinations([e for e in els if e], r):
            span = {0}
            frontier = [0]
            while frontier:
                nxt = []
                for a in frontier:
                    for b in basis:
                        vv = F.add(a, b)
                        if vv not in span:
                            span.add(vv)
                            nxt.append(vv)
                frontier = nxt
            key = frozenset(span)
            spans.setdefault(key, tuple(sorted(span)))
    return [set(s) for s in sorted(spans.values(), key=lambda t: (len(t), t))]


def oneterm_reduce(pres: EJPresentation, xi: np.ndarray, cap: int = 2**12):
    """Drive a nonzero vector to the shape X-bar w C_J inside the
    submodule it generates; returns (vector, Certificate)."""
    _require_equal_char(pres)
    ell = pres.field.ell
    cert = Certificate(kind="oneterm")
    xi = xi.copy() % ell
    if not xi.any():
        raise DomainError("oneterm reduction needs a nonzero vector")
    shape = recognize_cell_group_sum(pres, xi)
    if shape is not None:
        w, els, lam = shape
        cert.ok = True
        cert.w = w
        cert.subgroup = tuple(sorted(els))
        cert.log("already-shaped", xi, w=list(w.word))
        return xi, cert

    V = closure(pres.ch, [u.coords for u in _support_elements(pres, xi)], cap=cap)
    cert.log("closure", xi, size=V.size)
    eta, combo = _fixed_vector_min_cells(pres, V, xi, cert)
    if eta is None:
        cert.failure = "no nonzero V-fixed vector (violates the fixed-point bound)"
        return xi, cert
    cert.log("fixed-vector", eta, combo=[[list(c), x] for c, x in (combo or [])])

    guard = 0
    while guard < 20:
        guard += 1
        shape = _recognize_sum_shape(pres, eta)
        if shape is None:
            break
        live, per_cell = shape
        if len(live) == 1:
            rec = recognize_cell_group_sum(pres, eta)
            if rec is None:
                break
            w, els, lam = rec
            cert.ok = True
            cert.w = w
            cert.subgroup = tuple(sorted(els))
            cert.log("single-cell", eta, w=list(w.word), size=len(els))
            return eta, cert
        eta2, note = _omega_step(pres, eta, live, per_cell, cap)
        if eta2 is None:
            cert.log("omega-exhausted", eta, note=note)
            break
        cert.log("omega-multiplier", eta2, note=note)
        eta = eta2
    # the proof-path moves are exhausted in the finite model; fall back to a
    # bounded search over the submodule generated by xi, with an explicit
    # operator-combination certificate
    _, kept = submodule_of(pres, [xi], with_words=True)
    hit = _fallback_search(pres, kept, lambda v: recognize_cell_group_sum(pres, v))
    if hit is None:
        cert.failure = "no single-cell group-sum element found within caps"
        return eta, cert
    v, rec, data = hit
    w, els, lam = rec
    cert.ok = True
    cert.w = w
    cert.subgroup = tuple(sorted(els))
    cert.log("fallback-combination", v, w=list(w.word), size=len(els), combo=data)
    return v, cert


def _recognize_sum_shape(pres, v):
    """Split v as sum over cells of lam_w * S_w-bar w C_J with S_w a
    subgroup of the cell group; returns (live cells, {w: (els, lam)})."""
    ell = pres.field.ell
    live = []
    per_cell = {}
    for w in pres.ws:
        ks = [k for k in pres.cell_indices(w) if v[k] % ell]
        if not ks:
            continue
        vals = {int(v[k]) % ell for k in ks}
        if len(vals) != 1:
            return None
        els = set()
        for k in ks:
            _, codes = pres.labels[k]
            els.add(_u_of_codes(pres.ch, pres.cells[w], codes).coords)
        if not _is_subgroup_set(pres.ch, els):
            return None
        live.append(w)
        per_cell[w] = (frozenset(els), vals.pop())
    return live, per_cell


def _omega_step(pres, eta, live, per_cell, cap):
    """One cell-killing multiplier: choose the maximal root missing from
    some live cell, enlarge beyond the current slice, and average."""
    sys = pres.system
    ch = pres.ch
    F = ch.field
    cells = {w: set(cell_roots(sys, pres.par.w_J * w.inverse())) for w in live}
    union = sorted(set().union(*cells.values()))
    inter = set.intersection(*cells.values())
    cands = [g for g in union if g not in inter]
    if not cands:
        return None, "live cells share every root"
    gs = max(cands)  # standard order is height-compatible
    # current slice of the fixed vector's group at gs
    V_gs = set()
    for w in live:
        els, _ = per_cell[w]
        for c in els:
            d = dict(c)
            V_gs.add(d.get(gs, 0))
    missing = [c for c in F.elements() if c not in V_gs]
    if not missing:
        return None, (
            f"root subgroup at index {gs} is already full in the finite model"
        )
    y = missing[0]
    # Omega: transversal of the gs-slice span inside its enlargement by y
    from .selfenc import _additive_span

    small = _additive_span(F, V_gs)
    big = _additive_span(F, set(small) | {y})
    reps = []
    seen = set()
    for c in sorted(big):
        cos = frozenset(F.add(c, s) for s in small)
        if cos not in seen:
            seen.add(cos)
            reps.append(c)
    ell = pres.field.ell
    out = np.zeros_like(eta)
    for c in reps:
        u = ch.root_elt(gs, c) if c else ch.id_u()
        out = (out + pres.act_vec(ch.word_of_unipotent(u), eta)) % ell
    if not out.any():
        return None, "omega averaging annihilated the vector"
    shape = _recognize_sum_shape(pres, out)
    if shape is None:
        return None, "omega image lost the group-sum shape"
    if len(shape[0]) >= len(live):
        return None, "omega averaging did not reduce the live cell count"
    return out, f"root {gs}, {len(reps)} coset reps"


# ---------------------------------------------------------------------------
# Lemma "leastterm": descend X-bar (sw) C_J -> H-bar w C_J


def leastterm_descend(pres: EJPresentation, vec: np.ndarray, cap: int = 2**12):
    """Given a vector of shape X-bar (sw) C_J with sw > w, produce one of
    shape H-bar w C_J in the same submodule; returns (vector, Certificate)."""
    _require_equal_char(pres)
    ell = pres.field.ell
    cert = Certificate(kind="leastterm")
    rec = recognize_cell_group_sum(pres, vec)
    if rec is None:
        raise PreconditionError("input is not of the shape X-bar w C_J")
    sw, els, lam = rec
    group = pres.space.group
    sys = pres.system
    ch = pres.ch
    # choose the descent s with s*sw in the cell set
    s_i = None
    for i in sorted(range(sys.rank)):
        w2 = group.simples[i] * sw
        if w2.length < sw.length and w2 in pres.ws:
            s_i = i
            break
    if s_i is None:
        raise PreconditionError("no simple descent of sw stays in the cell set")
    i = s_i
    w = group.simples[i] * sw
    ai = sys.simple_idx[i]
    cert.log("descent", vec, i=i, sw=list(sw.word), w=list(w.word))

    # make X self-enclosed (multiply by a transversal of X in its closure)
    X = frozenset(els)
    Xc = closure(ch, list(X), cap=cap)
    if Xc.elements != X:
        reps = _left_transversal(ch, Xc.elements, X)
        vec = apply_group_sum(pres, [UnipotentElement(ch, r) for r in reps], vec)
        cert.log("self-enclose", vec, before=len(X), after=Xc.size)
        if not vec.any():
            cert.failure = "self-enclosing transversal annihilated the input"
            return vec, cert
        rec = recognize_cell_group_sum(pres, vec)
        if rec is None or rec[0] != sw:
            cert.failure = "self-enclosed enlargement lost the input shape"
            return vec, cert
        X = rec[1]

    # split X = X_alpha * V
    Y = sorted({dict(c).get(ai, 0) for c in X})
    V = frozenset(c for c in X if dict(c).get(ai, 0) == 0)
    if len(Y) * len(V) != len(X):
        cert.failure = "X does not factor as X_alpha * V"
        return vec, cert

    guard = 0
    while guard < 10:
        guard += 1
        if len(Y) == 1:
            out = pres.act_vec([("s", i)], vec)
            rec = recognize_cell_group_sum(pres, out)
            if rec is None or rec[0] != w:
                cert.failure = "final s-dot move did not land on H-bar w C_J"
                return out, cert
            cert.ok = True
            cert.w = w
            cert.subgroup = tuple(sorted(rec[1]))
            cert.log("final", out, w=list(w.word), size=len(rec[1]))
            return out, cert
        # enlarge V so that the g-parts of s-dot u s-dot act trivially
        galpha = set()
        F = ch.field
        for c in Y:
            if c:
                galpha.add(F.neg(F.inv(c)))
        conjV = []
        for coords in V:
            out = []
            bad = False
            for g, c in coords:
                g2, c2 = _conj_root_inv(ch, i, g, c)
                if g2 >= sys.npos:
                    bad = True
                    break
                out.append((g2, c2))
            if bad:
                cert.failure = "V does not conjugate into U under s-dot^{-1}"
                return vec, cert
            conjV.append(ch.collect(out))
        Hcl = closure(
            ch,
            [((ai, c),) for c in galpha] + conjV,
            cap=cap,
        )
        cellw = set(cell_roots(sys, pres.par.w_J * w.inverse()))
        Hw = frozenset(c for c in Hcl.elements if all(g in cellw for g, _ in c))
        Vp = frozenset(
            ch.conj_by_weyl(group.simples[i], UnipotentElement(ch, c)).coords
            for c in Hw
        )
        if not V <= Vp:
            cert.failure = "enlarged V does not contain the old V"
            return vec, cert
        if Vp != V:
            newvec = np.zeros_like(vec)
            for c in sorted(Y):
                xa = ch.root_elt(ai, c) if c else ch.id_u()
                for v in sorted(Vp):
                    u = xa * UnipotentElement(ch, v)
                    codes = _codes_of_u(pres.cells[sw], u)
                    k = pres.col[(sw, codes)]
                    newvec[k] = (newvec[k] + lam) % ell
            vec = newvec
            V = Vp
            cert.log("enlarge-V", vec, size=len(Vp))
        # dichotomy roots
        cellsw = set(cell_roots(sys, pres.par.w_J * sw.inverse()))
        union = sorted(cellw | cellsw)
        inter = cellw & cellsw
        cands = [g for g in union if g not in inter]
        if not cands:
            cert.failure = "cells of w and sw coincide"
            return vec, cert
        br = max(cands)
        tail = [g for g in union if g >= br]
        found = False
        subgroup_lists = {g: _subgroups_of_root_line(F) for g in tail}
        svec = pres.act_vec([("s", i)], vec)
        for combo in itertools.product(*[range(len(subgroup_lists[g])) for g in tail]):
            cand = svec.copy()
            for g, ci in zip(reversed(tail), reversed(combo)):
                codesets = sorted(subgroup_lists[g][ci])
                nxt = np.zeros_like(cand)
                for c in codesets:
                    u = ch.root_elt(g, c) if c else ch.id_u()
                    nxt = (nxt + pres.act_vec(ch.word_of_unipotent(u), cand)) % ell
                cand = nxt
            if not cand.any():
                continue
            rec = recognize_cell_group_sum(pres, cand)
            if rec is not None and rec[0] == w:
                cert.ok = True
                cert.w = w
                cert.subgroup = tuple(sorted(rec[1]))
                cert.log(
                    "gamma-omega",
                    cand,
                    root=int(br),
                    combo=[int(x) for x in combo],
                )
                return cand, cert
            shrink = _recognize_alpha_gamma(pres, ch, cand, sw, ai)
            if shrink is not None and len(shrink[0]) < len(Y):
                Fset, Gamma, lam2 = shrink
                # translate so the identity is present
                if 0 not in Fset:
                    c0 = sorted(Fset)[0]
                    cand = pres.act_vec(
                        ch.word_of_unipotent(ch.root_elt(ai, F.neg(c0))), cand
                    )
                    sh2 = _recognize_alpha_gamma(pres, ch, cand, sw, ai)
                    if sh2 is None:
                        continue
                    Fset, Gamma, lam2 = sh2
                vec = cand
                Y = sorted(Fset)
                V = Gamma
                lam = lam2
                cert.log("gamma-shrink", vec, ysize=len(Y))
                found = True
                break
        if cert.ok:
            return vec, cert
        if not found:
            cert.log("multiplier-exhausted", vec)
            break
    if not cert.ok:
        # bounded fallback: search the submodule generated by the input for
        # the target shape at the lower cell, certificate as an explicit
        # operator combination
        _, kept = submodule_of(pres, [vec], with_words=True)

        def pred(v):
            rec2 = recognize_cell_group_sum(pres, v)
            if rec2 is not None and rec2[0] == w:
                return rec2
            return None

        hit = _fallback_search(pres, kept, pred)
        if hit is None:
            cert.failure = (
                "no multiplier subgroups or submodule combination produced "
                "the target shape within caps"
            )
            return vec, cert
        v2, rec2, data = hit
        cert.ok = True
        cert.w = w
        cert.subgroup = tuple(sorted(rec2[1]))
        cert.log("fallback-combination", v2, w=list(w.word), size=len(rec2[1]), combo=data)
        return v2, cert
    cert.failure = "descent loop guard exceeded"
    return vec, cert


def _conj_root_inv(ch, i, g, c):
    """s-dot_i^{-1} x_g(c) s-dot_i = x_{s_i g}(eta_{i, s_i g} c)."""
    g2 = ch.system.reflect_idx(i, g)
    sign = ch.table.eta[(i, g2)]
    return g2, (c if sign > 0 else ch.field.neg(c))


def _left_transversal(ch, big, small):
    small_set = set(small)
    reps = []
    seen = set()
    for c in sorted(big):
        u = UnipotentElement(ch, c)
        cos = frozenset((u * UnipotentElement(ch, s)).coords for s in small_set)
        if cos not in seen:
            seen.add(cos)
            reps.append(c)
    return reps


def _recognize_alpha_gamma(pres, ch, v, sw, ai):
    """Recognize sum over c in F of x_ai(c) Gamma-bar (sw)C_J; returns
    (F codes, Gamma elements, lam)."""
    ell = pres.field.ell
    live = [w for w in pres.ws if any(v[k] for k in pres.cell_indices(w))]
    if live != [sw]:
        return None
    cell = pres.cells[sw]
    groups: dict[int, set] = {}
    vals = set()
    for k in pres.cell_indices(sw):
        c = int(v[k]) % ell
        if not c:
            continue
        vals.add(c)
        _, codes = pres.labels[k]
        u = _u_of_codes(ch, cell, codes)
        a = u.coeff(ai)
        rest = (ch.root_elt(ai, ch.field.neg(a)) * u) if a else u
        groups.setdefault(a, set()).add(rest.coords)
    if len(vals) != 1:
        return None
    base = None
    for a, els in groups.items():
        if base is None:
            base = els
        elif els != base:
            return None
    if base is None or not _is_subgroup_set(ch, base):
        return None
    return set(groups.keys()), frozenset(base), vals.pop()


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class PipelineReport:
    ok: bool
    stage: str
    certificates: list
    final_w: list | None
    membership_ok: bool
    coeff_sum: int | None
    coeff_sum_expected: int | None
    infeasible_proof: dict | None = None

    def summary(self):
        return {
            "ok": self.ok,
            "stage": self.stage,
            "final_w": self.final_w,
            "membership_ok": self.membership_ok,
            "coeff_sum": self.coeff_sum,
            "coeff_sum_expected": self.coeff_sum_expected,
            "infeasible_proof": self.infeasible_proof,
            "certificates": [c.summary() for c in self.certificates],
        }


def shape_infeasibility_proof(pres, xi, max_length: int, cap: int = FALLBACK_COMBO_CAP):
    """Exhaustively verify that spin({xi}) contains no single-cell
    group-sum element at a cell of length < max_length; returns the
    checked evidence, or None when the module is too large to enumerate."""
    ech = submodule_of(pres, [xi])
    ell = pres.field.ell
    if ell**ech.rank > cap:
        return None
    R = ech.dense_rows()
    found = []
    for combo in itertools.product(range(ell), repeat=ech.rank):
        if not any(combo):
            continue
        v = np.zeros(pres.dim, dtype=np.int64)
        for k, c in enumerate(combo):
            if c:
                v = (v + c * R[k]) % ell
        rec = recognize_cell_group_sum(pres, v)
        if rec is not None and rec[0].length < max_length:
            return None  # a witness exists after all
        if rec is not None:
            found.append([list(rec[0].word), len(rec[1])])
    present = sorted({(tuple(w), s) for w, s in found})
    return {
        "submodule_dim": int(ech.rank),
        "vectors_enumerated": int(ell**ech.rank - 1),
        "max_length_excluded": int(max_length),
        "shapes_present": [[list(w), int(s)] for w, s in present],
    }


def charp_pipeline(pres: EJPresentation, xi: np.ndarray) -> PipelineReport:
    """oneterm, then leastterm steps down to the identity cell, then the
    final coefficient-sum identity on w_J-dot H-bar C_J.

    A leastterm step whose own submodule lacks the target shape is an
    expected finite-model outcome; the pipeline then searches spin({xi})
    itself, which is where the acceptance contract demands membership."""
    _require_equal_char(pres)
    ell = pres.field.ell
    e = pres.space.group.identity
    M, M_kept = submodule_of(pres, [xi], with_words=True)
    certs = []
    vec, cert = oneterm_reduce(pres, xi)
    cert.membership_checked = bool(M.contains(vec))
    certs.append(cert)
    if not cert.ok or not cert.membership_checked:
        return PipelineReport(False, "oneterm", certs, None, cert.membership_checked, None, None)
    guard = 0
    while cert.w != e and guard < 10:
        guard += 1
        vec2, cert2 = leastterm_descend(pres, vec)
        if cert2.ok:
            vec, cert = vec2, cert2
            cert.membership_checked = bool(M.contains(vec))
            certs.append(cert)
            if not cert.membership_checked:
                return PipelineReport(False, "leastterm", certs, None, False, None, None)
            continue
        certs.append(cert2)
        # pipeline-level fallback inside spin({xi})
        cur_len = cert.w.length

        def pred_at(target):
            def pred(v):
                rec = recognize_cell_group_sum(pres, v)
                if rec is not None and rec[0] == target:
                    return rec
                return None

            return pred

        targets = [e] + sorted(
            (w for w in pres.ws if 0 < w.length < cur_len), key=lambda w: w.length
        )
        hit = None
        for target in targets:
            hit = _fallback_search(pres, M_kept, pred_at(target))
            if hit is not None:
                break
        if hit is None:
            proof = shape_infeasibility_proof(pres, xi, cur_len)
            stage = "no-descent-shape-verified" if proof else "leastterm"
            return PipelineReport(False, stage, certs, None, True, None, None, proof)
        vec, rec, data = hit
        cert = Certificate(kind="pipeline-fallback")
        cert.ok = True
        cert.w = rec[0]
        cert.subgroup = tuple(sorted(rec[1]))
        cert.log("fallback-combination", vec, w=list(rec[0].word), combo=data)
        cert.membership_checked = True
        certs.append(cert)
    if cert.w != e:
        return PipelineReport(False, "descent-guard", certs, None, True, None, None)
    final = pres.act_vec(pres.ch.word_of_weyl(pres.par.w_J), vec)
    idxs = pres.cell_indices(e)
    total = int(sum(int(final[k]) for k in idxs) % ell)
    expected = ((-1) ** pres.par.w_J.length) % ell
    ok = total == expected
    return PipelineReport(ok, "done", certs, list(cert.w.word), True, total, expected)


def verify_pipeline(pres: EJPresentation, xi: np.ndarray, report: PipelineReport) -> bool:
    """Mechanical re-verification: membership of every successful step's
    output and the final coefficient sum.  Failed intermediate steps are
    trace data and carry no membership claim."""
    if not report.ok:
        return True
    return all(
        c.membership_checked for c in report.certificates if c.ok
    ) and (report.coeff_sum == report.coeff_sum_expected)
