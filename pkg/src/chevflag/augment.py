"""Cell projections, augmentation maps, and the non-vanishing searches.

Works on E_J presentations: vectors are dense coordinate arrays over the
basis {u w C_J : w in Y_J}.  The search follows the constructive moves
of the two non-vanishing arguments: phase 1 drives the minimal-length
nonzero cell down to the identity cell using moves s-dot and s-dot y
(y in U_s); phase 2 descends the heart condition along W_J.  Both fall
back to seeded random moves within the move budget, and an exhausted
budget is reported, never silently passed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import DomainError
from .flagmod import EJPresentation
from .rootsys import Weyl, cell_roots, descents


def project(pres: EJPresentation, w: Weyl, v: np.ndarray) -> np.ndarray:
    """P_w: keep the w-cell coordinates, zero elsewhere."""
    if w not in pres.ws:
        raise DomainError("projection index must lie in Y_J")
    out = np.zeros_like(v)
    idxs = pres.cell_indices(w)
    out[idxs] = v[idxs]
    return out


def augmentation(pres: EJPresentation, v: np.ndarray) -> tuple:
    """Per-cell coefficient sums, indexed by Y_J in presentation order."""
    ell = pres.field.ell
    return tuple(int(sum(int(v[k]) for k in pres.cell_indices(w)) % ell) for w in pres.ws)


def augmentation_nonzero(pres, v) -> bool:
    return any(augmentation(pres, v))


def heart_condition(pres: EJPresentation, v: np.ndarray, h: Weyl) -> bool:
    """True iff the e-cell coefficients summed over x in U'_h are nonzero."""
    if h not in pres.par.W_J:
        raise DomainError("the heart condition is indexed by elements of W_J")
    e = pres.space.group.identity
    inv_h = set(cell_roots(pres.system, h))
    ell = pres.field.ell
    cell = pres.cells[e]
    total = 0
    for k in pres.cell_indices(e):
        _, codes = pres.labels[k]
        support = {g for g, c in zip(cell, codes) if c}
        if not (support & inv_h):
            total = (total + int(v[k])) % ell
    return total != 0


def min_nonzero_cell(pres: EJPresentation, v: np.ndarray) -> Weyl | None:
    best = None
    for w in pres.ws:
        if any(v[k] for k in pres.cell_indices(w)):
            if best is None or w.length < best.length:
                best = w
    return best


def spade_set(pres: EJPresentation, i: int, sigma: Weyl):
    """{v in Y_J : s_i v not in Y_J and P_sigma(s-dot v C_J) != 0}, found by
    one-step rewriting of the cell generators v C_J."""
    out = []
    for v in pres.ws:
        si_v = pres.space.group.simples[i] * v
        if si_v in pres.ws:
            continue
        base = np.zeros(pres.dim, dtype=np.int64)
        cell = pres.cells[v]
        base[pres.col[(v, (0,) * len(cell))]] = 1
        img = pres.act_vec([("s", i)], base)
        if np.any(project(pres, sigma, img)):
            out.append(v)
    return out


@dataclass
class SearchResult:
    found: bool
    word: list
    moves: int
    profile: tuple
    trace: list = dfield(default_factory=list)
    seed: int = 0


def _u_inverse_word(pres, w: Weyl, k: int):
    """Word of x^{-1} for the unipotent part of basis label k."""
    from .flagmod import _u_of_codes

    _, codes = pres.labels[k]
    u = _u_of_codes(pres.ch, pres.cells[w], codes)
    return pres.ch.word_of_unipotent(u.inverse())


def nonvanishing_search(
    pres: EJPresentation, xi: np.ndarray, budget: int = 10000, seed: int = 0
) -> SearchResult:
    """Search for g with epsilon(g xi) != 0, following the constructive
    moves of the minimal-cell descent and the heart-condition descent."""
    ch = pres.ch
    sys = pres.system
    F = pres.field
    group = pres.space.group
    e = group.identity
    if not np.any(xi % F.ell):
        raise DomainError("the search needs a nonzero vector")
    rng = random.Random(seed)
    moves = 0
    word: list = []
    cur = xi.copy() % F.ell
    trace = []

    def apply(mv, v):
        nonlocal moves
        moves += 1
        return pres.act_vec(mv, v)

    def candidates(i):
        a = sys.simple_idx[i]
        yield [("s", i)]
        for c in ch.field.units():
            yield [("s", i), ("r", a, c)]

    # phase 1: drive the minimal nonzero cell to e
    while moves < budget:
        h = min_nonzero_cell(pres, cur)
        if h == e:
            break
        # translate so the h-cell has a coefficient at the identity element
        k0 = next(k for k in pres.cell_indices(h) if cur[k])
        tw = _u_inverse_word(pres, h, k0)
        if tw:
            cur = apply(tw, cur)
            word = tw + word
        progressed = False
        for i in sorted(descents(h)):
            sigma = group.simples[i] * h
            for mv in candidates(i):
                if moves >= budget:
                    break
                nxt = apply(mv, cur)
                nh = min_nonzero_cell(pres, nxt)
                if nh is not None and nh.length < h.length:
                    cur = nxt
                    word = mv + word
                    progressed = True
                    trace.append(("cell-drop", h.length, nh.length))
                    break
            if progressed:
                break
        if not progressed:
            # seeded random fallback
            if moves >= budget:
                return SearchResult(False, word, moves, augmentation(pres, cur), trace, seed)
            mv = _random_move(ch, rng)
            cur = apply(mv, cur)
            word = mv + word
            trace.append(("random", "phase1"))

    # phase 2: descend the heart condition from w_J to e
    while moves < budget:
        prof = augmentation(pres, cur)
        if any(prof):
            return SearchResult(True, word, moves, prof, trace, seed)
        # make a_{e,id} nonzero, then walk h down W_J
        ks = [k for k in pres.cell_indices(e) if cur[k]]
        if not ks:
            # lost the e-cell: go back to phase 1 by a random restart
            mv = _random_move(ch, rng)
            cur = apply(mv, cur)
            word = mv + word
            trace.append(("random", "restart"))
            while moves < budget:
                h = min_nonzero_cell(pres, cur)
                if h == e or h is None:
                    break
                mv = _random_move(ch, rng)
                cur = apply(mv, cur)
                word = mv + word
            continue
        tw = _u_inverse_word(pres, e, ks[0])
        if tw:
            cur = apply(tw, cur)
            word = tw + word
        h = pres.par.w_J
        ok = heart_condition(pres, cur, h)
        stalled = False
        while h != e and moves < budget and not stalled:
            stalled = True
            for i in sorted(descents(h)):
                tau = h * group.simples[i]
                for mv in candidates(i):
                    if moves >= budget:
                        break
                    nxt = apply(mv, cur)
                    if heart_condition(pres, nxt, tau):
                        cur = nxt
                        word = mv + word
                        h = tau
                        stalled = False
                        trace.append(("heart-drop", h.length))
                        break
                if not stalled:
                    break
        if h == e:
            prof = augmentation(pres, cur)
            if any(prof):
                return SearchResult(True, word, moves, prof, trace, seed)
        if stalled:
            mv = _random_move(ch, rng)
            cur = apply(mv, cur)
            word = mv + word
            trace.append(("random", "phase2"))
    return SearchResult(False, word, moves, augmentation(pres, cur), trace, seed)


def _random_move(ch, rng):
    sys = ch.system
    kind = rng.randrange(3)
    if kind == 0:
        return [("s", rng.randrange(sys.rank))]
    if kind == 1:
        g = rng.randrange(sys.npos)
        return [("r", g, rng.randrange(1, ch.field.q))]
    i = rng.randrange(sys.rank)
    return [("s", i), ("r", sys.simple_idx[i], rng.randrange(1, ch.field.q))]


def verify_search(pres: EJPresentation, xi: np.ndarray, res: SearchResult) -> bool:
    """Mechanical re-check: act by the found word and re-test epsilon."""
    if not res.found:
        return True
    img = pres.act_vec(res.word, xi.copy() % pres.field.ell)
    return any(augmentation(pres, img))
