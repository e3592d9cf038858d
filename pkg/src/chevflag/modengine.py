"""MeatAxe-lite over prime fields: spinning, Norton-style irreducibility
testing with nullity-1 certificates, composition-series extraction, and
brute-force oracles (exhaustive projective spins, submodule-lattice
chains) used to confirm the randomized results independently.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import DomainError, ResourceError
from .linalg import Echelon, PrimeField, mat_hash, nullspace_mod

DIM_CAP = 2000
EXHAUSTIVE_DIM_CAP = 12
EXHAUSTIVE_POINT_CAP = 600000


@dataclass
class MatrixModule:
    dim: int
    ell: int
    gens: list
    provenance: str = ""

    def __post_init__(self):
        for M in self.gens:
            if M.shape != (self.dim, self.dim):
                raise DomainError("generator matrices must be square of the module dim")
            if self.dim and _det_nonzero(M, self.ell) is False:
                raise DomainError("generator matrices must be invertible")

    def field(self):
        return PrimeField(self.ell)

    def hash(self) -> str:
        h = hashlib.sha256()
        for M in self.gens:
            h.update(mat_hash(M, self.ell).encode())
        return h.hexdigest()[:16]


def _det_nonzero(M, ell) -> bool:
    A = M.copy() % ell
    n = A.shape[0]
    for c in range(n):
        piv = None
        for r in range(c, n):
            if A[r, c]:
                piv = r
                break
        if piv is None:
            return False
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
        inv = pow(int(A[c, c]), ell - 2, ell)
        A[c] = (A[c] * inv) % ell
        for r in range(c + 1, n):
            if A[r, c]:
                A[r] = (A[r] - int(A[r, c]) * A[c]) % ell
    return True


def spin_vector(M: MatrixModule, v: np.ndarray) -> np.ndarray:
    """Echelonized basis (rows) of the smallest invariant subspace
    containing v; deterministic."""
    F = M.field()
    ech = Echelon(F, M.dim)
    queue = []
    v = np.asarray(v, dtype=np.int64) % M.ell
    if ech.add(v):
        queue.append(v)
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        for A in M.gens:
            y = (A @ x) % M.ell
            if ech.add(y):
                queue.append(y)
    return ech.dense_rows()


def spin_rows(M: MatrixModule, rows) -> np.ndarray:
    F = M.field()
    ech = Echelon(F, M.dim)
    queue = []
    for v in rows:
        v = np.asarray(v, dtype=np.int64) % M.ell
        if ech.add(v):
            queue.append(v)
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        for A in M.gens:
            y = (A @ x) % M.ell
            if ech.add(y):
                queue.append(y)
    return ech.dense_rows()


def random_algebra_element(M: MatrixModule, rng: random.Random) -> np.ndarray:
    """Random element of the enveloping algebra: a small F-combination of
    words of length <= 2 in the generators."""
    n = M.dim
    out = np.zeros((n, n), dtype=np.int64)
    words = [np.eye(n, dtype=np.int64)] + list(M.gens)
    for A in M.gens:
        B = M.gens[rng.randrange(len(M.gens))]
        words.append((A @ B) % M.ell)
    for Wd in words:
        c = rng.randrange(M.ell)
        if c:
            out = (out + c * Wd) % M.ell
    return out


@dataclass
class IrredVerdict:
    status: str  # irreducible | reducible | inconclusive
    witness: np.ndarray | None = None
    nullity: int | None = None
    tries: int = 0
    method: str = ""


def _transpose_module(M: MatrixModule) -> MatrixModule:
    return MatrixModule(M.dim, M.ell, [A.T.copy() % M.ell for A in M.gens], M.provenance + ".dual")


def irreducibility_test(M: MatrixModule, seed: int = 0, tries: int = 40) -> IrredVerdict:
    """Norton test with a nullity-1 certificate; inconclusive after the
    retry budget if no nullity-1 algebra element is found."""
    if M.dim == 0:
        raise DomainError("empty module")
    if M.dim == 1:
        return IrredVerdict("irreducible", None, None, 0, "dim-1")
    rng = random.Random(seed)
    ell = M.ell
    dual = _transpose_module(M)
    for t in range(1, tries + 1):
        z = random_algebra_element(M, rng)
        ker = nullspace_mod(z, ell)
        if ker.shape[0] == 0:
            continue
        # spinning any kernel vector is a sound reducibility probe; the
        # conclusive irreducibility certificate needs nullity exactly 1
        v = ker[0]
        W = spin_vector(M, v)
        if W.shape[0] < M.dim:
            return IrredVerdict("reducible", W, int(ker.shape[0]), t, "norton-kernel")
        kerT = nullspace_mod(z.T % ell, ell)
        w = kerT[0]
        WD = spin_vector(dual, w)
        if WD.shape[0] < M.dim:
            ann = nullspace_mod(WD, ell)
            return IrredVerdict(
                "reducible", spin_rows(M, ann), int(ker.shape[0]), t, "norton-dual"
            )
        if ker.shape[0] == 1:
            return IrredVerdict("irreducible", None, 1, t, "norton")
    return IrredVerdict("inconclusive", None, None, tries, "no-nullity-1")


def projective_points(dim: int, ell: int):
    """One representative per 1-dimensional subspace of F_ell^dim."""
    for lead in range(dim):
        for tail in itertools.product(range(ell), repeat=dim - lead - 1):
            v = np.zeros(dim, dtype=np.int64)
            v[lead] = 1
            v[lead + 1 :] = tail
            yield v


def exhaustive_irreducible(M: MatrixModule) -> bool:
    """Brute-force oracle: every nonzero vector spins to the whole module.
    Only for small modules."""
    npts = (M.ell**M.dim - 1) // (M.ell - 1)
    if M.dim > EXHAUSTIVE_DIM_CAP or npts > EXHAUSTIVE_POINT_CAP:
        raise ResourceError(f"{npts} projective points exceed the exhaustive cap")
    for v in projective_points(M.dim, M.ell):
        if spin_vector(M, v).shape[0] < M.dim:
            return False
    return True


def minimal_submodule_exhaustive(M: MatrixModule) -> np.ndarray | None:
    """Smallest proper nonzero submodule found by exhaustive spins, or
    None when the module is irreducible."""
    npts = (M.ell**M.dim - 1) // (M.ell - 1)
    if M.dim > EXHAUSTIVE_DIM_CAP or npts > EXHAUSTIVE_POINT_CAP:
        raise ResourceError("module too large for the exhaustive oracle")
    best = None
    for v in projective_points(M.dim, M.ell):
        W = spin_vector(M, v)
        if W.shape[0] < M.dim and (best is None or W.shape[0] < best.shape[0]):
            best = W
            if W.shape[0] == 1:
                break
    return best


def split_by_submodule(M: MatrixModule, W: np.ndarray):
    """(submodule, quotient) actions for an invariant row space W in RREF.

    Submodule coordinates are over the rows of W (pivot extraction);
    quotient coordinates are over the free columns."""
    ell = M.ell
    k = W.shape[0]
    pivots = [int(np.flatnonzero(r)[0]) for r in W]
    free = [j for j in range(M.dim) if j not in pivots]

    def reduce_row(v):
        v = v.copy() % ell
        for pc, r in zip(pivots, W):
            c = int(v[pc])
            if c:
                v = (v - c * r) % ell
        return v

    subs, quos = [], []
    for A in M.gens:
        S = np.zeros((k, k), dtype=np.int64)
        for i in range(k):
            img = (A @ W[i]) % ell
            S[:, i] = img[pivots]
            assert not reduce_row(img).any(), "claimed submodule is not invariant"
        Q = np.zeros((M.dim - k, M.dim - k), dtype=np.int64)
        for i, fc in enumerate(free):
            e = np.zeros(M.dim, dtype=np.int64)
            e[fc] = 1
            res = reduce_row((A @ e) % ell)
            Q[:, i] = res[free]
        subs.append(S)
        quos.append(Q)
    return (
        MatrixModule(k, M.ell, subs, M.provenance + ".sub"),
        MatrixModule(M.dim - k, M.ell, quos, M.provenance + ".quo"),
    )


@dataclass
class FactorReport:
    dims: list
    hashes: list
    complete: bool
    provenance: str
    method: str = "norton"

    def summary(self):
        return {
            "dims": self.dims,
            "hashes": self.hashes,
            "complete": self.complete,
            "provenance": self.provenance,
            "method": self.method,
        }


def composition_factors(M: MatrixModule, seed: int = 0) -> FactorReport:
    """Recursive splitting; factors reported as a sorted dimension list
    with action-matrix hashes."""
    if M.dim > DIM_CAP:
        raise ResourceError(f"dimension {M.dim} exceeds the cap {DIM_CAP}")
    factors: list[MatrixModule] = []
    complete = True
    stack = [M]
    while stack:
        cur = stack.pop()
        if cur.dim == 0:
            continue
        verdict = irreducibility_test(cur, seed=seed)
        if verdict.status == "inconclusive":
            try:
                W = minimal_submodule_exhaustive(cur)
            except ResourceError:
                factors.append(cur)
                complete = False
                continue
            if W is None:
                factors.append(cur)
                continue
            sub, quo = split_by_submodule(cur, W)
            stack.extend([sub, quo])
        elif verdict.status == "irreducible":
            factors.append(cur)
        else:
            sub, quo = split_by_submodule(cur, verdict.witness)
            stack.extend([sub, quo])
    dims = sorted(f.dim for f in factors)
    assert sum(dims) == M.dim, "factor dimensions must sum to the module dimension"
    hashes = [f.hash() for f in sorted(factors, key=lambda f: f.dim)]
    return FactorReport(dims, hashes, complete, M.provenance)


# ---------------------------------------------------------------------------
# independent oracle: submodule lattice + exhaustive chain verification


def _rows_key(W: np.ndarray) -> bytes:
    return W.shape[0].to_bytes(4, "big") + W.tobytes()


def _intersect_rowspaces(A: np.ndarray, B: np.ndarray, ell: int) -> np.ndarray:
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((0, A.shape[1]), dtype=np.int64)
    st = np.vstack([A, B]) % ell
    N = nullspace_mod(st.T, ell)  # rows c with c @ st = 0
    out = Echelon(PrimeField(ell), A.shape[1])
    for c in N:
        v = (c[: A.shape[0]] @ A) % ell
        out.add(v)
    return out.dense_rows()


def _sum_rowspaces(A: np.ndarray, B: np.ndarray, ell: int) -> np.ndarray:
    out = Echelon(PrimeField(ell), A.shape[1])
    for v in list(A) + list(B):
        out.add(v)
    return out.dense_rows()


def spin_oracle_factors(M: MatrixModule, pool, lattice_cap: int = 200) -> list[int]:
    """Composition-factor dimensions via an explicit submodule chain:
    spin the pool vectors, close the resulting set of submodules under
    sum and intersection, extract a maximal chain, and certify each
    chain quotient irreducible by exhaustive projective spins."""
    ell = M.ell
    subs: dict[bytes, np.ndarray] = {}
    zero = np.zeros((0, M.dim), dtype=np.int64)
    full = np.eye(M.dim, dtype=np.int64)
    for v in pool:
        W = spin_vector(M, np.asarray(v, dtype=np.int64))
        subs[_rows_key(W)] = W
    subs[_rows_key(zero)] = zero
    subs[_rows_key(full)] = full
    changed = True
    while changed and len(subs) < lattice_cap:
        changed = False
        items = list(subs.values())
        for A, B in itertools.combinations(items, 2):
            for C in (_intersect_rowspaces(A, B, ell), _sum_rowspaces(A, B, ell)):
                k = _rows_key(C)
                if k not in subs:
                    subs[k] = C
                    changed = True
    # maximal chain from 0 to the full space
    chain = [zero]
    while chain[-1].shape[0] < M.dim:
        cur = chain[-1]
        best = None
        for W in subs.values():
            if W.shape[0] <= cur.shape[0]:
                continue
            # cur subset of W?
            ech = Echelon(PrimeField(ell), M.dim)
            for r in W:
                ech.add(r)
            if all(ech.contains(r) for r in cur):
                if best is None or W.shape[0] < best.shape[0]:
                    best = W
        if best is None:
            break
        chain.append(best)
    if chain[-1].shape[0] != M.dim:
        raise AssertionError("submodule lattice produced no chain to the full module")
    dims = [hi.shape[0] - lo.shape[0] for lo, hi in zip(chain, chain[1:])]
    # certify each chain quotient irreducible by exhaustive spins
    for lo, hi in zip(chain, chain[1:]):
        Q = chain_quotient(M, lo, hi)
        if not exhaustive_irreducible(Q):
            raise AssertionError("oracle chain quotient is not irreducible")
    return sorted(dims)


def chain_quotient(M: MatrixModule, lo: np.ndarray, hi: np.ndarray) -> MatrixModule:
    """The module hi/lo for invariant row spaces lo inside hi (both RREF)."""
    ell = M.ell
    if hi.shape[0] < M.dim:
        top, _ = split_by_submodule(M, hi)
        if lo.shape[0] == 0:
            return top
        # coordinates of lo over the rows of hi: pivot extraction
        hpiv = [int(np.flatnonzero(r)[0]) for r in hi]
        ech = Echelon(PrimeField(ell), top.dim)
        for r in lo:
            ech.add(r[hpiv] % ell)
        _, Q = split_by_submodule(top, ech.dense_rows())
        return Q
    if lo.shape[0] == 0:
        return M
    _, Q = split_by_submodule(M, lo)
    return Q
