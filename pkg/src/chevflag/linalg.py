"""Dense exact linear algebra over prime fields (numpy int64) and over Q.

Everything is deterministic: echelon bases are in reduced row-echelon
form with unit pivots, and insertion order is the caller's order.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import ConfigError, DomainError
from .fields import is_prime


class PrimeField:
    kind = "prime"

    def __init__(self, ell: int):
        if not is_prime(ell):
            raise ConfigError(f"coefficient field F_{ell}: {ell} is not prime")
        self.ell = ell
        self.char = ell
        self.name = f"F{ell}"

    def vec(self, items, n):
        v = np.zeros(n, dtype=np.int64)
        for i, c in items:
            v[i] = c % self.ell
        return v

    def zeros(self, n):
        return np.zeros(n, dtype=np.int64)

    def inv(self, a: int) -> int:
        a %= self.ell
        if a == 0:
            raise DomainError("zero has no inverse")
        return pow(int(a), self.ell - 2, self.ell)

    def __repr__(self):
        return self.name

    def __eq__(self, other):
        return isinstance(other, PrimeField) and self.ell == other.ell

    def __hash__(self):
        return hash(("prime", self.ell))


class RationalField:
    kind = "qq"
    char = 0
    name = "Q"

    def vec(self, items, n):
        v = [Fraction(0)] * n
        for i, c in items:
            v[i] = Fraction(c)
        return v

    def zeros(self, n):
        return [Fraction(0)] * n

    def inv(self, a):
        a = Fraction(a)
        if a == 0:
            raise DomainError("zero has no inverse")
        return 1 / a

    def __repr__(self):
        return "Q"

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("qq")


QQ = RationalField()


def coeff_field(spec: str):
    """Parse a coefficient-field spec: 'F5', 'F2', ... or 'Q'."""
    s = spec.strip()
    if s in ("Q", "QQ", "q"):
        return QQ
    if s and s[0] in "Ff" and s[1:].isdigit():
        return PrimeField(int(s[1:]))
    raise ConfigError(f"cannot parse coefficient field {spec!r}")


class Echelon:
    """Incremental reduced row echelon basis, optionally tracking each
    stored row as a combination of the inserted vectors."""

    def __init__(self, field, n: int, track: bool = False):
        self.field = field
        self.n = n
        self.track = track
        self.rows: list = []
        self.pivots: list[int] = []
        self.exprs: list[dict] = []
        self.kept = 0

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _is_zero(self, v) -> bool:
        if self.field.kind == "prime":
            return not v.any()
        return all(x == 0 for x in v)

    def reduce(self, v):
        """Return (residue, combo) with v = sum(combo[k] * row_k) + residue."""
        F = self.field
        combo: dict[int, object] = {}
        if F.kind == "prime":
            ell = F.ell
            v = v.copy() % ell
            for k, pc in enumerate(self.pivots):
                c = int(v[pc])
                if c:
                    v = (v - c * self.rows[k]) % ell
                    if self.track:
                        combo[k] = c
        else:
            v = list(v)
            for k, pc in enumerate(self.pivots):
                c = v[pc]
                if c:
                    row = self.rows[k]
                    v = [x - c * y for x, y in zip(v, row)]
                    if self.track:
                        combo[k] = c
        return v, combo

    def add(self, v) -> bool:
        """Insert v; True if the rank increased."""
        F = self.field
        res, combo = self.reduce(v)
        if self._is_zero(res):
            return False
        if F.kind == "prime":
            pc = int(np.flatnonzero(res)[0])
            inv = F.inv(int(res[pc]))
            row = (res * inv) % F.ell
        else:
            pc = next(i for i, x in enumerate(res) if x != 0)
            inv = 1 / res[pc]
            row = [x * inv for x in res]
        expr = None
        if self.track:
            expr = {self.kept: inv if F.kind != "prime" else int(inv)}
            for k, c in combo.items():
                prev = self.exprs[k]
                for src, cc in prev.items():
                    if F.kind == "prime":
                        val = (expr.get(src, 0) - inv * c * cc) % F.ell
                    else:
                        val = expr.get(src, 0) - inv * c * cc
                    if val:
                        expr[src] = val
                    else:
                        expr.pop(src, None)
        # back-eliminate to keep reduced form
        for k in range(len(self.rows)):
            c = self.rows[k][pc]
            if c:
                if F.kind == "prime":
                    self.rows[k] = (self.rows[k] - int(c) * row) % F.ell
                else:
                    self.rows[k] = [x - c * y for x, y in zip(self.rows[k], row)]
                if self.track:
                    ek = self.exprs[k]
                    for src, cc in expr.items():
                        if F.kind == "prime":
                            val = (ek.get(src, 0) - int(c) * cc) % F.ell
                        else:
                            val = ek.get(src, 0) - c * cc
                        if val:
                            ek[src] = val
                        else:
                            ek.pop(src, None)
        pos = 0
        while pos < len(self.pivots) and self.pivots[pos] < pc:
            pos += 1
        self.rows.insert(pos, row)
        self.pivots.insert(pos, pc)
        if self.track:
            self.exprs.insert(pos, expr)
        self.kept += 1
        return True

    def contains(self, v) -> bool:
        res, _ = self.reduce(v)
        return self._is_zero(res)

    def coords(self, v):
        """Coefficients over the inserted (kept) vectors, or None."""
        assert self.track
        res, combo = self.reduce(v)
        if not self._is_zero(res):
            return None
        F = self.field
        out: dict[int, object] = {}
        for k, c in combo.items():
            for src, cc in self.exprs[k].items():
                if F.kind == "prime":
                    val = (out.get(src, 0) + c * cc) % F.ell
                else:
                    val = out.get(src, 0) + c * cc
                if val:
                    out[src] = val
                else:
                    out.pop(src, None)
        return out

    def dense_rows(self):
        if self.field.kind == "prime":
            if not self.rows:
                return np.zeros((0, self.n), dtype=np.int64)
            return np.stack(self.rows)
        return [list(r) for r in self.rows]


def nullspace_mod(A: np.ndarray, ell: int) -> np.ndarray:
    """Basis (rows) of the right nullspace of A over F_ell."""
    A = A.copy() % ell
    m, n = A.shape
    piv_cols: list[int] = []
    r = 0
    for c in range(n):
        pr = None
        for i in range(r, m):
            if A[i, c] % ell:
                pr = i
                break
        if pr is None:
            continue
        if pr != r:
            A[[r, pr]] = A[[pr, r]]
        inv = pow(int(A[r, c]), ell - 2, ell)
        A[r] = (A[r] * inv) % ell
        for i in range(m):
            if i != r and A[i, c]:
                A[i] = (A[i] - int(A[i, c]) * A[r]) % ell
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in piv_cols]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(piv_cols):
            basis[k, pc] = (-int(A[i, fc])) % ell
    return basis


def rank_mod(A: np.ndarray, ell: int) -> int:
    n = A.shape[1]
    return n - nullspace_mod(A, ell).shape[0]


def matmul_mod(A: np.ndarray, B: np.ndarray, ell: int) -> np.ndarray:
    return (A.astype(np.int64) @ B.astype(np.int64)) % ell


def mat_hash(A: np.ndarray, ell: int) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(f"{A.shape[0]}x{A.shape[1]}:{ell}:".encode())
    h.update((A % ell).astype(np.int64).tobytes())
    return h.hexdigest()[:16]
