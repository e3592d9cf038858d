"""Exact arithmetic in small finite fields GF(p^k).

Field elements are plain ints in ``range(q)``: the base-p digits of an
int are its coordinates in the polynomial basis 1, x, ..., x^(k-1)
modulo a canonical primitive polynomial.  The canonical polynomial per
(p, k) is found by a deterministic search that enforces subfield
compatibility along divisor chains (Conway-style), so the power-map
embedding GF(p^a) -> GF(p^k) for a | k is a field homomorphism.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .errors import ConfigError, DomainError

Q_CAP = 64


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# polynomial helpers over Z/p; polys are coefficient tuples, low degree first

def _pmul(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return tuple(out)


def _pmod(a, f, p):
    """Reduce a modulo the monic polynomial f; result has len(f)-1 coords."""
    a = [x % p for x in a]
    df = len(f) - 1
    while len(a) > df:
        lead = a.pop()
        if lead:
            base = len(a) - df
            for i in range(df):
                a[base + i] = (a[base + i] - lead * f[i]) % p
    while len(a) < df:
        a.append(0)
    return tuple(a)


def _ppowmod(a, e, f, p):
    r = _pmod((1,), f, p)
    b = _pmod(a, f, p)
    while e:
        if e & 1:
            r = _pmod(_pmul(r, b, p), f, p)
        b = _pmod(_pmul(b, b, p), f, p)
        e >>= 1
    return r


def _is_irreducible(f, p):
    k = len(f) - 1
    if k == 1:
        return True
    for d in range(1, k // 2 + 1):
        for coeffs in itertools.product(range(p), repeat=d):
            g = (*coeffs, 1)
            # trial division: remainder of f mod g
            rem = list(f)
            dg = d
            while len(rem) - 1 >= dg:
                lead = rem.pop()
                if lead:
                    base = len(rem) - dg
                    for i in range(dg):
                        rem[base + i] = (rem[base + i] - lead * g[i]) % p
            if not any(rem):
                return False
    return True


def _is_primitive(f, p):
    """x generates the multiplicative group of F_p[x]/(f)."""
    k = len(f) - 1
    q = p**k
    if _ppowmod((0, 1), q - 1, f, p) != _pmod((1,), f, p):
        return False
    for r in prime_factors(q - 1):
        if _ppowmod((0, 1), (q - 1) // r, f, p) == _pmod((1,), f, p):
            return False
    return True


def _min_poly(y, f, p):
    """Minimal polynomial over F_p of the residue class y in F_p[x]/(f)."""
    k = len(f) - 1
    powers = [_pmod((1,), f, p)]
    for _ in range(k):
        powers.append(_pmod(_pmul(powers[-1], y, p), f, p))
    # find least d with 1, y, ..., y^d dependent; solve the dependency
    for d in range(1, k + 1):
        # rows: coordinate vectors of y^0..y^d; find kernel vector with
        # last coordinate 1 by Gaussian elimination on the transpose
        mat = [list(powers[j]) for j in range(d + 1)]
        # eliminate to express y^d in terms of lower powers
        cols = k
        piv = {}
        work = [row[:] for row in mat[:d]]
        coefs = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
        for r in range(d):
            # normalize row r against previous pivots
            for c, pr in piv.items():
                factor = work[r][c]
                if factor:
                    for cc in range(cols):
                        work[r][cc] = (work[r][cc] - factor * work[pr][cc]) % p
                    for cc in range(d):
                        coefs[r][cc] = (coefs[r][cc] - factor * coefs[pr][cc]) % p
            lead = next((c for c in range(cols) if work[r][c]), None)
            if lead is None:
                continue
            inv = pow(work[r][lead], p - 2, p)
            for cc in range(cols):
                work[r][cc] = work[r][cc] * inv % p
            for cc in range(d):
                coefs[r][cc] = coefs[r][cc] * inv % p
            piv[lead] = r
        target = list(mat[d])
        combo = [0] * d
        for c, pr in piv.items():
            factor = target[c]
            if factor:
                for cc in range(cols):
                    target[cc] = (target[cc] - factor * work[pr][cc]) % p
                for cc in range(d):
                    combo[cc] = (combo[cc] + factor * coefs[pr][cc]) % p
        if not any(target):
            # y^d = sum combo[j] y^j  ->  minpoly = x^d - sum combo[j] x^j
            return tuple((-combo[j]) % p for j in range(d)) + (1,)
    raise AssertionError("element has no minimal polynomial of degree <= k")


@lru_cache(maxsize=None)
def canonical_poly(p: int, k: int) -> tuple[int, ...]:
    """Deterministic primitive polynomial for GF(p^k), compatible with the
    canonical polynomials of all proper subfields under the power map."""
    q = p**k
    for coeffs in itertools.product(range(p), repeat=k):
        if coeffs[0] == 0:
            continue
        f = (*coeffs, 1)
        if not _is_irreducible(f, p):
            continue
        if not _is_primitive(f, p):
            continue
        ok = True
        for a in range(1, k):
            if k % a:
                continue
            e = (q - 1) // (p**a - 1)
            y = _ppowmod((0, 1), e, f, p)
            if _min_poly(y, f, p) != canonical_poly(p, a):
                ok = False
                break
        if ok:
            return f
    raise AssertionError(f"no canonical polynomial found for GF({p}^{k})")


# ---------------------------------------------------------------------------


class FiniteField:
    """GF(p^k) with int-coded elements; q <= 64."""

    def __init__(self, p: int, k: int):
        if not is_prime(p):
            raise ConfigError(f"characteristic {p} is not prime")
        q = p**k
        if k < 1 or q > Q_CAP:
            raise ConfigError(f"field size {q} exceeds the supported cap {Q_CAP}")
        self.p = p
        self.k = k
        self.q = q
        self.poly = canonical_poly(p, k)
        self.zero = 0
        self.one = 1
        if k == 1:
            self.gen = (-self.poly[0]) % p if p > 2 else 1
        else:
            self.gen = p  # the class of x
        self._build_tables()

    def _build_tables(self):
        p, k, q = self.p, self.k, self.q
        # exp/log tables for multiplication
        exp = [0] * (q - 1)
        cur = (1,) + (0,) * (k - 1)
        genco = self.coords(self.gen)
        for e in range(q - 1):
            exp[e] = self.from_coords(cur)
            cur = _pmod(_pmul(cur, genco, p), self.poly, p)
        assert self.from_coords(cur) == 1, "generator is not primitive"
        log = [0] * q
        for e, v in enumerate(exp):
            log[v] = e
        self._exp, self._log = exp, log
        assert sorted(exp) == list(range(1, q)), "exp table is not a bijection"

    # -- element codecs ----------------------------------------------------
    def coords(self, a: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.k):
            out.append(a % self.p)
            a //= self.p
        return tuple(out)

    def from_coords(self, co) -> int:
        a = 0
        for c in reversed(list(co)):
            a = a * self.p + (c % self.p)
        return a

    # -- arithmetic ----------------------------------------------------------
    def add(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a + b) % self.p
        ca, cb = self.coords(a), self.coords(b)
        return self.from_coords((x + y) % self.p for x, y in zip(ca, cb))

    def neg(self, a: int) -> int:
        if self.k == 1:
            return (-a) % self.p
        return self.from_coords((-x) % self.p for x in self.coords(a))

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]

    def inv(self, a: int) -> int:
        if a == 0:
            raise DomainError("zero has no multiplicative inverse")
        return self._exp[(-self._log[a]) % (self.q - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pw(self, a: int, e: int) -> int:
        if a == 0:
            if e <= 0:
                raise DomainError("0**e undefined for e <= 0")
            return 0
        return self._exp[(self._log[a] * e) % (self.q - 1)]

    # -- iteration -----------------------------------------------------------
    def elements(self):
        return range(self.q)

    def units(self):
        return range(1, self.q)

    def embed_into(self, other: "FiniteField") -> tuple[int, ...]:
        """The canonical embedding table into a compatible larger field."""
        if other.p != self.p or other.k % self.k:
            raise DomainError(
                f"GF({self.p}^{self.k}) does not embed into GF({other.p}^{other.k})"
            )
        stride = (other.q - 1) // (self.q - 1)
        table = [0] * self.q
        for a in range(1, self.q):
            table[a] = other._exp[(self._log[a] * stride) % (other.q - 1)]
        # compatibility of canonical polynomials makes this a field hom;
        # cheap exhaustive check while q is small
        for a in range(self.q):
            for b in range(self.q):
                assert table[self.add(a, b)] == other.add(table[a], table[b])
        return tuple(table)

    def __repr__(self):
        return f"GF({self.q})"

    def __eq__(self, other):
        return isinstance(other, FiniteField) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash((self.p, self.k))


@lru_cache(maxsize=None)
def GF(p: int, k: int = 1) -> FiniteField:
    return FiniteField(p, k)


def GFq(q: int) -> FiniteField:
    """The field with q elements (q a prime power <= 64)."""
    for p in range(2, q + 1):
        if not is_prime(p):
            continue
        k, t = 0, 1
        while t < q:
            t *= p
            k += 1
        if t == q:
            return GF(p, k)
    raise ConfigError(f"{q} is not a prime power in the supported range")
