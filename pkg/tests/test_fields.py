import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chevflag.errors import ConfigError, DomainError
from chevflag.fields import GF, GFq, canonical_poly

FIELDS = [GFq(q) for q in (2, 3, 4, 5, 8, 9, 16, 25)]


@pytest.mark.parametrize("F", FIELDS, ids=lambda F: repr(F))
def test_field_axioms_exhaustive_small(F):
    for a in F.elements():
        assert F.add(a, 0) == a
        assert F.mul(a, 1) == a
        assert F.add(a, F.neg(a)) == 0
        for b in F.elements():
            assert F.add(a, b) == F.add(b, a)
            assert F.mul(a, b) == F.mul(b, a)
    for a in F.units():
        assert F.mul(a, F.inv(a)) == 1


@settings(max_examples=300)
@given(
    st.sampled_from(FIELDS),
    st.integers(0, 63),
    st.integers(0, 63),
    st.integers(0, 63),
)
def test_associativity_distributivity(F, a, b, c):
    a, b, c = a % F.q, b % F.q, c % F.q
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


def test_coords_roundtrip():
    F = GFq(16)
    for a in F.elements():
        assert F.from_coords(F.coords(a)) == a
        assert len(F.coords(a)) == 4


def test_generator_has_full_order():
    for F in FIELDS:
        seen = set()
        x = 1
        for _ in range(F.q - 1):
            seen.add(x)
            x = F.mul(x, F.gen)
        assert len(seen) == F.q - 1


def test_subfield_embedding_exactly_for_divisors():
    F16, F4, F8, F2 = GFq(16), GFq(4), GFq(8), GFq(2)
    emb = F4.embed_into(F16)
    for a in F4.elements():
        for b in F4.elements():
            assert emb[F4.mul(a, b)] == F16.mul(emb[a], emb[b])
    assert len(set(emb)) == 4
    # image is the unique subfield of order 4: closed under the ops
    img = set(emb)
    for a in img:
        for b in img:
            assert F16.add(a, b) in img and F16.mul(a, b) in img
    with pytest.raises(DomainError):
        F8.embed_into(F16)  # 3 does not divide 4
    assert set(F2.embed_into(F16)) == {0, 1}


def test_embedding_tower_compatible():
    F2, F4, F16 = GFq(2), GFq(4), GFq(16)
    e24 = F2.embed_into(F4)
    e416 = F4.embed_into(F16)
    e216 = F2.embed_into(F16)
    for a in F2.elements():
        assert e416[e24[a]] == e216[a]


def test_canonical_polys_deterministic_and_conway_like():
    assert canonical_poly(2, 1) == (1, 1)
    assert canonical_poly(2, 2) == (1, 1, 1)
    # x^4 + x^3 + 1: the classical Conway polynomial for GF(16)
    assert canonical_poly(2, 4) == (1, 0, 0, 1, 1)


def test_field_caps_and_errors():
    with pytest.raises(ConfigError):
        GF(4, 1)  # 4 is not prime
    with pytest.raises(ConfigError):
        GF(2, 7)  # 128 > cap
    with pytest.raises(ConfigError):
        GFq(12)  # not a prime power
    F = GFq(5)
    with pytest.raises(DomainError):
        F.inv(0)
