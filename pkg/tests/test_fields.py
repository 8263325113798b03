import random

import pytest
from hypothesis import given, settings, strategies as st

from ssendo.fields import (
    FieldContext,
    NotPrime,
    Poly,
    TooSmall,
    extend_tower,
    f2_factor_deg_le2,
    f2_quadratic_roots,
    factor_int,
    frobenius,
    is_prime,
    make_field,
    mult_order,
    roots_in_field,
)


def test_make_field_p7_uses_x2_plus_1():
    ctx = make_field(7)
    # -1 is a non-residue mod 7 since 7 = 3 mod 4, so x^2 + 1 is the modulus
    assert ctx.c == 1
    assert ctx.s == 6


def test_make_field_rejects_composites_and_tiny():
    with pytest.raises(NotPrime):
        make_field(4)
    with pytest.raises(TooSmall):
        make_field(3)
    with pytest.raises(TooSmall):
        make_field(2)


def test_make_field_101_modulus_irreducible_by_exhaustive_scan():
    ctx = make_field(101)
    # x^2 + c must have no root among all 101 prime-field elements
    assert all((x * x + ctx.c) % 101 != 0 for x in range(101))


def test_field_axioms_randomized():
    ctx = make_field(103)
    rng = random.Random(0)
    one = ctx.one()
    for _ in range(300):
        x = ctx.random_element(1, rng)
        y = ctx.random_element(1, rng)
        z = ctx.random_element(1, rng)
        assert (x + y) + z == x + (y + z)
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z
        if x:
            assert x * x.inverse() == one


@given(st.integers(0, 102), st.integers(0, 102), st.integers(0, 102), st.integers(0, 102))
@settings(max_examples=250, deadline=None)
def test_frobenius_is_ring_homomorphism(a, b, c, d):
    ctx = _CTX103
    x = ctx.fp2(a, b)
    y = ctx.fp2(c, d)
    assert frobenius(x * y) == frobenius(x) * frobenius(y)
    assert frobenius(x + y) == frobenius(x) + frobenius(y)


_CTX103 = make_field(103)


def test_frobenius_fixed_field_and_orbit():
    ctx = make_field(7)
    x = ctx.fp2(5)
    assert frobenius(x) == x
    y = ctx.fp2(2, 3)
    fy = frobenius(y)
    assert fy != y
    assert frobenius(fy) == y  # Galois orbit of degree 2
    k = extend_tower(ctx, 3)
    rng = random.Random(1)
    z = ctx.random_element(k, rng)
    w = z
    for _ in range(2 * k):
        w = w.frobenius()
    assert w == z  # Gal(F_{p^{2k}}/F_p) is cyclic of order 2k


def test_tower_levels():
    ctx = make_field(7)
    assert extend_tower(ctx, 1) == 1
    extend_tower(ctx, 2)
    # multiplicative order of a generator divides 7^4 - 1 and not 7^2 - 1
    rng = random.Random(3)
    found = False
    for _ in range(60):
        g = ctx.random_element(2, rng)
        if not g:
            continue
        o = _mult_order_elem(g, 7 ** 4 - 1)
        assert (7 ** 4 - 1) % o == 0
        if (7 ** 2 - 1) % o != 0:
            found = True
            break
    assert found, "no element of full-ish order found"


def _mult_order_elem(g, group_order):
    o = group_order
    for q in factor_int(group_order):
        while o % q == 0 and g ** (o // q) == g.ctx.one(g.level):
            o //= q
    return o


def test_tower_p13_k3_modulus_has_no_root_below():
    ctx = make_field(13)
    extend_tower(ctx, 3)
    mod = ctx.levels[3].modulus
    f = Poly(ctx, 1, list(mod))
    # exhaustive scan over all 169 elements of F_{13^2}
    for a in range(13):
        for b in range(13):
            assert f.evaluate(ctx.fp2(a, b)) != 0


def test_roots_in_field_examples():
    ctx = make_field(7)
    rng = random.Random(0)
    f = Poly.from_ints(ctx, [-1, 0, 1])  # Y^2 - 1
    rts = roots_in_field(f, 1, rng)
    assert sorted(r.raw for r, _ in rts) == [(1, 0), (6, 0)]
    g = Poly.from_ints(ctx, [1, 0, 1])  # Y^2 + 1: no roots in F_7, two in F_49
    rts2 = roots_in_field(g, 1, rng)
    assert len(rts2) == 2 and all(r.raw[1] != 0 for r, _ in rts2)


def test_roots_against_exhaustive_scan():
    ctx = make_field(7)
    rng = random.Random(5)
    # a division-polynomial-shaped quartic: compare against brute force
    coeffs = [3, 0, 6 * 3 % 7, 12 * 5 % 7, 3]
    f = Poly.from_ints(ctx, coeffs)
    rts = {r.raw: m for r, m in roots_in_field(f, 1, rng)}
    brute = {}
    for a in range(7):
        for b in range(7):
            x = ctx.fp2(a, b)
            if f.evaluate(x) == 0:
                mult = 0
                rem = f
                lin = Poly(ctx, 1, [(-x).raw, ctx.fp2(1).raw])
                while True:
                    q, r = rem.divmod(lin)
                    if not r.is_zero():
                        break
                    mult += 1
                    rem = q
                brute[x.raw] = mult
    assert rts == brute
    assert sum(rts.values()) <= f.degree()


def test_roots_multiplicity():
    ctx = make_field(11)
    rng = random.Random(2)
    x0 = ctx.fp2(4, 1)
    lin = Poly(ctx, 1, [(-x0).raw, ctx.fp2(1).raw])
    f = lin * lin * Poly.from_ints(ctx, [1, 1])
    rts = dict((r.raw, m) for r, m in roots_in_field(f, 1, rng))
    assert rts[x0.raw] == 2
    assert rts[(-ctx.fp2(1)).raw] == 1


def test_poly_divmod_and_gcd():
    ctx = make_field(101)
    rng = random.Random(7)
    for _ in range(40):
        f = Poly(ctx, 1, [ctx.random_element(1, rng).raw for _ in range(6)])
        g = Poly(ctx, 1, [ctx.random_element(1, rng).raw for _ in range(3)])
        if g.is_zero():
            continue
        q, r = f.divmod(g)
        assert q * g + r == f
        assert r.is_zero() or r.degree() < g.degree()
        d = (f * g).gcd(g)
        assert d.coeffs[-1] == (1, 0)  # monic
        assert ((f * g) % d).is_zero() and (g % d).is_zero()


def test_quadratic_roots_and_small_factoring():
    ctx = make_field(103)
    rng = random.Random(9)
    for _ in range(40):
        r1 = ctx.random_element(1, rng)
        r2 = ctx.random_element(1, rng)
        c1 = (-(r1 + r2)).raw
        c0 = (r1 * r2).raw
        got = f2_quadratic_roots(ctx, c1, c0)
        assert sorted(got) == sorted({r1.raw, r2.raw})
    # degree <= 2 factorization round trip
    q1 = Poly.from_ints(ctx, [5, 0, 1])
    q2 = Poly.from_ints(ctx, [7, 1, 1])
    lin = Poly.from_ints(ctx, [3, 1])
    f = q1 * q2 * lin
    roots, quads = f2_factor_deg_le2(ctx, f.coeffs, rng)
    prod = Poly.from_ints(ctx, [1])
    for rr in roots:
        prod = prod * Poly(ctx, 1, [ctx.neg(1, rr), (1, 0)])
    for qq in quads:
        prod = prod * Poly(ctx, 1, qq)
    assert prod.monic() == f.monic()


def test_sqrt_all_levels():
    ctx = make_field(13)
    rng = random.Random(11)
    for k in (1, 2, 3):
        extend_tower(ctx, k)
        for _ in range(30):
            x = ctx.random_element(k, rng)
            s = (x * x).sqrt()
            assert s == x or s == -x


def test_serialization_round_trip():
    ctx = make_field(103)
    rng = random.Random(4)
    extend_tower(ctx, 3)
    for k in (1, 3):
        x = ctx.random_element(k, rng)
        data = x.to_json()
        assert all(isinstance(v, str) for part in data for v in
                   (part if isinstance(part, list) else [part]))
        assert ctx.elem_from_json(k, data) == x


def test_mult_order_helper():
    assert mult_order(2, 7) == 3
    assert mult_order(103, 13) == mult_order(103 % 13, 13)
    assert mult_order(7, 48) == 2  # 7^2 = 49 = 1 mod 48


def test_is_prime_basics():
    assert is_prime(2) and is_prime(10007) and is_prime(1048583)
    assert not is_prime(1) and not is_prime(10006)
