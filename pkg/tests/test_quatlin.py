import random
from fractions import Fraction
from math import gcd

import pytest

from ssendo.quatlin import (
    Degenerate,
    HabModel,
    NotASquare,
    NotFullRank,
    NotPerfectSquare,
    QLattice,
    QuatAlgebra,
    QuatElement,
    discrd,
    extend_order,
    gamma_to_hab,
    index_q_overorders,
    is_order,
    lattice_from_rows,
    ldl_to_algebra,
    maximal_overorders,
    mult_table_from_gram,
    order_from_generators,
    p_saturate,
    random_max_order,
    right_order,
    standard_max_order,
    two_sided_P,
    gram_of_basis,
    _det4,
)


def test_standard_max_orders_all_congruence_classes():
    for p in (11, 13, 103, 1009, 10007, 65537, 131101):
        model, O = standard_max_order(p)
        assert is_order(model, O)
        assert discrd(model, O) == p


def test_quat_element_arithmetic():
    model = HabModel(QuatAlgebra(Fraction(-1), Fraction(-11)))
    i = QuatElement(model, (0, 1, 0, 0))
    j = QuatElement(model, (0, 0, 1, 0))
    k = i * j
    assert k.coords == (0, 0, 0, 1)
    assert (j * i).coords == (0, 0, 0, -1)  # ij = -ji
    assert (i * i).coords == (-1, 0, 0, 0)
    assert i.trd() == 0 and i.nrd() == 1
    x = QuatElement(model, (2, 3, -1, 5))
    assert x.trd() == 4
    assert (x * x.conjugate()).coords == (x.nrd(), 0, 0, 0)


def test_two_sided_ideal_and_index_p_suborder():
    p = 11
    model, O = standard_max_order(p)
    P = two_sided_P(model, O, p)
    assert P.index_in(O) == p * p
    ZP = P.sum_with_rows([model.one()])
    assert is_order(model, ZP)
    assert ZP.index_in(O) == p
    assert P.index_in(ZP) == p
    assert discrd(model, ZP) == p * p
    # P^2 <= pO (p ramified)
    Op = O.scale(Fraction(p))
    PB = P.basis_rows()
    assert all(Op.contains(model.mult(x, y)) for x in PB for y in PB)
    # reduced norm of P is p: gcd of the norm form values on P
    vals = [model.nrd(x) for x in PB]
    vals += [model.nrd(tuple(a + b for a, b in zip(x, y))) for x in PB for y in PB]
    g = 0
    for v in vals:
        g = gcd(g, int(v))
    assert g == p


def test_p_saturate_and_unique_maximal_overorder():
    p = 11
    model, O = standard_max_order(p)
    P = two_sided_P(model, O, p)
    ZP = P.sum_with_rows([model.one()])
    M = p_saturate(model, ZP, p)
    assert M == O
    assert p_saturate(model, M, p) == M  # idempotent
    ovs = maximal_overorders(model, ZP, p)
    assert len(ovs) == 1 and ovs[0] == O


def test_order_from_generators_examples():
    model = HabModel(QuatAlgebra(Fraction(-1), Fraction(-11)))
    L = order_from_generators(model, [(0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)])
    assert L.den == 1 and L.mat == ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    assert discrd(model, L) == 44  # index 4 over the maximal order
    with pytest.raises(NotFullRank):
        lattice_from_rows([(1, 0, 0, 0), (0, 1, 0, 0)])


def test_extend_order_monotone_discrd():
    p = 11
    model, O = standard_max_order(p)
    ZP = two_sided_P(model, O, p).sum_with_rows([model.one()])
    # adjoining an element of the order keeps it fixed
    same = extend_order(model, ZP, ZP.basis_rows()[2])
    assert same == ZP
    # adjoining a maximal-order element outside Z+P strictly divides discrd
    extra = next(row for row in O.basis_rows() if not ZP.contains(row))
    out = extend_order(model, ZP, extra)
    assert discrd(model, ZP) % discrd(model, out) == 0
    assert discrd(model, out) < discrd(model, ZP)


def test_discrd_multiplicativity_on_containment():
    p = 13
    model, O = standard_max_order(p)
    ZP = two_sided_P(model, O, p).sum_with_rows([model.one()])
    assert discrd(model, ZP) == ZP.index_in(O) * discrd(model, O)


def test_ldl_to_algebra_diagonal_case():
    G = [[2, 0, 0, 0], [0, 2 * 3, 0, 0], [0, 0, 2 * 5, 0], [0, 0, 0, 2 * 15]]
    alg, L, c = ldl_to_algebra(G)
    assert (alg.a, alg.b, c) == (Fraction(-3), Fraction(-5), Fraction(1))
    assert all(L[i][i] == 1 for i in range(4))
    # reconstruction L D L^T = G is implicit in the solver; check the map
    # preserves the quadratic form
    model = HabModel(alg)
    rng = random.Random(0)
    for _ in range(30):
        x = tuple(Fraction(rng.randrange(-9, 10)) for _ in range(4))
        q = sum(G[i][j] * x[i] * x[j] for i in range(4) for j in range(4)) / 2
        assert model.nrd(gamma_to_hab(L, c, x)) == q


def test_ldl_errors():
    with pytest.raises(Degenerate):
        ldl_to_algebra([[2, 0, 0, 0], [0, 0, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]])
    with pytest.raises(NotASquare):
        # 2 d3/(d1 d2) = 7: not a rational square
        ldl_to_algebra([[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [0, 0, 0, 14]])


def test_mult_table_from_gram_properties():
    G = [[2, 0, 0, 0], [0, 6, 0, 0], [0, 0, 10, 0], [0, 0, 0, 30]]
    tm = mult_table_from_gram(G, 1)
    rng = random.Random(1)
    # Nrd through the table matches the half Gram form
    for _ in range(40):
        x = tuple(Fraction(rng.randrange(-6, 7)) for _ in range(4))
        assert tm.nrd(x) == sum(G[i][j] * x[i] * x[j] for i in range(4) for j in range(4)) / 2
    # diagonal rule: gamma_r^2 = -G_rr/2
    for r in (1, 2, 3):
        e = tuple(Fraction(1 if t == r else 0) for t in range(4))
        assert tm.mult(e, e) == (Fraction(-G[r][r], 2), 0, 0, 0)
    # Prop-A determinant identity through the table
    e1 = (0, 1, 0, 0)
    e2 = (0, 0, 1, 0)
    e3c = (Fraction(0), Fraction(0), Fraction(0), Fraction(-1))  # conj of gamma_3
    t3 = tm.trd(tm.mult(tm.mult(e1, e2), e3c))
    assert (2 * t3) ** 2 == _det4([[Fraction(v) for v in r] for r in G])
    # sign flip conjugates the gamma_3 component
    tm2 = mult_table_from_gram(G, -1)
    a = tm.mult(e1, e2)
    b = tm2.mult(e1, e2)
    assert a[3] == -b[3] and a[:3] == b[:3]


def test_mult_table_not_perfect_square():
    G = [[2, 0, 0, 0], [0, 6, 1, 0], [0, 1, 10, 0], [0, 0, 0, 30]]
    from ssendo.quatlin import _det4 as det

    if _is_square_int(int(det([[Fraction(v) for v in r] for r in G]))):
        pytest.skip("example accidentally square")
    with pytest.raises(NotPerfectSquare):
        mult_table_from_gram(G, 1)


def _is_square_int(n):
    from math import isqrt

    return n >= 0 and isqrt(n) ** 2 == n


def test_right_order_of_principal_ideal():
    p = 11
    model, O = standard_max_order(p)
    # right order of O itself is O
    assert right_order(model, O) == O


def test_random_max_order_walk_and_types():
    p = 11
    rng = random.Random(5)
    sigs = set()
    for trial in range(60):
        model, O = random_max_order(p, rng, steps=6)
        assert discrd(model, O) == p
        sigs.add(_ternary_signature(model, O))
    # B_{11,oo} has two types of maximal orders; the walk должен see both
    assert len(sigs) == 2, f"signatures seen: {sigs}"


def _ternary_signature(model, O):
    """Isomorphism-class signature: the small values of the norm form on
    trace-zero elements, after greedy pairwise lattice reduction."""
    B = [list(row) for row in O.basis_rows()]

    def ip(x, y):  # trace pairing
        xy = model.mult(x, tuple(model.conj(tuple(y))))
        return model.trd(tuple(xy))

    from itertools import product as iproduct

    changed = True
    guard = 0
    while changed and guard < 40:
        changed = False
        guard += 1
        B.sort(key=lambda v: model.nrd(tuple(v)))
        for i in range(4):
            for j in range(4):
                if i == j:
                    continue
                den = ip(B[j], B[j])
                if den == 0:
                    continue
                r = round(ip(B[i], B[j]) / den)
                if r:
                    B[i] = [a - r * b for a, b in zip(B[i], B[j])]
                    changed = True
        # enumerative improvement: swap in any shorter independent combo
        from ssendo.quatlin import lattice_from_rows

        cur = lattice_from_rows([tuple(v) for v in B])
        worst = max(range(4), key=lambda i: model.nrd(tuple(B[i])))
        for combo in iproduct((-1, 0, 1), repeat=4):
            if not any(combo):
                continue
            x = [sum(c * B[k][t] for k, c in enumerate(combo)) for t in range(4)]
            if model.nrd(tuple(x)) < model.nrd(tuple(B[worst])):
                trial = [B[k] if k != worst else x for k in range(4)]
                try:
                    if lattice_from_rows([tuple(v) for v in trial]) == cur:
                        B = trial
                        changed = True
                        break
                except Exception:
                    continue
    vals = set()
    rng4 = range(-2, 3)
    for c0 in rng4:
        for c1 in rng4:
            for c2 in rng4:
                for c3 in rng4:
                    if not (c0 or c1 or c2 or c3):
                        continue
                    x = tuple(
                        c0 * B[0][t] + c1 * B[1][t] + c2 * B[2][t] + c3 * B[3][t]
                        for t in range(4)
                    )
                    if model.trd(x) == 0:
                        vals.add(int(model.nrd(x)))
    return tuple(sorted(vals)[:3])


def test_index_q_overorders_of_scaled_maximal():
    # Z + q O has exactly the expected index-q overorder structure toward O
    p = 11
    q = 3
    model, O = standard_max_order(p)
    B = O.basis_rows()
    rows = [model.one()] + [tuple(q * v for v in row) for row in B]
    small = order_from_generators(model, [r for r in rows])
    ovs = index_q_overorders(model, small, q)
    assert ovs, "no index-q overorder found"
    for L in ovs:
        assert small.index_in(L) == q
        assert is_order(model, L)
