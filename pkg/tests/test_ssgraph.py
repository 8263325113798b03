import random
from collections import Counter
from fractions import Fraction

import pytest

from ssendo.curves import (
    curve_from_j,
    frobenius_step,
    j_invariant,
    normalize_model,
    random_point,
    velu_isogeny,
    conjugate_curve,
    _ell_kernel_polys,
)
from ssendo.fields import make_field
from ssendo.ssgraph import (
    StructureNotFound,
    WalkParams,
    build_d_structure,
    has_d_structure,
    modular_poly_eval,
    nbt_walk,
    neighbors,
    walk_length,
)


def _norm_curve(p, seed=0):
    ctx = make_field(p)
    rng = random.Random(seed)
    j = 1728 if p % 4 == 3 else 0
    return ctx, normalize_model(curve_from_j(ctx.fp2(j)), rng), rng


def test_walk_length_spec_examples():
    assert walk_length(1019, 3) == 21
    # the t = 20 boundary genuinely fails, t = 21 passes
    lhs = 64 * 16 * 3 ** 20
    rhs = 1018 ** 3 * (20 * 4 + 2) ** 2
    assert lhs < rhs
    assert 64 * 16 * 3 ** 21 >= 1018 ** 3 * (21 * 4 + 2) ** 2
    assert walk_length(2 ** 20 + 7, 2) < 3 * 20 + 20


def test_walk_length_monotone_in_p():
    prev = 0
    for p in (11, 101, 1009, 9973):
        t = walk_length(p, 3)
        assert t >= prev
        prev = t


def test_neighbors_multiplicity_and_loops():
    ctx, E, rng = _norm_curve(103)
    j = j_invariant(E)
    for ell in (2, 3, 5):
        nb = neighbors(j, ell, rng)
        assert sum(m for _, m in nb) == ell + 1
    ctx7, E7, rng7 = _norm_curve(7)
    nb7 = neighbors(j_invariant(E7), 2, rng7)
    assert [(r.raw, m) for r, m in nb7] == [((6, 0), 3)]


def test_neighbor_symmetry_p101():
    ctx = make_field(101)
    rng = random.Random(0)
    # collect the supersingular vertex set
    js = []
    for a in range(101):
        for b in range(101):
            j = ctx.fp2(a, b)
            from ssendo.curves import is_supersingular

            if is_supersingular(curve_from_j(j), rng):
                js.append(j)
    assert len(js) == 9
    for j in js:
        for j2, _ in neighbors(j, 2, rng):
            back = [r for r, _ in neighbors(j2, 2, rng)]
            assert j in back


def test_modular_polys_against_velu_oracle():
    # independent validation of the embedded coefficient tables
    ctx, E, rng = _norm_curve(103)
    cur = E
    checks = 0
    for _ in range(17):
        for ell in (2, 3, 5):
            polys = _ell_kernel_polys(cur, ell, rng)
            step = velu_isogeny(cur, polys[rng.randrange(len(polys))])
            assert not modular_poly_eval(ell, j_invariant(cur), j_invariant(step.codomain))
            checks += 1
        cur = velu_isogeny(cur, _ell_kernel_polys(cur, 2, rng)[0]).codomain
    assert checks >= 50


def test_walk_params_validation():
    with pytest.raises(AssertionError):
        WalkParams(103, 2, 2, walk_length(103, 2))  # gcd(d, ell) != 1
    with pytest.raises(AssertionError):
        WalkParams(103, 2, 1, 5)  # t not the prescribed length


def test_nbt_walk_basic():
    ctx, E, rng = _norm_curve(103)
    params = WalkParams(103, 2, 1, walk_length(103, 2))
    rec = nbt_walk(params, E, rng)
    assert len(rec.j_sequence) == params.t + 1
    for i in range(params.t):
        assert not modular_poly_eval(2, rec.j_sequence[i], rec.j_sequence[i + 1])
    assert rec.chain().formal_degree == 2 ** params.t


def test_nbt_walk_never_backtracks():
    # composing consecutive steps must not kill all of E[ell]
    ctx, E, rng = _norm_curve(103)
    from ssendo.curves import torsion_point

    for ell in (2, 3):
        params = WalkParams(103, ell, 2 if ell == 3 else 1, walk_length(103, ell))
        for _ in range(6):
            rec = nbt_walk(params, E, rng)
            for i in range(min(4, params.t - 1)):
                s1, s2 = rec.steps[i], rec.steps[i + 1]
                T = torsion_point(s1.domain, ell, rng)
                # if s2 reversed s1, s2(s1(.)) = [ell] would kill E[ell]
                comp_kills = s2.evaluate(s1.evaluate(T)).is_infinity()
                if comp_kills:
                    # allowed only when T happened to sit in ker(s1)
                    assert s1.evaluate(T).is_infinity()


def test_walk_endpoint_distribution_p101():
    # empirical endpoint distribution vs. exact stationary weights on the
    # 9-vertex graph: total variation within 0.05 over many walks
    ctx = make_field(101)
    rng = random.Random(12)
    from ssendo.curves import is_supersingular

    E = None
    js = []
    for a in range(101):
        for b in range(101):
            j = ctx.fp2(a, b)
            if is_supersingular(curve_from_j(j), rng):
                js.append(j)
    E = normalize_model(curve_from_j(js[0]), rng)
    # stationary weights prop. to 1/#Aut: 1/2 generically, 1/4 at j=1728, 1/6 at j=0
    weights = {}
    for j in js:
        if j == 0:
            weights[j.raw] = Fraction(1, 6)
        elif j == 1728 % 101:
            weights[j.raw] = Fraction(1, 4)
        else:
            weights[j.raw] = Fraction(1, 2)
    total = sum(weights.values())
    params = WalkParams(101, 2, 1, walk_length(101, 2))
    n = 4000
    counts = Counter()
    for _ in range(n):
        rec = nbt_walk(params, E, rng)
        counts[rec.j_sequence[-1].raw] += 1
    tv = sum(abs(Fraction(counts.get(jr, 0), n) - w / total) for jr, w in weights.items()) / 2
    assert tv <= Fraction(5, 100), f"total variation {float(tv):.3f} too large"


def test_has_d_structure_d1_matches_fp_rationality():
    ctx = make_field(103)
    rng = random.Random(0)
    from ssendo.curves import is_supersingular

    count_d1 = 0
    count_fp = 0
    for jv in range(103):
        j = ctx.fp2(jv)
        if is_supersingular(curve_from_j(j), rng):
            count_fp += 1
            assert has_d_structure(j, 1)
            count_d1 += 1
    assert count_d1 == count_fp > 0


def test_has_d_structure_d2_verified_by_construction():
    # every d=2 positive among supersingular vertices admits an explicit
    # 2-isogeny to the conjugate model with mu^2 = [-2p]
    ctx = make_field(103)
    rng = random.Random(3)
    from ssendo.curves import is_supersingular

    tested = 0
    for a in range(103):
        for b in range(103):
            if tested >= 3:
                break
            j = ctx.fp2(a, b)
            if not has_d_structure(j, 2):
                continue
            E = curve_from_j(j)
            if not is_supersingular(E, rng):
                continue
            EN = normalize_model(E, rng)
            psi = build_d_structure(EN, 2, rng)
            pi = frobenius_step(conjugate_curve(EN))
            for _ in range(3):
                P = random_point(EN, 1, rng)
                m1 = pi.evaluate(psi.evaluate(P))
                assert pi.evaluate(psi.evaluate(m1)) == (-2 * 103) * P
            tested += 1
    assert tested == 3


def test_build_d1_structure_with_automorphisms():
    # j = 1728 and j = 0 exercise the automorphism-twisted candidates
    for p, j0 in ((103, 1728), (11, 0)):
        ctx = make_field(p)
        rng = random.Random(1)
        E = normalize_model(curve_from_j(ctx.fp2(j0)), rng)
        psi = build_d_structure(E, 1, rng)
        pi = frobenius_step(conjugate_curve(E))
        for _ in range(4):
            P = random_point(E, 1, rng)
            m1 = pi.evaluate(psi.evaluate(P))
            assert pi.evaluate(psi.evaluate(m1)) == (-p) * P
