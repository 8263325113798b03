"""The supersingular ell-isogeny graph: neighbors, non-backtracking walks,
and detection/construction of degree-d structures toward the conjugate curve.

Walks operate on curve models, not bare j-invariants: each step picks a
kernel polynomial and runs Velu, so the chain needed later is built during
the walk rather than reconstructed afterward.  The non-backtracking rule
removes exactly one subgroup (the image of the previous step's dual); at
j = 0 or 1728 the remaining subgroups stay uniformly weighted, which
matches the multiplicity weighting of Phi_ell roots.
"""

import random
from dataclasses import dataclass, field

from .fields import FieldElement, Poly, roots_in_field
from .curves import (
    Curve,
    IsogenyChain,
    IsogenyStep,
    Point,
    conjugate_curve,
    frobenius_step,
    iso_step_to,
    j_invariant,
    random_point,
    velu_isogeny,
    _ell_kernel_polys,
    _iso_u_candidates,
    _velu_from_kernel,
    _velu_twisted,
)
from .modpoly import PHI

__all__ = [
    "StructureNotFound",
    "WalkParams",
    "WalkRecord",
    "walk_length",
    "modular_poly_eval",
    "neighbors",
    "nbt_walk",
    "has_d_structure",
    "build_d_structure",
]


class StructureNotFound(RuntimeError):
    pass


def walk_length(p: int, ell: int) -> int:
    """Least t with  t/2 - log_ell(t + (ell-1)/(ell+1)) >= log_ell((p-1)^{3/2}/8).

    Scanned in exact integer arithmetic: squaring the exponential form of
    the inequality gives  64 (ell+1)^2 ell^t >= (p-1)^3 (t(ell+1)+ell-1)^2.
    """
    assert p > 3
    lhs_base = 64 * (ell + 1) ** 2
    rhs_base = (p - 1) ** 3
    t = 1
    pw = ell
    while lhs_base * pw < rhs_base * (t * (ell + 1) + ell - 1) ** 2:
        t += 1
        pw *= ell
    return t


def modular_poly_eval(ell: int, jx: FieldElement, jy: FieldElement) -> FieldElement:
    """Phi_ell(jx, jy) over F_{p^2}."""
    ctx = jx.ctx
    d = ell + 1
    xp = [ctx.fp2(1)]
    yp = [ctx.fp2(1)]
    for _ in range(d):
        xp.append(xp[-1] * jx)
        yp.append(yp[-1] * jy)
    acc = ctx.fp2(0)
    for (i, j), c in PHI[ell].items():
        term = ctx.fp2(c) * xp[i] * yp[j]
        if i != j:
            term = term + ctx.fp2(c) * xp[j] * yp[i]
        acc = acc + term
    return acc


def modular_poly_univariate(ell: int, jx: FieldElement) -> Poly:
    """Phi_ell(jx, Y) as a polynomial in Y."""
    ctx = jx.ctx
    d = ell + 1
    xp = [ctx.fp2(1)]
    for _ in range(d):
        xp.append(xp[-1] * jx)
    coeffs = [ctx.fp2(0) for _ in range(d + 1)]
    for (i, j), c in PHI[ell].items():
        coeffs[j] = coeffs[j] + ctx.fp2(c) * xp[i]
        if i != j:
            coeffs[i] = coeffs[i] + ctx.fp2(c) * xp[j]
    return Poly(ctx, 1, [e.raw for e in coeffs])


def neighbors(j: FieldElement, ell: int, rng: random.Random):
    """Multiset of neighbor j-invariants: roots of Phi_ell(j, Y) in F_{p^2}
    with multiplicity. Total multiplicity is ell + 1 at supersingular j."""
    f = modular_poly_univariate(ell, j)
    return roots_in_field(f, 1, rng)


@dataclass(frozen=True)
class WalkParams:
    """Parameters of a non-backtracking walk; t must equal walk_length(p, ell)."""

    p: int
    ell: int
    d: int
    t: int

    def __post_init__(self):
        assert self.t == walk_length(self.p, self.ell)
        assert self.d in (1, 2)
        from math import gcd

        assert gcd(self.d, self.ell) == 1, "d must be coprime to ell"
        assert 4 * self.d < self.p, "need d < p/4"


@dataclass
class WalkRecord:
    """A walk with its kernel choices and the Velu chain built along it."""

    j_sequence: list
    choices: list
    steps: list = field(default_factory=list)

    def chain(self, upto=None) -> IsogenyChain:
        return IsogenyChain(self.steps[: upto if upto is not None else len(self.steps)])

    def to_json(self):
        return {
            "j_sequence": [j.to_json() for j in self.j_sequence],
            "choices": list(self.choices),
        }


def _x_image(step: IsogenyStep, xval: FieldElement) -> FieldElement:
    """x-coordinate map of a Velu step, at the level of xval."""
    nx, dx, _, _ = step.maps
    return nx.evaluate(xval) / dx.evaluate(xval)


def _x_double(E: Curve, xv: FieldElement) -> FieldElement:
    ctx = E.ctx
    lvl = xv.level
    a = E.a.lift(lvl) if lvl > 1 else E.a
    b = E.b.lift(lvl) if lvl > 1 else E.b
    num = xv * xv * xv * xv - 2 * a * xv * xv - 8 * b * xv + a * a
    den = 4 * (xv * xv * xv + a * xv + b)
    return num / den


def _reverse_kernel_poly(step: IsogenyStep, others, rng: random.Random) -> Poly:
    """Kernel polynomial of the dual edge (x-only; no square roots needed).

    `others` are kernel polynomials of the domain's other subgroups; any
    one of them maps onto ker(dual) under the step's x-map.
    """
    ctx = step.domain.ctx
    ell = step.degree
    h = others[0]
    if h.degree() == 1:
        x0 = -FieldElement(ctx, 1, h.coeffs[0])
        xt = _x_image(step, x0)
        if ell == 2:
            return Poly(ctx, 1, [(-xt).raw, ctx.fp2(1).raw])
        # ell == 3
        return Poly(ctx, 1, [(-xt).raw, ctx.fp2(1).raw])
    # ell == 5: a root of the quadratic, at level 1 or 2, by the formula
    from .fields import f2_quadratic_roots

    hm = h.monic()
    rr = f2_quadratic_roots(ctx, hm.coeffs[1], hm.coeffs[0])
    if rr:
        x0 = FieldElement(ctx, 1, rr[0])
    else:
        if 2 not in ctx.levels:
            ctx.extend(2)
        c1 = ctx.raw_from_f2(2, hm.coeffs[1])
        c0 = ctx.raw_from_f2(2, hm.coeffs[0])
        disc = ctx.sub(2, ctx.sqr(2, c1), ctx.scal(2, (4, 0), c0))
        sq = ctx.sqrt(2, disc)
        assert sq is not None, "kernel quadratic has no roots in F_{p^4}"
        inv2 = pow(2, ctx.p - 2, ctx.p)
        x0 = FieldElement(ctx, 2, ctx.scal(2, (inv2, 0), ctx.sub(2, sq, c1)))
    xt = _x_image(step, x0)
    xt2 = _x_double(step.codomain, xt)
    lvl = xt.level
    one = ctx.raw_one(lvl)
    hp = Poly(ctx, lvl, [ctx.mul(lvl, xt.raw, xt2.raw), ctx.neg(lvl, (xt + xt2).raw), one])
    coeffs = [ctx.raw_to_f2(lvl, c) if lvl > 1 else c for c in hp.coeffs]
    return Poly(ctx, 1, coeffs)


def _subgroup_roots(E: Curve, ell: int, known, rng: random.Random):
    """x-coordinates of the ell+1 order-ell subgroups (ell in {2, 3}).

    When one root is already `known` (the reverse edge), the division
    polynomial is deflated by it first, which keeps the per-step work at
    one small root-finding call.
    """
    ctx = E.ctx
    from .curves import division_polynomial, _divpoly_seq
    from .fields import f2_split_all, FieldElement

    poly = division_polynomial(E, 2) if ell == 2 else _divpoly_seq(E, 3)
    if known is not None:
        lin = Poly(ctx, 1, [(-known).raw, ctx.fp2(1).raw])
        q, r = poly.divmod(lin)
        assert r.is_zero(), "reverse-edge root is not a subgroup root"
        rest = f2_split_all(ctx, q.coeffs, rng)
        assert len(rest) == ell, "subgroup x-coordinates not all rational"
        return [known] + [FieldElement(ctx, 1, rr) for rr in rest]
    rts = f2_split_all(ctx, poly.coeffs, rng)
    assert len(rts) == ell + 1, "subgroup x-coordinates not all rational"
    return [FieldElement(ctx, 1, rr) for rr in rts]


def nbt_walk(params: WalkParams, start: Curve, rng: random.Random,
             stop_when=None) -> WalkRecord:
    """Uniform non-backtracking walk of length t from a normalized model.

    The first step is uniform over the ell+1 subgroups; each later step is
    uniform over the ell subgroups other than the previous dual edge.
    stop_when(j), when given, truncates the walk at the first vertex
    (index >= 1) satisfying it.
    """
    ell = params.ell
    ctx = start.ctx
    E = start
    rec = WalkRecord([j_invariant(E)], [])
    if ell in (2, 3):
        excluded = None  # F_{p^2} root of the reverse-edge kernel
        for _ in range(params.t):
            roots = _subgroup_roots(E, ell, excluded, rng)
            options = roots if excluded is None else roots[1:]
            idx = rng.randrange(len(options))
            r = options[idx]
            h = Poly(ctx, 1, [(-r).raw, ctx.fp2(1).raw])
            step = _velu_from_kernel(E, h, ell)
            other = next(rr for rr in roots if rr != r)
            excluded = _x_image(step, other)
            rec.steps.append(step)
            rec.choices.append(idx)
            E = step.codomain
            rec.j_sequence.append(j_invariant(E))
            if stop_when is not None and stop_when(rec.j_sequence[-1]):
                return rec
        return rec
    excluded_poly = None  # ell = 5: quadratic kernel polynomial of the reverse edge
    for _ in range(params.t):
        polys = _ell_kernel_polys(E, ell, rng)
        if excluded_poly is not None:
            ex = excluded_poly.monic()
            options = [h for h in polys if h != ex]
            assert len(options) == ell, "dual edge not found among subgroups"
        else:
            options = polys
        idx = rng.randrange(len(options))
        h = options[idx]
        step = _velu_from_kernel(E, h, ell)
        others = [g for g in polys if g != h]
        excluded_poly = _reverse_kernel_poly(step, others, rng)
        rec.steps.append(step)
        rec.choices.append(idx)
        E = step.codomain
        rec.j_sequence.append(j_invariant(E))
        if stop_when is not None and stop_when(rec.j_sequence[-1]):
            return rec
    return rec


def has_d_structure(j: FieldElement, d: int) -> bool:
    """Is a curve with this j-invariant d-isogenous to its conjugate?

    d = 1 tests j in F_p; d = 2 tests Phi_2(j, j^p) = 0.
    """
    jp = j.frobenius()
    if d == 1:
        return jp == j
    if d == 2:
        return not modular_poly_eval(2, j, jp)
    raise ValueError("only d in {1, 2} supported")


def build_d_structure(E: Curve, d: int, rng: random.Random) -> IsogenyStep:
    """A degree-d map psi: E -> E^{(p)} whose associated mu = pi o psi
    satisfies mu^2 = [-dp]; epsilon is -1 on pi_E = [p] models.

    Raises StructureNotFound if no candidate passes, which signals an
    inconsistency with has_d_structure (a bug, not an expected outcome).
    """
    ctx = E.ctx
    p = ctx.p
    Ep = conjugate_curve(E)
    pi = frobenius_step(Ep)  # pi: E^{(p)} -> E
    probes = [random_point(E, 1, rng) for _ in range(4)]

    def mu_ok(psi):
        for P in probes:
            mp = pi.evaluate(psi.evaluate(P))
            mpp = pi.evaluate(psi.evaluate(mp))
            if mpp != (-(d * p)) * P:
                return False
        return True

    if d == 1:
        for u in _iso_u_candidates(E, Ep, rng):
            psi = iso_step_to(E, Ep, u)
            if mu_ok(psi):
                return psi
        raise StructureNotFound("no isomorphism E -> E^(p) with mu^2 = [-p]")
    assert d == 2
    for h in _ell_kernel_polys(E, 2, rng):
        cand = velu_isogeny(E, h)
        if j_invariant(cand.codomain) != j_invariant(Ep):
            continue
        for u in _iso_u_candidates(cand.codomain, Ep, rng):
            psi = _velu_twisted(E, h, 2, u, Ep)
            if mu_ok(psi):
                return psi
    raise StructureNotFound("no 2-isogeny E -> E^(p) with mu^2 = [-2p]")
