"""Short-Weierstrass curves over the tower, isogenies, and chains.

Curves are y^2 = x^3 + ax + b with a, b in F_{p^2}.  Chains store steps
whose endpoint curves match as exact coefficient pairs; isomorphism steps
are explicit, never implicit, because Galois conjugation is a coefficient
operation and does not respect "same j-invariant" identifications.

Division polynomials use the x-only convention: psi_2 = x^3 + ax + b.
"""

import random

from .fields import FieldContext, FieldElement, Poly, factor_int, mult_order, roots_in_field

__all__ = [
    "Curve",
    "Point",
    "IsogenyStep",
    "IsogenyChain",
    "NotSupersingular",
    "BadKernel",
    "j_invariant",
    "curve_from_j",
    "normalize_model",
    "is_supersingular",
    "division_polynomial",
    "velu_isogeny",
    "iso_step",
    "frobenius_step",
    "scalar_step",
    "conjugate_curve",
    "conjugate_step",
    "conjugate_chain",
    "dual_step",
    "evaluate_chain",
    "random_point",
    "torsion_basis_level",
    "torsion_point",
]


class NotSupersingular(ValueError):
    pass


class BadKernel(ValueError):
    pass


class Curve:
    """y^2 = x^3 + ax + b over F_{p^2}; must be nonsingular."""

    __slots__ = ("ctx", "a", "b", "_lifted", "_divpolys")

    def __init__(self, a: FieldElement, b: FieldElement):
        assert a.level == 1 and b.level == 1
        ctx = a.ctx
        disc = ctx.fp2(4) * a * a * a + ctx.fp2(27) * b * b
        if not disc:
            raise ValueError("singular curve: 4a^3 + 27b^2 = 0")
        self.ctx = ctx
        self.a = a
        self.b = b
        self._lifted = {1: (a.raw, b.raw)}
        self._divpolys = {}

    def __eq__(self, other):
        return isinstance(other, Curve) and self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a.raw, self.b.raw))

    def __repr__(self):
        return f"Curve(a={self.a.raw}, b={self.b.raw})"

    def coeffs_at(self, level):
        got = self._lifted.get(level)
        if got is None:
            ctx = self.ctx
            got = (ctx.raw_from_f2(level, self.a.raw), ctx.raw_from_f2(level, self.b.raw))
            self._lifted[level] = got
        return got

    def infinity(self, level=1):
        return Point(self, level, None, None)

    def point(self, x: FieldElement, y: FieldElement):
        assert x.level == y.level
        P = Point(self, x.level, x.raw, y.raw)
        assert P.on_curve(), "point not on curve"
        return P

    def rhs(self, level, xraw):
        """x^3 + ax + b on raw data."""
        ctx = self.ctx
        a, b = self.coeffs_at(level)
        x2 = ctx.sqr(level, xraw)
        return ctx.add(level, ctx.mul(level, ctx.add(level, x2, a), xraw), b)

    def to_json(self):
        return {"a": self.a.to_json(), "b": self.b.to_json()}

    @classmethod
    def from_json(cls, ctx, data):
        return cls(ctx.elem_from_json(1, data["a"]), ctx.elem_from_json(1, data["b"]))


class Point:
    """Affine point (or infinity) on a curve, at some tower level."""

    __slots__ = ("curve", "level", "x", "y")

    def __init__(self, curve, level, xraw, yraw):
        self.curve = curve
        self.level = level
        self.x = xraw
        self.y = yraw

    def is_infinity(self):
        return self.x is None

    def on_curve(self):
        if self.is_infinity():
            return True
        ctx = self.curve.ctx
        return ctx.sqr(self.level, self.y) == self.curve.rhs(self.level, self.x)

    def __eq__(self, other):
        return (
            isinstance(other, Point)
            and self.curve == other.curve
            and self.level == other.level
            and self.x == other.x
            and self.y == other.y
        )

    def __hash__(self):
        return hash((self.level, self.x, self.y))

    def __repr__(self):
        if self.is_infinity():
            return "Point(inf)"
        return f"Point(level={self.level}, x={self.x}, y={self.y})"

    def lift(self, level):
        if level == self.level:
            return self
        assert self.level == 1, "points lift from the base level only"
        if self.is_infinity():
            return Point(self.curve, level, None, None)
        ctx = self.curve.ctx
        return Point(
            self.curve, level, ctx.raw_from_f2(level, self.x), ctx.raw_from_f2(level, self.y)
        )

    def __neg__(self):
        if self.is_infinity():
            return self
        ctx = self.curve.ctx
        return Point(self.curve, self.level, self.x, ctx.neg(self.level, self.y))

    def __add__(self, other):
        assert isinstance(other, Point) and other.curve == self.curve
        P, Q = self, other
        if P.level != Q.level:
            join = max(P.level, Q.level)
            P, Q = P.lift(join), Q.lift(join)
        if P.is_infinity():
            return Q
        if Q.is_infinity():
            return P
        ctx = P.curve.ctx
        k = P.level
        if P.x == Q.x:
            if P.y != Q.y or ctx.is_zero(k, P.y):
                return Point(P.curve, k, None, None)
            a, _ = P.curve.coeffs_at(k)
            num = ctx.add(k, ctx.scal(k, (3, 0), ctx.sqr(k, P.x)), a)
            den = ctx.scal(k, (2, 0), P.y)
        else:
            num = ctx.sub(k, Q.y, P.y)
            den = ctx.sub(k, Q.x, P.x)
        lam = ctx.mul(k, num, ctx.inv(k, den))
        x3 = ctx.sub(k, ctx.sub(k, ctx.sqr(k, lam), P.x), Q.x)
        y3 = ctx.sub(k, ctx.mul(k, lam, ctx.sub(k, P.x, x3)), P.y)
        return Point(P.curve, k, x3, y3)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, n: int):
        return self.scalar_mul(n)

    def scalar_mul(self, n: int):
        if n < 0:
            return (-self).scalar_mul(-n)
        R = Point(self.curve, self.level, None, None)
        Q = self
        while n:
            if n & 1:
                R = R + Q
            Q = Q + Q
            n >>= 1
        return R

    def xy(self):
        ctx = self.curve.ctx
        return (
            FieldElement(ctx, self.level, self.x),
            FieldElement(ctx, self.level, self.y),
        )


def j_invariant(E: Curve) -> FieldElement:
    ctx = E.ctx
    a3 = ctx.fp2(4) * E.a * E.a * E.a
    den = a3 + ctx.fp2(27) * E.b * E.b
    return ctx.fp2(1728) * a3 / den


def curve_from_j(j: FieldElement) -> Curve:
    ctx = j.ctx
    assert j.level == 1
    if j == 0:
        return Curve(ctx.fp2(0), ctx.fp2(1))
    if j == 1728:
        return Curve(ctx.fp2(1), ctx.fp2(0))
    k = j / (ctx.fp2(1728) - j)
    return Curve(ctx.fp2(3) * k, ctx.fp2(2) * k)


def random_point(E: Curve, level: int, rng: random.Random) -> Point:
    ctx = E.ctx
    while True:
        x = ctx.random_element(level, rng).raw
        y = ctx.sqrt(level, E.rhs(level, x))
        if y is not None:
            if rng.getrandbits(1):
                y = ctx.neg(level, y)
            return Point(E, level, x, y)


def conjugate_curve(E: Curve) -> Curve:
    return Curve(E.a.frobenius(), E.b.frobenius())


# ---------------------------------------------------------------------------
# Supersingularity and model normalization.
# ---------------------------------------------------------------------------

_SS_TRIALS = 20


def _trace_candidates(E: Curve, rng: random.Random, trials=_SS_TRIALS):
    """Surviving candidates for the F_{p^2}-Frobenius trace among
    {0, +-p, +-2p}, by Monte-Carlo tests on random points."""
    p = E.ctx.p
    cands = {0, p, -p, 2 * p, -2 * p}
    base = p * p + 1
    for _ in range(trials):
        P = random_point(E, 1, rng)
        R = base * P
        cands = {a for a in cands if R == a * P}
        if not cands:
            return cands
    return cands


def is_supersingular(E: Curve, rng: random.Random) -> bool:
    """Monte-Carlo: the F_{p^2}-trace lands in pZ. Error < 2^-20."""
    return bool(_trace_candidates(E, rng))


def _twist_candidates(E: Curve):
    """E plus its quadratic twist; quartic/sextic families at j = 1728 / 0."""
    ctx = E.ctx
    # deterministic non-square in F_{p^2}
    z = None
    idx = 0
    q1 = ctx.p * ctx.p - 1
    while z is None:
        idx += 1
        cand = ctx._enum_raw(1, idx)
        if cand == (0, 0):
            continue
        if ctx.pow(1, cand, q1 // 2) != (1, 0):
            z = FieldElement(ctx, 1, cand)
    cands = [E]
    if not E.b:  # j = 1728: quartic twists a * z^i
        for i in range(1, 4):
            cands.append(Curve(E.a * z ** i, E.b))
    elif not E.a:  # j = 0: sextic twists b * z^i
        for i in range(1, 6):
            cands.append(Curve(E.a, E.b * z ** i))
    else:
        cands.append(Curve(E.a * z * z, E.b * z * z * z))
    return cands


def normalize_model(E: Curve, rng: random.Random) -> Curve:
    """The twist of E with #E(F_{p^2}) = (p-1)^2, i.e. pi_E = [p].

    Raises NotSupersingular when no twist passes the exponent tests.
    """
    p = E.ctx.p
    for cand in _twist_candidates(E):
        ok = True
        for _ in range(26):
            P = random_point(cand, 1, rng)
            if not ((p - 1) * P).is_infinity():
                ok = False
                break
        if not ok:
            continue
        # distinguish from the (p+1)^2 twist with a witness
        for _ in range(6):
            Q = random_point(cand, 1, rng)
            if not ((p + 1) * Q).is_infinity():
                return cand
    raise NotSupersingular(f"no twist of j={j_invariant(E).raw} has trace 2p")


# ---------------------------------------------------------------------------
# Division polynomials (x-only).
# ---------------------------------------------------------------------------


def _divpoly_seq(E: Curve, m: int) -> Poly:
    """P_m with psi_m = P_m (m odd), psi_m = 2y P_m (m even)."""
    cache = E._divpolys
    got = cache.get(m)
    if got is not None:
        return got
    ctx = E.ctx
    a, b = E.a, E.b
    x = Poly.from_ints(ctx, [0, 1])
    one = Poly.from_ints(ctx, [1])

    def rec(n):
        got = cache.get(n)
        if got is not None:
            return got
        if n == 0:
            val = Poly.from_ints(ctx, [])
        elif n in (1, 2):
            val = one
        elif n == 3:
            c0 = -(a * a)
            val = Poly(ctx, 1, [c0.raw, (ctx.fp2(12) * b).raw, (ctx.fp2(6) * a).raw,
                                ctx.raw_zero(1), ctx.fp2(3).raw])
        elif n == 4:
            c0 = -(ctx.fp2(2) * (ctx.fp2(8) * b * b + a * a * a))
            c1 = -(ctx.fp2(8) * a * b)
            c2 = -(ctx.fp2(10) * a * a)
            c3 = ctx.fp2(40) * b
            c4 = ctx.fp2(10) * a
            val = Poly(ctx, 1, [c0.raw, c1.raw, c2.raw, c3.raw, c4.raw,
                                ctx.raw_zero(1), ctx.fp2(2).raw])
        elif n % 2 == 1:
            r = n // 2
            f = Poly(ctx, 1, [b.raw, a.raw, ctx.raw_zero(1), ctx.fp2(1).raw])
            f16 = f * f * 16
            A = rec(r + 2) * (rec(r) * rec(r) * rec(r))
            B = rec(r - 1) * (rec(r + 1) * rec(r + 1) * rec(r + 1))
            val = (f16 * A - B) if r % 2 == 0 else (A - f16 * B)
        else:
            r = n // 2
            val = rec(r) * (rec(r + 2) * (rec(r - 1) * rec(r - 1))
                            - rec(r - 2) * (rec(r + 1) * rec(r + 1)))
        cache[n] = val
        return val

    return rec(m)


def division_polynomial(E: Curve, m: int) -> Poly:
    """x-only division polynomial: roots are x-coordinates of nonzero
    m-torsion. psi_2 = x^3 + ax + b by convention."""
    assert m >= 1
    ctx = E.ctx
    P = _divpoly_seq(E, m)
    if m % 2 == 0:
        f = Poly(ctx, 1, [E.b.raw, E.a.raw, ctx.raw_zero(1), ctx.fp2(1).raw])
        return f * P
    return P


# ---------------------------------------------------------------------------
# Isogeny steps.
# ---------------------------------------------------------------------------

KIND_VELU = "velu"
KIND_FROBENIUS = "frobenius"
KIND_ISOMORPHISM = "isomorphism"
KIND_SCALAR = "scalar"


class IsogenyStep:
    """One step of a chain: Velu isogeny, Frobenius, isomorphism or scalar.

    Velu steps carry rational maps X = num_x/den_x, Y = y*num_y/den_y with
    polynomial coefficients over F_{p^2}; kernel roots map to infinity.
    """

    __slots__ = ("kind", "domain", "codomain", "degree", "kernel_poly",
                 "maps", "u", "n")

    def __init__(self, kind, domain, codomain, degree, kernel_poly=None,
                 maps=None, u=None, n=None):
        self.kind = kind
        self.domain = domain
        self.codomain = codomain
        self.degree = degree
        self.kernel_poly = kernel_poly
        self.maps = maps  # (num_x, den_x, num_y, den_y) as Poly over level 1
        self.u = u        # FieldElement for isomorphism steps
        self.n = n        # int for scalar steps

    def __repr__(self):
        return f"IsogenyStep({self.kind}, deg={self.degree})"

    def evaluate(self, P: Point) -> Point:
        assert P.curve == self.domain, "point not on step domain"
        k = P.level
        cod = self.codomain
        if P.is_infinity():
            return Point(cod, k, None, None)
        ctx = self.domain.ctx
        if self.kind == KIND_FROBENIUS:
            return Point(cod, k, ctx.frob(k, P.x), ctx.frob(k, P.y))
        if self.kind == KIND_ISOMORPHISM:
            u = ctx.raw_from_f2(k, self.u.raw) if k > 1 else self.u.raw
            u2 = ctx.sqr(k, u)
            u3 = ctx.mul(k, u2, u)
            return Point(cod, k, ctx.mul(k, u2, P.x), ctx.mul(k, u3, P.y))
        if self.kind == KIND_SCALAR:
            Q = P.scalar_mul(self.n)
            return Point(cod, k, Q.x, Q.y)
        nx, dx, ny, dy = self.maps
        coeffs = (nx.coeffs, dx.coeffs, ny.coeffs, dy.coeffs)
        # shared x-powers; map coefficients stay base-level constants, so
        # each polynomial evaluation costs only scalar combinations
        maxdeg = max(len(c) for c in coeffs) - 1
        xp = [ctx.raw_one(k), P.x]
        for _ in range(maxdeg - 1):
            xp.append(ctx.mul(k, xp[-1], P.x))
        vals = []
        for cs in coeffs:
            acc = ctx.raw_zero(k)
            for i, cf in enumerate(cs):
                if cf == (0, 0):
                    continue
                term = ctx.mul(1, cf, xp[i]) if k == 1 else ctx.scal(k, cf, xp[i])
                acc = ctx.add(k, acc, term)
            vals.append(acc)
        nxv, dxv, nyv, dyv = vals
        if ctx.is_zero(k, dxv) or ctx.is_zero(k, dyv):
            return Point(cod, k, None, None)
        inv_all = ctx.inv(k, ctx.mul(k, dxv, dyv))
        X = ctx.mul(k, ctx.mul(k, nxv, dyv), inv_all)
        Y = ctx.mul(k, P.y, ctx.mul(k, ctx.mul(k, nyv, dxv), inv_all))
        return Point(cod, k, X, Y)

    def to_json(self):
        out = {
            "kind": self.kind,
            "degree": str(self.degree),
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
        }
        if self.kernel_poly is not None:
            out["kernel_poly"] = self.kernel_poly.to_json()
        if self.u is not None:
            out["u"] = self.u.to_json()
        if self.n is not None:
            out["n"] = str(self.n)
        return out


def _horner(ctx, level, coeffs, xraw):
    acc = ctx.raw_zero(level)
    for c in reversed(coeffs):
        acc = ctx.add(level, ctx.mul(level, acc, xraw), c)
    return acc


def iso_step(E: Curve, u: FieldElement) -> IsogenyStep:
    """(x, y) -> (u^2 x, u^3 y), from E(a, b) to E(a u^4, b u^6)."""
    assert u.level == 1 and u
    u2 = u * u
    u4 = u2 * u2
    cod = Curve(E.a * u4, E.b * u4 * u2)
    return IsogenyStep(KIND_ISOMORPHISM, E, cod, 1, u=u)


def frobenius_step(E: Curve) -> IsogenyStep:
    return IsogenyStep(KIND_FROBENIUS, E, conjugate_curve(E), E.ctx.p)


def scalar_step(E: Curve, n: int) -> IsogenyStep:
    assert n != 0
    return IsogenyStep(KIND_SCALAR, E, E, n * n, n=n)


def velu_isogeny(E: Curve, kernel_poly: Poly) -> IsogenyStep:
    """Velu step with the given kernel polynomial (degree 2, 3 or 5).

    kernel_poly must divide the x-only division polynomial and define a
    single cyclic subgroup; otherwise BadKernel.
    """
    ctx = E.ctx
    h = kernel_poly.monic()
    n = h.degree()
    if n == 1:
        # either a 2-isogeny (root of x^3+ax+b) or a 3-isogeny (root of P_3)
        f = division_polynomial(E, 2)
        if (f % h).is_zero():
            ell = 2
        elif (_divpoly_seq(E, 3) % h).is_zero():
            ell = 3
        else:
            raise BadKernel("linear kernel divides neither psi_2 nor psi_3")
    elif n == 2:
        ell = 5
        if not (_divpoly_seq(E, 5) % h).is_zero():
            raise BadKernel("quadratic kernel does not divide psi_5")
        if not _stable_under_doubling(E, h):
            raise BadKernel("kernel roots are not one cyclic subgroup")
    else:
        raise BadKernel(f"unsupported kernel degree {n}")
    return _velu_from_kernel(E, h, ell)


def _stable_under_doubling(E: Curve, h: Poly) -> bool:
    """Do the roots of h map into themselves under x([2]Q)?"""
    ctx = E.ctx
    x = Poly.from_ints(ctx, [0, 1])
    f = Poly(ctx, 1, [E.b.raw, E.a.raw, ctx.raw_zero(1), ctx.fp2(1).raw])
    a, b = E.a, E.b
    # x([2]Q) = (x^4 - 2a x^2 - 8b x + a^2) / (4 f)
    num = Poly(
        ctx, 1,
        [(a * a).raw, (ctx.fp2(-8) * b).raw, (ctx.fp2(-2) * a).raw, ctx.raw_zero(1),
         ctx.fp2(1).raw],
    )
    den = f * 4
    # h(num/den) * den^deg(h) must vanish mod h
    acc = Poly.from_ints(ctx, [])
    dpow = Poly.from_ints(ctx, [1])
    terms = []
    for c in h.coeffs:
        terms.append((c, dpow))
        dpow = dpow * den
    npow = Poly.from_ints(ctx, [1])
    denpows = [t[1] for t in terms]
    for i, (c, _) in enumerate(terms):
        acc = acc + Poly(ctx, 1, [c]) * npow * denpows[len(terms) - 1 - i]
        npow = npow * num
    return (acc % h).is_zero()


def _velu_from_kernel(E: Curve, h: Poly, ell: int) -> IsogenyStep:
    ctx = E.ctx
    a, b = E.a, E.b
    n = h.degree()
    f = Poly(ctx, 1, [b.raw, a.raw, ctx.raw_zero(1), ctx.fp2(1).raw])
    if ell == 2:
        x0 = -FieldElement(ctx, 1, h.coeffs[0])
        v = ctx.fp2(3) * x0 * x0 + a
        w = x0 * v
        A = a - ctx.fp2(5) * v
        B = b - ctx.fp2(7) * w
        cod = Curve(A, B)
        num_x = Poly(ctx, 1, [v.raw, (-x0).raw, ctx.fp2(1).raw])  # x^2 - x0 x + v
        den_x = h
        num_y = (h * h) - Poly(ctx, 1, [v.raw])
        den_y = h * h
        return IsogenyStep(KIND_VELU, E, cod, 2, kernel_poly=h,
                           maps=(num_x, den_x, num_y, den_y))
    # odd ell; power sums of the kernel half-set from h's coefficients
    cs = [FieldElement(ctx, 1, c) for c in h.coeffs]
    s1 = -cs[n - 1]
    s2 = cs[n - 2] if n >= 2 else ctx.fp2(0)
    s3 = -cs[n - 3] if n >= 3 else ctx.fp2(0)
    p1 = s1
    p2 = s1 * s1 - 2 * s2
    p3 = s1 * p2 - s2 * p1 + 3 * s3
    v = ctx.fp2(6) * p2 + ctx.fp2(2 * n) * a
    w = ctx.fp2(10) * p3 + ctx.fp2(6) * a * p1 + ctx.fp2(4 * n) * b
    cod = Curve(a - ctx.fp2(5) * v, b - ctx.fp2(7) * w)
    hp = h.derivative()
    hpp = hp.derivative()
    lin = Poly(ctx, 1, [(-2 * s1).raw, ctx.fp2(2 * n + 1).raw])  # (2n+1)x - 2 s1
    six = Poly(ctx, 1, [(ctx.fp2(2) * a).raw, ctx.raw_zero(1), ctx.fp2(6).raw])
    num_x = lin * (h * h) + 4 * (f * (hp * hp - h * hpp)) - six * (hp * h)
    den_x = h * h
    num_y = num_x.derivative() * h - 2 * (num_x * hp)
    den_y = h * h * h
    return IsogenyStep(KIND_VELU, E, cod, ell, kernel_poly=h,
                       maps=(num_x, den_x, num_y, den_y))


def _velu_twisted(E: Curve, h: Poly, ell: int, u: FieldElement,
                  target: Curve) -> IsogenyStep:
    """Velu step post-composed with the u-isomorphism, landing on target."""
    step = _velu_from_kernel(E, h, ell)
    ctx = E.ctx
    u2 = u * u
    u4 = u2 * u2
    assert Curve(step.codomain.a * u4, step.codomain.b * u4 * u2) == target
    nx, dx, ny, dy = step.maps
    out = IsogenyStep(KIND_VELU, E, target, ell, kernel_poly=h,
                      maps=(nx * u2, dx, ny * (u2 * u), dy))
    out.u = u
    return out


def conjugate_step(step: IsogenyStep) -> IsogenyStep:
    """Coefficient-wise p-th power of a step; an involution."""
    dom = conjugate_curve(step.domain)
    cod = conjugate_curve(step.codomain)
    if step.kind == KIND_VELU:
        nx, dx, ny, dy = step.maps
        out = IsogenyStep(
            KIND_VELU, dom, cod, step.degree,
            kernel_poly=step.kernel_poly.conjugate(),
            maps=(nx.conjugate(), dx.conjugate(), ny.conjugate(), dy.conjugate()),
        )
        if step.u is not None:
            out.u = step.u.frobenius()
        return out
    if step.kind == KIND_ISOMORPHISM:
        return IsogenyStep(KIND_ISOMORPHISM, dom, cod, 1, u=step.u.frobenius())
    if step.kind == KIND_FROBENIUS:
        return IsogenyStep(KIND_FROBENIUS, dom, cod, step.degree)
    return IsogenyStep(KIND_SCALAR, dom, cod, step.degree, n=step.n)


# ---------------------------------------------------------------------------
# Duals.
# ---------------------------------------------------------------------------


def torsion_basis_level(p: int, m: int) -> int:
    """Tower degree over F_{p^2} where E[m] is rational (pi_E = [p] models)."""
    if m == 1:
        return 1
    return mult_order(p, m)


def _roots_of_unity(ctx, e, rng):
    f = Poly.from_ints(ctx, [-1] + [0] * (e - 1) + [1])
    return [r for r, _ in roots_in_field(f, 1, rng)]


def _ell_kernel_polys(E: Curve, ell: int, rng: random.Random):
    """All ell+1 kernel polynomials of the order-ell subgroups of E[ell].

    On pi_E = [p] models every subgroup is Galois-stable, so for ell in
    {2, 3} these are the linear factors of the x-only division polynomial;
    for ell = 5 the quadratic subgroup polynomials are grouped by the
    x-doubling map.
    """
    ctx = E.ctx
    if ell == 2:
        f = division_polynomial(E, 2)
        roots = roots_in_field(f, 1, rng)
        assert sum(m for _, m in roots) == 3, "2-torsion not rational over F_{p^2}"
        return [Poly(ctx, 1, [(-r).raw, ctx.fp2(1).raw]) for r, _ in roots]
    if ell == 3:
        P3 = _divpoly_seq(E, 3)
        roots = roots_in_field(P3, 1, rng)
        assert sum(m for _, m in roots) == 4, "3-torsion subgroup x's not rational"
        return [Poly(ctx, 1, [(-r).raw, ctx.fp2(1).raw]) for r, _ in roots]
    assert ell == 5
    from .fields import f2_factor_deg_le2

    P5 = _divpoly_seq(E, 5)
    roots, quad_raw = f2_factor_deg_le2(ctx, P5.coeffs, rng)
    quads = [Poly(ctx, 1, g) for g in quad_raw]
    linear_roots = [FieldElement(ctx, 1, r) for r in roots]
    assert 2 * len(quads) + len(linear_roots) == 12
    polys = list(quads)
    # pair rational roots into subgroups via x([2]Q)
    a, b = E.a, E.b
    remaining = list(linear_roots)
    while remaining:
        r = remaining[0]
        num = r * r * r * r - 2 * a * r * r - 8 * b * r + a * a
        den = ctx.fp2(4) * (r * r * r + a * r + b)
        r2 = num / den
        if r2 == r:
            # subgroup with x(Q) = x(2Q): cannot happen for order 5
            raise BadKernel("5-torsion doubling fixed point")
        remaining.remove(r)
        remaining.remove(r2)
        polys.append(Poly(ctx, 1, [(r * r2).raw, (-(r + r2)).raw, ctx.fp2(1).raw]))
    assert len(polys) == 6
    return polys


def _ell_point_avoiding(E: Curve, ell: int, avoid: Poly, rng: random.Random) -> Point:
    """A point of order ell whose subgroup polynomial differs from `avoid`."""
    ctx = E.ctx
    polys = _ell_kernel_polys(E, ell, rng)
    av = avoid.monic()
    others = [h for h in polys if h != av]
    assert others
    h = others[0]
    k = torsion_basis_level(ctx.p, ell)
    if k not in ctx.levels:
        ctx.extend(k)
    rts = roots_in_field(h, k, rng)
    assert rts, "kernel polynomial has no roots at the torsion level"
    x0 = rts[0][0]
    y0 = ctx.sqrt(k, E.rhs(k, x0.raw))
    assert y0 is not None, "torsion x without rational y at its level"
    return Point(E, k, x0.raw, y0)


def _subgroup_poly_from_point(T: Point, ell: int) -> Poly:
    """Kernel polynomial of <T> for T of prime order ell, descended to F_{p^2}."""
    ctx = T.curve.ctx
    xs = []
    Q = T
    for _ in range(1 if ell == 2 else (ell - 1) // 2):
        xs.append(FieldElement(ctx, Q.level, Q.x))
        Q = Q + T
    k = T.level
    h = Poly(ctx, k, [ctx.raw_one(k)])
    for xv in xs:
        h = h * Poly(ctx, k, [ctx.neg(k, xv.raw), ctx.raw_one(k)])
    # coefficients lie in F_{p^2} because the subgroup is Galois-stable
    coeffs = [ctx.raw_to_f2(k, c) if k > 1 else c for c in h.coeffs]
    return Poly(ctx, 1, coeffs)


def dual_step(step: IsogenyStep, rng: random.Random) -> IsogenyStep:
    """The dual isogeny, with phi_hat o phi = [deg] verified on random points."""
    E, E2 = step.domain, step.codomain
    ctx = E.ctx
    if step.kind == KIND_ISOMORPHISM:
        return iso_step_to(E2, E, step.u.inverse())
    if step.kind == KIND_FROBENIUS:
        # on pi_E = [p] models:  pi_{E^{(p)}} o pi_E = pi_E^2 = [p]
        return frobenius_step(E2)
    if step.kind == KIND_SCALAR:
        return scalar_step(E, step.n)
    ell = step.degree
    Q = _ell_point_avoiding(E, ell, step.kernel_poly, rng)
    T = step.evaluate(Q)
    assert not T.is_infinity()
    hdual = _subgroup_poly_from_point(T, ell)
    cand = _velu_from_kernel(E2, hdual, ell)
    # correct the codomain onto E exactly, trying automorphism twists
    us = _iso_u_candidates(cand.codomain, E, rng)
    probes = [random_point(E, 1, rng) for _ in range(3)]
    for u in us:
        dual = _velu_twisted(E2, hdual, ell, u, E)
        if all(dual.evaluate(step.evaluate(P)) == ell * P for P in probes):
            return dual
    raise BadKernel("no automorphism twist makes phi_hat o phi = [ell]")


def iso_step_to(E: Curve, target: Curve, u: FieldElement) -> IsogenyStep:
    step = iso_step(E, u)
    assert step.codomain == target
    return step


def _iso_u_candidates(src: Curve, dst: Curve, rng: random.Random):
    """All u with (x,y) -> (u^2 x, u^3 y) mapping src onto dst exactly."""
    ctx = src.ctx
    out = []
    if src.a and src.b:
        u2 = (dst.b * src.a) / (src.b * dst.a)
        u = u2.sqrt()
        if u is not None and u:
            for cand in (u, -u):
                u4 = (cand * cand) ** 2
                if src.a * u4 == dst.a and src.b * u4 * cand * cand == dst.b:
                    out.append(cand)
    elif not src.a:  # j = 0
        if dst.a or not dst.b:
            return []
        c = dst.b / src.b
        f = Poly(ctx, 1, [(-c).raw] + [ctx.raw_zero(1)] * 5 + [ctx.fp2(1).raw])
        out = [r for r, _ in roots_in_field(f, 1, rng)]
    else:  # j = 1728
        if dst.b or not dst.a:
            return []
        c = dst.a / src.a
        f = Poly(ctx, 1, [(-c).raw] + [ctx.raw_zero(1)] * 3 + [ctx.fp2(1).raw])
        out = [r for r, _ in roots_in_field(f, 1, rng)]
    return out


# ---------------------------------------------------------------------------
# Chains.
# ---------------------------------------------------------------------------


class IsogenyChain:
    """Composable sequence of steps; endpoint models must match exactly.

    An empty chain (identity) is allowed when a domain curve is given."""

    __slots__ = ("steps", "formal_degree", "_domain")

    def __init__(self, steps, domain=None):
        steps = tuple(steps)
        assert steps or domain is not None, "empty chain needs an explicit domain"
        for s, t in zip(steps, steps[1:]):
            assert s.codomain == t.domain, "chain endpoints do not match"
        deg = 1
        for s in steps:
            deg *= s.degree
        self.steps = steps
        self.formal_degree = deg
        self._domain = domain if domain is not None else steps[0].domain

    @property
    def domain(self):
        return self._domain

    @property
    def codomain(self):
        return self.steps[-1].codomain if self.steps else self._domain

    def __repr__(self):
        return f"IsogenyChain({len(self.steps)} steps, deg={self.formal_degree})"

    def evaluate(self, P: Point) -> Point:
        for s in self.steps:
            P = s.evaluate(P)
        return P

    def compose(self, other: "IsogenyChain") -> "IsogenyChain":
        """self o other: apply other first."""
        return IsogenyChain(other.steps + self.steps)

    def is_endomorphism(self):
        return self.domain == self.codomain

    def to_json(self):
        return {
            "formal_degree": str(self.formal_degree),
            "steps": [s.to_json() for s in self.steps],
        }

    @classmethod
    def from_json(cls, ctx, data):
        steps = []
        for sd in data["steps"]:
            dom = Curve.from_json(ctx, sd["domain"])
            kind = sd["kind"]
            if kind == KIND_VELU:
                h = Poly(ctx, 1, [tuple(int(v) % ctx.p for v in c) for c in sd["kernel_poly"]])
                if "u" in sd:
                    u = ctx.elem_from_json(1, sd["u"])
                    cod = Curve.from_json(ctx, sd["codomain"])
                    steps.append(_velu_twisted(dom, h.monic(), int(sd["degree"]), u, cod))
                else:
                    steps.append(velu_isogeny(dom, h))
            elif kind == KIND_ISOMORPHISM:
                steps.append(iso_step(dom, ctx.elem_from_json(1, sd["u"])))
            elif kind == KIND_FROBENIUS:
                steps.append(frobenius_step(dom))
            else:
                steps.append(scalar_step(dom, int(sd["n"])))
        return cls(steps)


def conjugate_chain(chain: IsogenyChain) -> IsogenyChain:
    return IsogenyChain([conjugate_step(s) for s in chain.steps])


def evaluate_chain(chain: IsogenyChain, P: Point) -> Point:
    return chain.evaluate(P)


# ---------------------------------------------------------------------------
# Torsion points via the known group structure of pi_E = [p] models.
# ---------------------------------------------------------------------------


def torsion_point(E: Curve, m: int, rng: random.Random, order_exact=True):
    """A point of order (exactly, by default) m, for m | p^k - 1 with
    k = ord_m(p); E must be a pi_E = [p] model so that E(F_{p^{2k}}) is
    (Z/(p^k-1))^2."""
    ctx = E.ctx
    p = ctx.p
    k = torsion_basis_level(p, m)
    if k not in ctx.levels:
        ctx.extend(k)
    N = p ** k - 1
    assert N % m == 0
    cof = N // m
    fac = factor_int(m) if order_exact else {}
    for _ in range(64):
        P = cof * random_point(E, k, rng)
        if P.is_infinity():
            continue
        if not order_exact:
            return P
        if all(not (m // q * P).is_infinity() for q in fac):
            return P
    # combine per-prime-power components when a single sample keeps failing
    total = E.infinity(k)
    for q, e in fac.items():
        qe = q ** e
        while True:
            Pq = (N // qe) * random_point(E, k, rng)
            if not (qe // q * Pq).is_infinity():
                break
        total = total + Pq
    assert all(not (m // q * total).is_infinity() for q in fac)
    return total
