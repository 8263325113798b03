"""Quaternion algebras over Q, HNF lattices/orders, Gram-to-algebra
constructions, p-saturation, overorder enumeration, and maximal orders.

Lattices live in a fixed 4-dimensional coordinate frame whose
multiplication is supplied by a *model*: either H(a,b) structure
constants or a multiplication table recovered from a Gram matrix.  All
lattices are canonically stored in Hermite normal form with a reduced
denominator, so equality of lattices is equality of stored data.
"""

import random
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from .fields import factor_int, is_prime

__all__ = [
    "Degenerate",
    "NotASquare",
    "NotPerfectSquare",
    "NotFullRank",
    "NotMaximal",
    "NotLocallyMaximalElsewhere",
    "FactorizationMismatch",
    "QuatAlgebra",
    "QuatElement",
    "HabModel",
    "TableModel",
    "QLattice",
    "lattice_from_rows",
    "discrd",
    "is_order",
    "order_from_generators",
    "extend_order",
    "ldl_to_algebra",
    "mult_table_from_gram",
    "p_saturate",
    "two_sided_P",
    "right_order",
    "index_q_overorders",
    "maximal_overorders",
    "maximalize",
    "standard_max_order",
    "random_max_order",
]

ENUM_Q_LIMIT = 4096


class Degenerate(ValueError):
    pass


class NotASquare(ValueError):
    pass


class NotPerfectSquare(ValueError):
    pass


class NotFullRank(ValueError):
    pass


class NotMaximal(ValueError):
    pass


class NotLocallyMaximalElsewhere(RuntimeError):
    pass


class FactorizationMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# Algebras and models.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuatAlgebra:
    """H(a, b): i^2 = a, j^2 = b, ij = -ji."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        assert self.a != 0 and self.b != 0


class HabModel:
    """Coordinate frame (1, i, j, ij) of H(a, b)."""

    __slots__ = ("alg",)

    def __init__(self, alg: QuatAlgebra):
        self.alg = alg

    def one(self):
        return (Fraction(1), Fraction(0), Fraction(0), Fraction(0))

    def mult(self, x, y):
        a, b = self.alg.a, self.alg.b
        w1, x1, y1, z1 = x
        w2, x2, y2, z2 = y
        return (
            w1 * w2 + a * x1 * x2 + b * y1 * y2 - a * b * z1 * z2,
            w1 * x2 + x1 * w2 - b * y1 * z2 + b * z1 * y2,
            w1 * y2 + y1 * w2 + a * x1 * z2 - a * z1 * x2,
            w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2,
        )

    def trd(self, x):
        return 2 * x[0]

    def nrd(self, x):
        a, b = self.alg.a, self.alg.b
        w, xx, y, z = x
        return w * w - a * xx * xx - b * y * y + a * b * z * z

    def conj(self, x):
        return (x[0], -x[1], -x[2], -x[3])

    def gram(self):
        a, b = self.alg.a, self.alg.b
        return [
            [Fraction(2), Fraction(0), Fraction(0), Fraction(0)],
            [Fraction(0), -2 * a, Fraction(0), Fraction(0)],
            [Fraction(0), Fraction(0), -2 * b, Fraction(0)],
            [Fraction(0), Fraction(0), Fraction(0), 2 * a * b],
        ]


class TableModel:
    """Frame (gamma_0=1, gamma_1, gamma_2, gamma_3) with an explicit
    multiplication table and the Gram matrix it was derived from."""

    __slots__ = ("table", "G")

    def __init__(self, table, G):
        self.table = table  # table[r][s] = coords of gamma_r gamma_s
        self.G = [[Fraction(v) for v in row] for row in G]

    def one(self):
        return (Fraction(1), Fraction(0), Fraction(0), Fraction(0))

    def mult(self, x, y):
        out = [Fraction(0)] * 4
        tab = self.table
        for r in range(4):
            xr = x[r]
            if not xr:
                continue
            tr = tab[r]
            for s in range(4):
                ys = y[s]
                if not ys:
                    continue
                m = tr[s]
                c = xr * ys
                out[0] += c * m[0]
                out[1] += c * m[1]
                out[2] += c * m[2]
                out[3] += c * m[3]
        return tuple(out)

    def trd(self, x):
        G = self.G
        return sum(x[r] * G[r][0] for r in range(4))

    def nrd(self, x):
        G = self.G
        acc = Fraction(0)
        for r in range(4):
            if x[r]:
                acc += x[r] * sum(G[r][s] * x[s] for s in range(4))
        return acc / 2

    def conj(self, x):
        t = self.trd(x)
        return (t - x[0], -x[1], -x[2], -x[3])

    def gram(self):
        return self.G


class QuatElement:
    """Element of H(a, b) with Fraction coordinates over (1, i, j, ij)."""

    __slots__ = ("model", "coords")

    def __init__(self, model: HabModel, coords):
        self.model = model
        self.coords = tuple(Fraction(c) for c in coords)

    def __add__(self, other):
        return QuatElement(self.model, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        return QuatElement(self.model, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return QuatElement(self.model, tuple(-a for a in self.coords))

    def __mul__(self, other):
        if isinstance(other, QuatElement):
            return QuatElement(self.model, self.model.mult(self.coords, other.coords))
        return QuatElement(self.model, tuple(Fraction(other) * a for a in self.coords))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, QuatElement) and self.coords == other.coords

    def __repr__(self):
        return f"QuatElement{self.coords}"

    def trd(self):
        return self.model.trd(self.coords)

    def nrd(self):
        return self.model.nrd(self.coords)

    def conjugate(self):
        return QuatElement(self.model, self.model.conj(self.coords))


# ---------------------------------------------------------------------------
# HNF lattices.
# ---------------------------------------------------------------------------


def _hnf_rows(mat):
    """Row HNF of integer rows: echelon, positive pivots, entries above
    each pivot reduced into [0, pivot)."""
    mat = [list(r) for r in mat if any(r)]
    ncols = 4
    r = 0
    pivots = []
    for c in range(ncols):
        nz = [i for i in range(r, len(mat)) if mat[i][c] != 0]
        if not nz:
            continue
        while len(nz) > 1:
            nz.sort(key=lambda i: abs(mat[i][c]))
            i0 = nz[0]
            for i in nz[1:]:
                q = mat[i][c] // mat[i0][c]
                mat[i] = [x - q * y for x, y in zip(mat[i], mat[i0])]
            nz = [i for i in range(r, len(mat)) if mat[i][c] != 0]
        i0 = nz[0]
        mat[r], mat[i0] = mat[i0], mat[r]
        if mat[r][c] < 0:
            mat[r] = [-x for x in mat[r]]
        pivots.append((r, c))
        r += 1
    mat = mat[:r]
    # reduce entries above pivots; left-to-right, since a pivot row has
    # zeros left of its pivot, later reductions keep earlier columns reduced
    for k, c in pivots:
        piv = mat[k][c]
        for i in range(k):
            q = mat[i][c] // piv
            if q:
                mat[i] = [x - q * y for x, y in zip(mat[i], mat[k])]
    return [row for row in mat if any(row)]


class QLattice:
    """Full-rank lattice in the frame, canonically (denominator, HNF)."""

    __slots__ = ("den", "mat")

    def __init__(self, den, mat):
        self.den = den
        self.mat = tuple(tuple(r) for r in mat)

    def __eq__(self, other):
        return isinstance(other, QLattice) and self.den == other.den and self.mat == other.mat

    def __hash__(self):
        return hash((self.den, self.mat))

    def __repr__(self):
        return f"QLattice(1/{self.den} * {self.mat})"

    def basis_rows(self):
        d = Fraction(1, self.den)
        return [tuple(d * v for v in row) for row in self.mat]

    def det(self) -> Fraction:
        num = 1
        for i in range(4):
            num *= self.mat[i][i]
        return Fraction(num, self.den ** 4)

    def contains(self, vec) -> bool:
        """Membership of a Fraction 4-vector by forward substitution
        (rows are upper triangular with pivots on the diagonal)."""
        v = [Fraction(c) * self.den for c in vec]
        for i in range(4):
            piv = self.mat[i][i]
            q, r = divmod(v[i], piv)
            if r != 0:
                return False
            for jcol in range(i, 4):
                v[jcol] -= q * self.mat[i][jcol]
        return all(x == 0 for x in v)

    def index_in(self, bigger: "QLattice") -> int:
        """[bigger : self] as a positive integer."""
        ratio = self.det() / bigger.det()
        assert ratio.denominator == 1 and ratio > 0, "not a sublattice relation"
        return int(ratio)

    def sum_with_rows(self, rows) -> "QLattice":
        return lattice_from_rows(self.basis_rows() + list(rows))

    def scale(self, c: Fraction) -> "QLattice":
        return lattice_from_rows([tuple(c * v for v in row) for row in self.basis_rows()])

    def to_json(self):
        return {
            "basis": [
                [f"{v.numerator}/{v.denominator}" for v in row] for row in self.basis_rows()
            ]
        }


def lattice_from_rows(rows) -> QLattice:
    """Canonical lattice spanned by Fraction 4-vectors; NotFullRank if the
    span has rank < 4."""
    den = 1
    frac_rows = [[Fraction(v) for v in row] for row in rows]
    for row in frac_rows:
        for v in row:
            den = den * v.denominator // gcd(den, v.denominator)
    int_rows = [[int(v * den) for v in row] for row in frac_rows]
    H = _hnf_rows(int_rows)
    if len(H) < 4:
        raise NotFullRank(f"rank {len(H)} < 4")
    g = den
    for row in H:
        for v in row:
            g = gcd(g, v)
    return QLattice(den // g, [[v // g for v in row] for row in H])


def _rows_rank(rows):
    den = 1
    frac_rows = [[Fraction(v) for v in row] for row in rows]
    for row in frac_rows:
        for v in row:
            den = den * v.denominator // gcd(den, v.denominator)
    return len(_hnf_rows([[int(v * den) for v in row] for row in frac_rows]))


# ---------------------------------------------------------------------------
# Orders.
# ---------------------------------------------------------------------------


def gram_of_basis(model, lat: QLattice):
    B = lat.basis_rows()
    G = model.gram()
    out = []
    for i in range(4):
        Gi = [sum(G[r][s] * B[i][r] for r in range(4)) for s in range(4)]
        out.append([sum(Gi[s] * B[j][s] for s in range(4)) for j in range(4)])
    return out


def _det4(M):
    """Exact 4x4 determinant by cofactor expansion."""

    def det3(m):
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    tot = 0
    sgn = 1
    for c in range(4):
        minor = [[M[r][cc] for cc in range(4) if cc != c] for r in range(1, 4)]
        tot += sgn * M[0][c] * det3(minor)
        sgn = -sgn
    return tot


def disc_of(model, lat: QLattice) -> Fraction:
    return _det4(gram_of_basis(model, lat))


def discrd(model, lat: QLattice) -> int:
    """Positive integer square root of the discriminant."""
    d = disc_of(model, lat)
    num, den = d.numerator, d.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise NotASquare(f"disc {d} is not a rational square")
    v = Fraction(rn, rd)
    assert v.denominator == 1, f"reduced discriminant {v} is not an integer"
    return int(v)


def is_order(model, lat: QLattice) -> bool:
    if not lat.contains(model.one()):
        return False
    B = lat.basis_rows()
    for x in B:
        if model.trd(x).denominator != 1 or model.nrd(x).denominator != 1:
            return False
    for x in B:
        for y in B:
            if not lat.contains(model.mult(x, y)):
                return False
    return True


def order_from_generators(model, gens, max_iter: int = 24) -> QLattice:
    """Minimal order containing 1 and the given integral generators:
    iterate product-closure of the HNF lattice until stable."""
    rows = [model.one()] + [tuple(Fraction(c) for c in g) for g in gens]
    if _rows_rank(rows) < 4:
        # products may still raise the rank; add pairwise products first
        prods = [model.mult(x, y) for x in rows for y in rows]
        rows = rows + prods
    lat = lattice_from_rows(rows)
    for _ in range(max_iter):
        B = lat.basis_rows()
        prods = [model.mult(x, y) for x in B for y in B]
        if all(lat.contains(v) for v in prods):
            return lat
        lat = lat.sum_with_rows(prods)
    raise RuntimeError("order closure did not stabilize; generators not integral?")


def extend_order(model, lat: QLattice, vec) -> QLattice:
    """Minimal order containing the order `lat` and the element `vec`."""
    return order_from_generators(model, list(lat.basis_rows()) + [tuple(vec)])


# ---------------------------------------------------------------------------
# Gram -> algebra.
# ---------------------------------------------------------------------------


def _ldlt(G):
    """G = L D L^T for symmetric G with nonzero leading minors."""
    n = len(G)
    L = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    D = [Fraction(0)] * n
    for j in range(n):
        D[j] = Fraction(G[j][j]) - sum(L[j][k] * L[j][k] * D[k] for k in range(j))
        if D[j] == 0:
            raise Degenerate("zero pivot in LDL^T (degenerate Gram)")
        for i in range(j + 1, n):
            L[i][j] = (Fraction(G[i][j]) - sum(L[i][k] * L[j][k] * D[k] for k in range(j))) / D[j]
    return L, D


def _fraction_sqrt(f: Fraction):
    rn, rd = isqrt(f.numerator), isqrt(f.denominator)
    if rn * rn != f.numerator or rd * rd != f.denominator:
        return None
    return Fraction(rn, rd)


def ldl_to_algebra(G):
    """(H(a,b), L, c') from a trace-pairing Gram matrix with G[0][0] = 2.

    The quadratic-space isometry sends gamma-coordinates x to the H(a,b)
    coordinates (y0, y1, y2, c'*y3) where y = L^T-transform of x.
    """
    if _det4([[Fraction(v) for v in row] for row in G]) == 0:
        raise Degenerate("det(G) = 0")
    assert G[0][0] == 2
    L, D = _ldlt(G)
    a = -D[1] / 2
    b = -D[2] / 2
    c2 = 2 * D[3] / (D[1] * D[2])
    c = _fraction_sqrt(c2)
    if c is None:
        raise NotASquare(f"2 d3/(d1 d2) = {c2} is not a rational square")
    return QuatAlgebra(a, b), L, c


def gamma_to_hab(L, c, x):
    """Map gamma-frame coordinates into H(a,b) coordinates."""
    y = [sum(L[i][j] * Fraction(x[j]) for j in range(4)) for i in range(4)]
    return (y[0], y[1], y[2], c * y[3])


def mult_table_from_gram(G, sign: int = 1) -> TableModel:
    """Multiplication table for a trace-zero basis (1, g1, g2, g3) from its
    Gram matrix; Trd(g1 g2 conj(g3)) is fixed to sign * sqrt(det G)/2.

    The table is checked for associativity on all 64 triples.
    """
    assert sign in (1, -1)
    Gf = [[Fraction(v) for v in row] for row in G]
    assert Gf[0][0] == 2 and all(Gf[0][i] == 0 for i in (1, 2, 3)), "basis not trace-zero"
    det = _det4(Gf)
    if det == 0:
        raise Degenerate("det(G) = 0")
    s = _fraction_sqrt(det)
    if s is None:
        raise NotPerfectSquare(f"det(G) = {det} is not a perfect square")
    T3 = sign * s / 2  # Trd(g1 g2 conj(g3))
    table = [[None] * 4 for _ in range(4)]
    e = [tuple(Fraction(1 if t == r else 0) for t in range(4)) for r in range(4)]
    for r in range(4):
        table[0][r] = e[r]
        table[r][0] = e[r]
    for r in range(1, 4):
        table[r][r] = (-Gf[r][r] / 2, Fraction(0), Fraction(0), Fraction(0))
    # Trd(g_r g_s conj(g_k)) for the three independent products
    rhs = {
        (1, 2): [-Gf[1][2], Gf[1][1] * Gf[2][0] / 2, Gf[2][2] * Gf[1][0] / 2, T3],
        (1, 3): [-Gf[1][3], Gf[1][1] * Gf[3][0] / 2, -T3, Gf[3][3] * Gf[1][0] / 2],
        (2, 3): [-Gf[2][3], T3, Gf[2][2] * Gf[3][0] / 2, Gf[3][3] * Gf[2][0] / 2],
    }
    for (r, s), b in rhs.items():
        m = _solve4(Gf, b)
        table[r][s] = tuple(m)
        # gamma_s gamma_r = Trd(gamma_r gamma_s) - gamma_r gamma_s
        t0 = -Gf[r][s] - m[0]
        table[s][r] = (t0, -m[1], -m[2], -m[3])
    model = TableModel(table, Gf)
    for r in range(4):
        for s in range(4):
            for u in range(4):
                lhs = model.mult(model.mult(e[r], e[s]), e[u])
                rhs_v = model.mult(e[r], model.mult(e[s], e[u]))
                assert lhs == rhs_v, f"associativity fails at ({r},{s},{u})"
    return model


def _solve4(A, b):
    """Solve A x = b exactly (A 4x4 Fractions, invertible)."""
    M = [[Fraction(A[i][j]) for j in range(4)] + [Fraction(b[i])] for i in range(4)]
    for c in range(4):
        piv = next(i for i in range(c, 4) if M[i][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        pv = M[c][c]
        M[c] = [v / pv for v in M[c]]
        for i in range(4):
            if i != c and M[i][c]:
                f = M[i][c]
                M[i] = [v - f * w for v, w in zip(M[i], M[c])]
    return [M[i][4] for i in range(4)]


# ---------------------------------------------------------------------------
# Radicals, saturation, overorders.
# ---------------------------------------------------------------------------


def _radical_mod(model, lat: QLattice, q: int):
    """Basis (coordinates over lat's basis) of the radical of the trace
    pairing mod q."""
    G = gram_of_basis(model, lat)
    M = [[int(G[i][j]) % q for j in range(4)] for i in range(4)]
    return _nullspace_mod(M, q)


def _nullspace_mod(M, q):
    n = len(M)
    A = [row[:] for row in M]
    cols = list(range(n))
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, n) if A[i][c] % q), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], -1, q)
        A[r] = [v * inv % q for v in A[r]]
        for i in range(n):
            if i != r and A[i][c] % q:
                f = A[i][c]
                A[i] = [(v - f * w) % q for v, w in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    free = [c for c in cols if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = (-A[i][fc]) % q
        basis.append(v)
    return basis


def _sqrt_mod(a: int, q: int):
    a %= q
    if a == 0:
        return 0
    if pow(a, (q - 1) // 2, q) != 1:
        return None
    if q % 4 == 3:
        return pow(a, (q + 1) // 4, q)
    # Tonelli-Shanks
    m, e = q - 1, 0
    while m % 2 == 0:
        m //= 2
        e += 1
    z = 2
    while pow(z, (q - 1) // 2, q) != q - 1:
        z += 1
    c = pow(z, m, q)
    t = pow(a, m, q)
    r = pow(a, (m + 1) // 2, q)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = t2 * t2 % q
            i += 1
        b = pow(c, 1 << (e - i - 1), q)
        r = r * b % q
        c = b * b % q
        t = t * c % q
        e = i
    return r


def _isotropic_lines(form, dim, q):
    """All projective solutions of the quadratic form `form` (a callable on
    integer tuples, values mod q) on F_q^dim; complete enumeration.

    Representatives have first nonzero coordinate 1.  Quadratic in the last
    coordinate is solved by mod-q square roots, so the cost is O(q^{dim-2})
    square-root calls.
    """
    if dim == 0:
        return
    if dim == 1:
        if form((1,)) % q == 0:
            yield (1,)
        return
    # solutions with leading coordinate 1: solve a quadratic in the last slot
    def emit(prefix):
        # prefix has dim-1 entries; solve for z in form(prefix + (z,)) = 0
        f0 = form(prefix + (0,)) % q
        f1 = form(prefix + (1,)) % q
        fm1 = form(prefix + (q - 1,)) % q
        # form = A z^2 + B z + C with C = f0, A = (f1 + fm1 - 2 f0)/2, B = (f1 - fm1)/2
        A = (f1 + fm1 - 2 * f0) * pow(2, -1, q) % q
        B = (f1 - fm1) * pow(2, -1, q) % q
        C = f0
        if A == 0:
            if B == 0:
                if C == 0:
                    for z in range(q):
                        yield prefix + (z,)
                return
            yield prefix + ((-C * pow(B, -1, q)) % q,)
            return
        disc = (B * B - 4 * A * C) % q
        s = _sqrt_mod(disc, q)
        if s is None:
            return
        inv2a = pow(2 * A, -1, q)
        z1 = (-B + s) * inv2a % q
        yield prefix + (z1,)
        z2 = (-B - s) * inv2a % q
        if z2 != z1:
            yield prefix + (z2,)

    from itertools import product as iproduct

    for mid in iproduct(range(q), repeat=dim - 2):
        yield from emit((1,) + mid)
    # leading coordinate 0: recurse on the lower-dimensional subspace
    for sol in _isotropic_lines(lambda v: form((0,) + v), dim - 1, q):
        yield (0,) + sol


def _saturation_candidates(model, lat: QLattice, q: int):
    """Elements x of the order with x/q a plausible order element: x in the
    radical mod q with Nrd(x) = 0 mod q^2, yielded as frame vectors."""
    rad = _radical_mod(model, lat, q)
    if not rad:
        return
    B = lat.basis_rows()

    def lift(coords):
        out = [Fraction(0)] * 4
        for cf, v in zip(coords, rad):
            for i in range(4):
                for t in range(4):
                    out[t] += cf * v[i] * B[i][t]
        return tuple(out)

    if q == 2:
        # char 2: the bilinear radical does not control the quadratic form,
        # so enumerate the <= 15 radical lines directly
        from itertools import product as iproduct

        for lmb in iproduct((0, 1), repeat=len(rad)):
            if not any(lmb):
                continue
            x = lift(lmb)
            n = model.nrd(x)
            t = model.trd(x)
            if n.numerator % 4 == 0 and t.numerator % 2 == 0:
                yield tuple(v / 2 for v in x)
        return

    def form(lmb):
        x = lift(lmb)
        n = model.nrd(x)
        assert n.denominator == 1 and n.numerator % q == 0
        return (n.numerator // q) % q

    for sol in _isotropic_lines(form, len(rad), q):
        x = lift(sol)
        n = model.nrd(x)
        t = model.trd(x)
        if n.numerator % (q * q) == 0 and t.numerator % q == 0:
            yield tuple(v / q for v in x)


def p_saturate(model, lat: QLattice, p: int) -> QLattice:
    """The p-saturated order containing `lat` (which must be maximal away
    from p): adjoin radical lifts divided by p until v_p(discrd) <= 1."""
    cur = lat
    d = discrd(model, cur)
    guard = 0
    while d % (p * p) == 0:
        guard += 1
        if guard > 64:
            raise NotLocallyMaximalElsewhere("p-saturation is not making progress")
        progressed = False
        for cand in _saturation_candidates(model, cur, p):
            try:
                bigger = extend_order(model, cur, cand)
            except (RuntimeError, NotFullRank):
                continue
            d2 = discrd(model, bigger)
            if d2 < d and d % d2 == 0:
                cur, d = bigger, d2
                progressed = True
                break
        if not progressed:
            raise NotLocallyMaximalElsewhere(
                f"no integral radical lift at p={p}; input not maximal away from p?"
            )
    return cur


def two_sided_P(model, O: QLattice, p: int) -> QLattice:
    """The unique two-sided ideal of reduced norm p in a maximal order."""
    if discrd(model, O) != p:
        raise NotMaximal("two_sided_P needs a maximal order")
    rad = _radical_mod(model, O, p)
    B = O.basis_rows()
    rows = [tuple(p * v for v in row) for row in B]
    for coords in rad:
        vec = [Fraction(0)] * 4
        for i in range(4):
            if coords[i]:
                for t in range(4):
                    vec[t] += coords[i] * B[i][t]
        rows.append(tuple(vec))
    P = lattice_from_rows(rows)
    assert P.index_in(O) == p * p, "[O : P] != p^2"
    # two-sidedness
    for x in B:
        for y in P.basis_rows():
            assert P.contains(model.mult(x, y)) and P.contains(model.mult(y, x))
    return P


def right_order(model, I: QLattice) -> QLattice:
    """O_R(I) = {x : I x <= I} by exact linear algebra."""
    B = I.basis_rows()
    e = [tuple(Fraction(1 if t == r else 0) for t in range(4)) for r in range(4)]
    # condition rows: x |-> coords of (b_i * x) over I's basis must be integral
    cond_rows = []
    Binv_cols = _inv4([[Fraction(B[r][c]) for c in range(4)] for r in range(4)])
    for bi in B:
        for s in range(4):
            w = model.mult(bi, e[s])  # frame coords, linear in x_s
            # express w over I's basis: w * Binv (row vector times inverse)
            cond_rows.append([sum(w[t] * Binv_cols[t][c] for t in range(4)) for c in range(4)])
    # lattice {x : for each condition column set, sum_s x_s cond[s] in Z}
    # cond_rows currently indexed by (i, s) -> row over c; regroup: for each
    # (i, c), the linear form in x is L[(i,c)][s] = cond_rows[i*4+s][c]
    forms = []
    for i in range(4):
        for c in range(4):
            forms.append([cond_rows[i * 4 + s][c] for s in range(4)])
    R = lattice_from_rows(forms)
    # solution lattice = {x : R x in Z^4} = rows of (R_mat/den)^{-1} transposed
    Rb = [[Fraction(v) for v in row] for row in R.basis_rows()]
    Rinv = _inv4(Rb)
    rows = [tuple(Rinv[r][c] for r in range(4)) for c in range(4)]  # columns of Rinv
    out = lattice_from_rows(rows)
    assert is_order(model, out), "right order is not an order?"
    return out


def _inv4(M):
    A = [[Fraction(M[i][j]) for j in range(4)] + [Fraction(1 if i == j else 0) for j in range(4)]
         for i in range(4)]
    for c in range(4):
        piv = next(i for i in range(c, 4) if A[i][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        pv = A[c][c]
        A[c] = [v / pv for v in A[c]]
        for i in range(4):
            if i != c and A[i][c]:
                f = A[i][c]
                A[i] = [v - f * w for v, w in zip(A[i], A[c])]
    return [[A[i][4 + j] for j in range(4)] for i in range(4)]


def index_q_overorders(model, lat: QLattice, q: int):
    """All orders O' with lat < O' and [O' : lat] = q.

    Every such O' is lat + Z (x/q) with x in the radical of the pairing
    mod q and Nrd(x) = 0 mod q^2.  The enumeration touches
    q^(dim(radical) - 2) candidates, so it is exhaustive and cheap
    whenever the radical is a plane (v_q = 1), for q of any size.
    """
    out = []
    seen = set()
    for cand in _saturation_candidates(model, lat, q):
        bigger = lat.sum_with_rows([cand])
        try:
            idx = lat.index_in(bigger)
        except AssertionError:
            continue
        if idx != q or bigger in seen:
            continue
        if is_order(model, bigger):
            seen.add(bigger)
            out.append(bigger)
    return out


def _enum_cost(model, lat, q):
    dim = len(_radical_mod(model, lat, q))
    return q ** max(0, dim - 2)


ENUM_COST_LIMIT = 2 * 10 ** 5


def _radical_idealizer(model, lat: QLattice, q: int) -> QLattice:
    """Right order of (q*lat + radical lift), a strict overorder for
    non-q-maximal lat; used for primes beyond the enumeration limit."""
    rad = _radical_mod(model, lat, q)
    B = lat.basis_rows()
    rows = [tuple(q * v for v in row) for row in B]
    for coords in rad:
        vec = [Fraction(0)] * 4
        for i in range(4):
            if coords[i]:
                for t in range(4):
                    vec[t] += coords[i] * B[i][t]
        rows.append(tuple(vec))
    J = lattice_from_rows(rows)
    return right_order(model, J)


def maximal_overorders(model, lat: QLattice, p: int, factored=None):
    """All maximal orders containing `lat` (Bass input), by BFS over
    index-q overorders for q != p plus p-saturation for the p-part."""
    d0 = discrd(model, lat)
    if factored is not None:
        prod = 1
        for q, e in factored.items():
            prod *= q ** e
        if prod != d0:
            raise FactorizationMismatch(f"{prod} != discrd {d0}")
        fac = dict(factored)
    else:
        fac = factor_int(d0)
    qs = sorted(q for q in fac if q != p)
    frontier = [lat]
    for q in qs:
        nxt = []
        seen = set()
        stack = list(frontier)
        while stack:
            O = stack.pop()
            if discrd(model, O) % q != 0:
                if O not in seen:
                    seen.add(O)
                    nxt.append(O)
                continue
            if _enum_cost(model, O, q) > ENUM_COST_LIMIT:
                warnings.warn(
                    f"index-{q} overorders via radical idealizer "
                    f"(deep radical at large q; enumeration skipped)"
                )
                bigger = _radical_idealizer(model, O, q)
                if bigger == O or not O.basis_rows()[0]:
                    raise RuntimeError(f"radical idealizer stalled at q={q}")
                succ = [bigger]
            else:
                succ = index_q_overorders(model, O, q)
            if not succ:
                # q-maximal even though q | discrd cannot happen in B_{p,oo}
                raise RuntimeError(f"stuck at q={q}: no overorders but q | discrd")
            stack.extend(succ)
        frontier = nxt
    out = []
    seen = set()
    for O in frontier:
        M = p_saturate(model, O, p)
        if M not in seen:
            seen.add(M)
            out.append(M)
    for M in out:
        assert discrd(model, M) == p
    return out


def maximalize(model, lat: QLattice, p: int) -> QLattice:
    """Some maximal order containing lat (first branch of the BFS)."""
    cur = lat
    d = discrd(model, cur)
    for q in sorted(factor_int(d)):
        if q == p:
            continue
        while discrd(model, cur) % q == 0:
            if _enum_cost(model, cur, q) > ENUM_COST_LIMIT:
                cur = _radical_idealizer(model, cur, q)
            else:
                succ = index_q_overorders(model, cur, q)
                assert succ, f"no index-{q} overorder"
                cur = succ[0]
    cur = p_saturate(model, cur, p)
    assert discrd(model, cur) == p
    return cur


# ---------------------------------------------------------------------------
# Maximal orders in B_{p,oo}.
# ---------------------------------------------------------------------------


def _legendre(a, p):
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def standard_max_order(p: int):
    """(model, O) with O maximal in B_{p,oo}, by the classical tables
    keyed on p mod 12; validated by discrd(O) = p."""
    assert is_prime(p) and p % 2 == 1
    h = Fraction(1, 2)
    if p % 4 == 3:
        alg = QuatAlgebra(Fraction(-1), Fraction(-p))
        rows = [
            (1, 0, 0, 0),
            (0, 1, 0, 0),
            (0, h, h, 0),
            (h, 0, 0, h),
        ]
    elif p % 3 == 2:
        alg = QuatAlgebra(Fraction(-3), Fraction(-p))
        rows = [
            (1, 0, 0, 0),
            (h, h, 0, 0),
            (0, 0, h, h),
            (0, Fraction(1, 3), 0, Fraction(1, 3)),
        ]
    else:
        q = 3
        while True:
            q = _next_prime_q(q)
            if q % 4 == 3 and _legendre(-q, p) == -1:
                break
        s = _sqrt_mod(-p % q, q)
        assert s is not None
        c = min(s, q - s)
        alg = QuatAlgebra(Fraction(-q), Fraction(-p))
        rows = [
            (1, 0, 0, 0),
            (h, h, 0, 0),
            (0, 0, h, h),
            (0, Fraction(c, q), 0, Fraction(1, q)),
        ]
    model = HabModel(alg)
    O = lattice_from_rows(rows)
    assert is_order(model, O), "standard basis is not multiplicatively closed"
    assert discrd(model, O) == p, "standard order is not maximal"
    return model, O


def _next_prime_q(q):
    q += 1
    while not is_prime(q):
        q += 1
    return q


_SMALL_Q = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]


def random_max_order(p: int, rng: random.Random, steps=None):
    """A pseudorandom maximal order: left-ideal random walk from the
    standard order, replacing O by the right order of a random ideal of
    small prime norm, ~log2(p) times."""
    model, O = standard_max_order(p)
    n = steps if steps is not None else max(4, p.bit_length())
    for _ in range(n):
        q = rng.choice([x for x in _SMALL_Q if x != p])
        O = _random_ideal_step(model, O, q, rng)
        assert discrd(model, O) == p
    return model, O


def _random_ideal_step(model, O: QLattice, q: int, rng: random.Random) -> QLattice:
    B = O.basis_rows()
    while True:
        coords = [rng.randrange(q) for _ in range(4)]
        if all(c == 0 for c in coords):
            continue
        alpha = tuple(
            sum(Fraction(coords[i]) * B[i][t] for i in range(4)) for t in range(4)
        )
        if model.nrd(alpha).numerator % q != 0:
            continue
        rows = [tuple(q * v for v in row) for row in B]
        rows += [model.mult(bi, alpha) for bi in B]
        I = lattice_from_rows(rows)
        if I.index_in(O) != q * q:
            continue  # Nrd(I) != q; resample
        return right_order(model, I)
