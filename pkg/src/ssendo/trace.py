"""Exact reduced traces of endomorphism chains, rho-chains, and Gram matrices.

The trace of an endomorphism chain c of degree n is pinned down by CRT:
for prime powers q^e with small multiplicative order k = ord_{q^e}(p),
E[q^e] is rational over F_{p^{2k}} (the curve is a pi_E = [p] model, so
E(F_{p^{2k}}) = E[p^k - 1]); evaluating c twice on a torsion point P and
solving c(c(P)) + [n]P = [t] c(P) in <c(P)> gives t mod q^e.  Prime powers
are grouped by level so each level costs two chain evaluations total.

Trd(gamma_i * conj_dual(gamma_j)) for inseparable reflections is computed
as p * trd(rho_ij) with rho_ij separable, never by composing Frobenius
twice; this keeps torsion evaluations away from the char-p kernel.
"""

import random
from math import gcd, isqrt

from .curves import IsogenyChain, Point, dual_step, random_point, torsion_point
from .fields import factor_int, mult_order

__all__ = [
    "TowerTooDeep",
    "trd",
    "trd_bruteforce",
    "rho_chain",
    "trd_pairing",
    "gram_of_reflections",
]

POWER_CAP = 10 ** 6
LOW_LEVEL_POWER_CAP = 10 ** 8  # deeper prime powers are cheap in shallow towers
SMALL_PRIME_SIEVE = 10 ** 6
DEFAULT_CEILING = 12
HARD_CEILING = 40

_sieve_cache = []
_candidate_cache = {}


class TowerTooDeep(RuntimeError):
    pass


def _sieved_primes():
    global _sieve_cache
    if not _sieve_cache:
        n = SMALL_PRIME_SIEVE
        sieve = bytearray([1]) * (n + 1)
        sieve[0] = sieve[1] = 0
        for i in range(2, isqrt(n) + 1):
            if sieve[i]:
                sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
        _sieve_cache = [i for i in range(2, n + 1) if sieve[i]]
    return _sieve_cache


def _candidate_prime_powers(p: int, ceiling: int):
    """Prime powers q^e <= POWER_CAP with k = ord_{q^e}(p) <= ceiling,
    found by trial-dividing p^k - 1; sorted by level so that torsion work
    happens in the cheapest towers first."""
    key = (p, ceiling)
    got = _candidate_cache.get(key)
    if got is not None:
        return got
    primes = _sieved_primes()
    seen = {}
    for k in range(1, ceiling + 1):
        N = p ** k - 1
        for q in primes:
            if q in seen or q == p or N % q:
                continue
            e = 1
            kk = k  # = ord_q(p), since k is the first level where q shows up
            while True:
                k2 = mult_order(p, q ** (e + 1))
                cap = LOW_LEVEL_POWER_CAP if max(kk, k2) <= 2 else POWER_CAP
                if q ** (e + 1) > cap or k2 > ceiling:
                    break
                e += 1
                kk = k2
            seen[q] = (e, max(k, kk))
    cands = sorted(
        ((q, e, k) for q, (e, k) in seen.items()),
        key=lambda t: (t[2], -(t[0] ** t[1])),
    )
    _candidate_cache[key] = cands
    return cands


def _prime_power_jobs(p: int, bound: int, ceiling: int):
    """A low-cost subset of candidate prime powers whose product exceeds
    bound; raises the ceiling automatically when needed."""
    while ceiling <= HARD_CEILING:
        jobs = []
        total = 1
        for q, e, k in _candidate_prime_powers(p, ceiling):
            if total > bound:
                break
            jobs.append((q, e, k))
            total *= q ** e
        if total > bound:
            return jobs
        ceiling += 4
    raise TowerTooDeep(f"cannot reach CRT bound {bound} below tower ceiling {HARD_CEILING}")


def _bsgs(base: Point, target: Point, order: int):
    """t with [t] base = target, 0 <= t < order, or None."""
    if target.is_infinity():
        return 0
    if order <= 64:
        acc = base
        for t in range(1, order):
            if acc == target:
                return t
            acc = acc + base
        return None
    m = isqrt(order) + 1
    table = {}
    acc = base.curve.infinity(base.level)
    for j in range(m):
        table.setdefault((acc.x, acc.y), j)
        acc = acc + base
    giant = -(m * base)
    cur = target
    for i in range(m + 1):
        hit = table.get((cur.x, cur.y))
        if hit is not None:
            t = (i * m + hit) % order
            if (t * base) == target:
                return t
        cur = cur + giant
    return None


def _dlog_prime_power(base: Point, target: Point, q: int, e: int):
    """Pohlig-Hellman in <base> of order q^e."""
    t = 0
    qe = q ** e
    g0 = (qe // q) * base
    for i in range(e):
        h = (qe // q ** (i + 1)) * (target - t * base)
        d = _bsgs(g0, h, q)
        if d is None:
            return None
        t += d * q ** i
    return t


def _point_order_qpart(P: Point, q: int, e: int) -> int:
    """The exponent f <= e with ord(P) = q^f, for P in E[q^e]."""
    f = e
    Q = P
    while f > 0 and (q ** (f - 1) * P).is_infinity():
        f -= 1
    return f


def trd(chain: IsogenyChain, rng: random.Random, ceiling: int = DEFAULT_CEILING,
        validate: bool = False) -> int:
    """Exact reduced trace of an endomorphism chain."""
    assert chain.is_endomorphism(), "trace needs an endomorphism"
    E = chain.domain
    ctx = E.ctx
    p = ctx.p
    n = chain.formal_degree
    bound = 4 * isqrt(n) + 1
    jobs = _prime_power_jobs(p, bound, ceiling)
    by_level = {}
    for q, e, k in jobs:
        by_level.setdefault(k, []).append((q, e))
    residues = []  # (residue, modulus)
    achieved = 1
    for k in sorted(by_level):
        if achieved > bound:
            break
        group = by_level[k]
        m = 1
        for q, e in group:
            m *= q ** e
        got = _residues_at_level(chain, E, m, group, n, rng)
        for r, mod in got:
            residues.append((r, mod))
            achieved *= mod
        if validate:
            got2 = _residues_at_level(chain, E, m, group, n, rng)
            for r1, m1 in got:
                for r2, m2 in got2:
                    g = gcd(m1, m2)
                    assert g == 1 or r1 % g == r2 % g, "residues disagree between points"
    if achieved <= bound:
        # degraded moduli (kernel collisions): pull in more prime powers
        return trd(chain, rng, ceiling=ceiling + 4, validate=validate)
    t, mod = 0, 1
    for r, mo in residues:
        assert gcd(mod, mo) == 1
        t = _crt(t, mod, r, mo)
        mod *= mo
    t %= mod
    if t > mod // 2:
        t -= mod
    assert t * t <= 4 * n, "trace exceeds the degree bound"
    return t


def _crt(a, m, b, n):
    """x = a mod m, x = b mod n for coprime m, n."""
    return (a + m * ((b - a) * pow(m, -1, n) % n)) % (m * n)


def _residues_at_level(chain, E, m, group, n, rng):
    """Trace residues modulo each q^e in `group`, all of level k, using one
    torsion point of order m and two chain evaluations."""
    out = []
    P = torsion_point(E, m, rng)
    Q = chain.evaluate(P)
    R = chain.evaluate(Q) + (n % m) * P
    for q, e in group:
        qe = q ** e
        c = m // qe
        Pq, Qq, Rq = c * P, c * Q, c * R
        if Qq.is_infinity():
            r = _kernel_case(chain, E, q, e, n, rng)
            if r is not None:
                out.append(r)
            continue
        f = _point_order_qpart(Qq, q, e)
        t = _dlog_prime_power(Qq, Rq, q, f)
        assert t is not None, "trace relation unsolvable; chain is not an endomorphism?"
        out.append((t, q ** f))
    return out


def _kernel_case(chain, E, q, e, n, rng):
    """chain kills the sampled q-part; retry, degrade the exponent, or
    certify t = 0 mod q when [q] divides the chain."""
    for _ in range(6):
        P = torsion_point(E, q ** e, rng)
        Q = chain.evaluate(P)
        if not Q.is_infinity():
            R = chain.evaluate(Q) + (n % (q ** e)) * P
            f = _point_order_qpart(Q, q, e)
            t = _dlog_prime_power(Q, R, q, f)
            assert t is not None
            return (t, q ** f)
    # certify: two independent killed points of order q force [q] | chain
    A = torsion_point(E, q, rng)
    for _ in range(32):
        B = torsion_point(E, q, rng)
        if _bsgs(A, B, q) is None:
            if chain.evaluate(A).is_infinity() and chain.evaluate(B).is_infinity():
                return (0, q)
            return None  # not actually killed; give up on this prime power
    return None


def trd_bruteforce(chain: IsogenyChain, rng: random.Random) -> int:
    """Independent trace oracle for tiny p: determine t by testing every
    candidate in [-2 sqrt(n), 2 sqrt(n)] against the characteristic
    identity, then verify the survivor on every point of E(F_{p^4})."""
    assert chain.is_endomorphism()
    E = chain.domain
    ctx = E.ctx
    p = ctx.p
    n = chain.formal_degree
    tmax = 2 * isqrt(n)
    if 2 not in ctx.levels:
        ctx.extend(2)
    # all points of E(F_{p^4}) by exhaustive x-scan
    points = [E.infinity(2)]
    for a0 in range(p):
        for b0 in range(p):
            for a1 in range(p):
                for b1 in range(p):
                    x = ((a0, b0), (a1, b1))
                    y = ctx.sqrt(2, E.rhs(2, x))
                    if y is None:
                        continue
                    points.append(Point(E, 2, x, y))
                    if not ctx.is_zero(2, y):
                        points.append(Point(E, 2, x, ctx.neg(2, y)))
    assert len(points) == (p * p - 1) ** 2, "wrong point count; not a pi=[p] model"
    probes = [points[rng.randrange(len(points))] for _ in range(4)]
    survivors = []
    for t in range(-tmax, tmax + 1):
        if all(_char_identity(chain, t, n, P) for P in probes):
            survivors.append(t)
    full = [t for t in survivors if all(_char_identity(chain, t, n, P) for P in points)]
    assert len(full) == 1, f"oracle found {len(full)} traces: {full}"
    return full[0]


def _char_identity(chain, t, n, P):
    Q = chain.evaluate(P)
    return chain.evaluate(Q) - t * Q + n * P == P.curve.infinity(P.level)


# ---------------------------------------------------------------------------
# rho-chains and Gram assembly for reflection bases.
# ---------------------------------------------------------------------------


def rho_chain(r1, r2, rng: random.Random) -> IsogenyChain:
    """The separable chain rho with  r1(r2(P)) + [p] rho(P) = O.

    rho = dual(phi_1) dual(psi_1) phi_1^(p) o dual(phi_2)^(p) psi_2 phi_2;
    the second factor is r2's chain without its final Frobenius, and the
    first is the step-wise dual of r1's chain without its Frobenius.
    """
    assert r1.base == r2.base, "reflections must share a base curve"
    part2 = list(r2.chain.steps[:-1])
    part1 = [dual_step(s, rng) for s in reversed(r1.chain.steps[:-1])]
    chain = IsogenyChain(part2 + part1)
    assert chain.is_endomorphism()
    assert chain.formal_degree == (r1.d * r2.d) * (r1.phi_degree * r2.phi_degree) ** 2
    return chain


def trd_pairing(r1, r2, rng: random.Random, ceiling: int = DEFAULT_CEILING) -> int:
    """Trd(alpha_1 * conj_dual(alpha_2)) = p * trd(rho_12)."""
    return r1.base.ctx.p * trd(rho_chain(r1, r2, rng), rng, ceiling=ceiling)


def gram_of_reflections(gammas, rng: random.Random, ceiling: int = DEFAULT_CEILING):
    """Gram matrix of (1, gamma_1, ..., gamma_r) under Trd(x * conj(y)).

    Row 0 is (2, 0, ..., 0) since reflections are trace zero; diagonal
    entries are twice the degree; off-diagonals come from rho-chain traces.
    """
    r = len(gammas)
    G = [[0] * (r + 1) for _ in range(r + 1)]
    G[0][0] = 2
    for i, g in enumerate(gammas, start=1):
        G[i][i] = 2 * g.degree
    for i in range(1, r + 1):
        for j in range(i + 1, r + 1):
            v = trd_pairing(gammas[i - 1], gammas[j - 1], rng, ceiling=ceiling)
            G[i][j] = G[j][i] = v
    return G
