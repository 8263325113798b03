"""Exact arithmetic in F_p, F_{p^2} and on-demand towers F_{p^{2k}}.

Representation
--------------
F_{p^2} is F_p(t) with t^2 = s, where -s mod p is the smallest positive
non-residue; a raw element is a pair (a, b) of ints in [0, p) meaning
a + b*t.  A raw element of F_{p^{2k}} (k >= 2) is a length-k tuple of
such pairs, little-endian in a generator y of the degree-k extension of
F_{p^2}.  Every level is an extension of F_{p^2}, never of F_p directly,
so Galois conjugation of F_{p^2}-objects composes cleanly with lifts.

Defining polynomials are found by a deterministic incremental search
(binomials y^k - c first, smallest c in a fixed enumeration), so
serialized elements are reproducible across runs and machines.

All integers are arbitrary precision; there are no floats anywhere.
"""

import random
from typing import Optional

import numpy as _np

# int64 convolution accumulators stay exact for p below this bound (k <= 64)
_NP_PRIME_LIMIT = 1 << 25

__all__ = [
    "NotPrime",
    "TooSmall",
    "is_prime",
    "make_field",
    "extend_tower",
    "frobenius",
    "roots_in_field",
    "FieldContext",
    "FieldElement",
    "Poly",
]


class NotPrime(ValueError):
    pass


class TooSmall(ValueError):
    pass


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _deinterleave(n: int, parts: int):
    """Deal the bits of n round-robin into `parts` integers (Morton order)."""
    out = [0] * parts
    pos = 0
    while n:
        if n & 1:
            out[pos % parts] |= 1 << (pos // parts)
        n >>= 1
        pos += 1
    return out


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3 * 10^24."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factor_int(n: int) -> dict:
    """Factor n > 0 by trial division then Pollard rho. Returns {prime: exp}."""
    assert n > 0
    out = {}
    for q in range(2, 10 ** 6):
        if q * q > n:
            break
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
    if n > 1:
        stack = [n]
        while stack:
            m = stack.pop()
            if is_prime(m):
                out[m] = out.get(m, 0) + 1
                continue
            d = _pollard_rho(m)
            stack.append(d)
            stack.append(m // d)
    return out


def mult_order(a: int, m: int) -> int:
    """Multiplicative order of a modulo m (gcd(a, m) = 1)."""
    from math import gcd

    a %= m
    assert gcd(a, m) == 1
    # Carmichael-style: order divides lambda(m); walk divisors downward.
    lam = 1
    for q, e in factor_int(m).items():
        if q == 2 and e >= 3:
            lq = 2 ** (e - 2)
        else:
            lq = (q - 1) * q ** (e - 1)
        lam = lam * lq // gcd(lam, lq)
    order = lam
    for q in factor_int(lam):
        while order % q == 0 and pow(a, order // q, m) == 1:
            order //= q
    return order


def _pollard_rho(n: int) -> int:
    from math import gcd

    if n % 2 == 0:
        return 2
    seed = 1
    while True:
        x = y = 2
        c = seed
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = gcd(abs(x - y), n)
        if d != n:
            return d
        seed += 1


# ---------------------------------------------------------------------------
# Raw F_{p^2} arithmetic: elements are int pairs (a, b) = a + b t, t^2 = s.
# ---------------------------------------------------------------------------


def _f2add(x, y, p):
    return ((x[0] + y[0]) % p, (x[1] + y[1]) % p)


def _f2sub(x, y, p):
    return ((x[0] - y[0]) % p, (x[1] - y[1]) % p)


def _f2neg(x, p):
    return (-x[0] % p, -x[1] % p)


def _f2mul(x, y, p, s):
    a, b = x
    c, d = y
    ac = a * c
    bd = b * d
    return ((ac + bd * s) % p, (a * d + b * c) % p)


def _f2sqr(x, p, s):
    a, b = x
    return ((a * a + b * b * s) % p, 2 * a * b % p)


def _f2scal(n, x, p):
    return (n * x[0] % p, n * x[1] % p)


def _f2inv(x, p, s):
    # 1/(a+bt) = (a-bt)/(a^2 - s b^2); the denominator is the F_p-norm.
    a, b = x
    d = (a * a - s * b * b) % p
    di = pow(d, p - 2, p)
    return (a * di % p, -b * di % p)


def _f2pow(x, e, p, s):
    r = (1, 0)
    b = x
    while e:
        if e & 1:
            r = _f2mul(r, b, p, s)
        b = _f2sqr(b, p, s)
        e >>= 1
    return r


class _Level:
    """One tower level F_{p^{2k}} = F_{p^2}[y]/(h(y))."""

    __slots__ = ("k", "modulus", "binom_c", "frob_pows", "red_re", "red_im",
                 "frob_re", "frob_im", "nonres")

    def __init__(self, k, modulus, binom_c, frob_pows):
        self.k = k
        self.modulus = modulus      # tuple of k+1 f2 pairs, monic
        self.binom_c = binom_c      # f2 pair c if modulus == y^k - c, else None
        self.frob_pows = frob_pows  # [y^(p*i) mod h for i in range(k)]
        self.red_re = None          # numpy reduction matrices for dense moduli
        self.red_im = None
        self.frob_re = None         # numpy matrices of frob_pows
        self.frob_im = None
        self.nonres = None          # cached quadratic non-residue for sqrt


class FieldContext:
    """F_p, F_{p^2} and a lazily extendable tower of F_{p^{2k}}.

    Immutable after each tower extension; extend all needed levels before
    sharing across parallel workers.
    """

    def __init__(self, p: int):
        if p <= 3:
            raise TooSmall(f"p must exceed 3, got {p}")
        if not is_prime(p):
            raise NotPrime(f"{p} is not prime")
        self.p = p
        # Smallest c >= 1 with x^2 + c irreducible, i.e. -c a non-residue.
        c = None
        for cand in range(1, p):
            if pow(-cand % p, (p - 1) // 2, p) == p - 1:
                c = cand
                break
        assert c is not None
        self.c = c
        self.s = (-c) % p  # t^2 = s
        self.levels = {1: None}
        self._np = p < _NP_PRIME_LIMIT
        self._nonres = {}

    def __repr__(self):
        return f"FieldContext(p={self.p}, levels={sorted(self.levels)})"

    # -- constructors -------------------------------------------------------

    def fp2(self, a: int, b: int = 0) -> "FieldElement":
        return FieldElement(self, 1, (a % self.p, b % self.p))

    def elem(self, level: int, raw) -> "FieldElement":
        return FieldElement(self, level, raw)

    def zero(self, level: int = 1) -> "FieldElement":
        return FieldElement(self, level, self.raw_zero(level))

    def one(self, level: int = 1) -> "FieldElement":
        return FieldElement(self, level, self.raw_one(level))

    def random_element(self, level: int, rng: random.Random) -> "FieldElement":
        p = self.p
        if level == 1:
            return FieldElement(self, 1, (rng.randrange(p), rng.randrange(p)))
        raw = tuple((rng.randrange(p), rng.randrange(p)) for _ in range(level))
        return FieldElement(self, level, raw)

    def raw_zero(self, level):
        if level == 1:
            return (0, 0)
        return tuple((0, 0) for _ in range(level))

    def raw_one(self, level):
        if level == 1:
            return (1, 0)
        return ((1, 0),) + tuple((0, 0) for _ in range(level - 1))

    def raw_from_f2(self, level, x):
        """Lift an f2 pair to a constant at the given level."""
        if level == 1:
            return x
        return (x,) + tuple((0, 0) for _ in range(level - 1))

    def raw_to_f2(self, level, x):
        """Descend a constant at the given level back to an f2 pair."""
        if level == 1:
            return x
        if any(c != (0, 0) for c in x[1:]):
            raise ValueError("element is not in F_{p^2}")
        return x[0]

    # -- level arithmetic on raw data ---------------------------------------

    def add(self, level, x, y):
        p = self.p
        if level == 1:
            return _f2add(x, y, p)
        return tuple(((a[0] + b[0]) % p, (a[1] + b[1]) % p) for a, b in zip(x, y))

    def sub(self, level, x, y):
        p = self.p
        if level == 1:
            return _f2sub(x, y, p)
        return tuple(((a[0] - b[0]) % p, (a[1] - b[1]) % p) for a, b in zip(x, y))

    def neg(self, level, x):
        p = self.p
        if level == 1:
            return _f2neg(x, p)
        return tuple((-a[0] % p, -a[1] % p) for a in x)

    def scal(self, level, c, x):
        """Multiply by an f2 pair c."""
        p, s = self.p, self.s
        if level == 1:
            return _f2mul(c, x, p, s)
        return tuple(_f2mul(c, a, p, s) for a in x)

    def mul(self, level, x, y):
        p, s = self.p, self.s
        if level == 1:
            return _f2mul(x, y, p, s)
        k = level
        if self._np and k >= 6:
            return self._mul_np(level, x, y)
        # schoolbook convolution over F_{p^2}
        conv = [(0, 0)] * (2 * k - 1)
        for i in range(k):
            xi = x[i]
            if xi == (0, 0):
                continue
            a, b = xi
            for j in range(k):
                c, d = y[j]
                u, v = conv[i + j]
                conv[i + j] = ((u + a * c + b * d * s) % p, (v + a * d + b * c) % p)
        return self._reduce(level, conv)

    def _mul_np(self, k, x, y):
        p, s = self.p, self.s
        lv = self.levels[k]
        xa = _np.fromiter((c[0] for c in x), _np.int64, k)
        xb = _np.fromiter((c[1] for c in x), _np.int64, k)
        ya = _np.fromiter((c[0] for c in y), _np.int64, k)
        yb = _np.fromiter((c[1] for c in y), _np.int64, k)
        re = (_np.convolve(xa, ya) % p + s * (_np.convolve(xb, yb) % p)) % p
        im = (_np.convolve(xa, yb) + _np.convolve(xb, ya)) % p
        if lv.binom_c is not None:
            cr, ci = lv.binom_c
            hr = re[k:]
            hi = im[k:]
            lo_re = re[:k].copy()
            lo_im = im[:k].copy()
            lo_re[: k - 1] = (lo_re[: k - 1] + hr * cr + ((hi * ci) % p) * s) % p
            lo_im[: k - 1] = (lo_im[: k - 1] + hr * ci + hi * cr) % p
        else:
            hr = re[k:]
            hi = im[k:]
            lo_re = (re[:k] + hr @ lv.red_re + ((hi @ lv.red_im) % p) * s) % p
            lo_im = (im[:k] + hr @ lv.red_im + hi @ lv.red_re) % p
        return tuple(zip((int(v) for v in lo_re), (int(v) for v in lo_im)))

    def sqr(self, level, x):
        return self.mul(level, x, x)

    def _reduce(self, level, conv):
        """Reduce a convolution (list of 2k-1 f2 pairs) modulo the level modulus."""
        p, s = self.p, self.s
        k = level
        lv = self.levels[k]
        if lv.binom_c is not None:
            c = lv.binom_c
            for i in range(2 * k - 2, k - 1, -1):
                hi = conv[i]
                if hi != (0, 0):
                    lo = conv[i - k]
                    m = _f2mul(c, hi, p, s)
                    conv[i - k] = ((lo[0] + m[0]) % p, (lo[1] + m[1]) % p)
            return tuple(conv[:k])
        mod = lv.modulus
        for i in range(2 * k - 2, k - 1, -1):
            hi = conv[i]
            if hi == (0, 0):
                continue
            for j in range(k):
                mj = mod[j]
                if mj != (0, 0):
                    m = _f2mul(hi, mj, p, s)
                    lo = conv[i - k + j]
                    conv[i - k + j] = ((lo[0] - m[0]) % p, (lo[1] - m[1]) % p)
            conv[i] = (0, 0)
        return tuple(conv[:k])

    def inv(self, level, x):
        p, s = self.p, self.s
        if level == 1:
            if x == (0, 0):
                raise ZeroDivisionError("inverse of zero")
            return _f2inv(x, p, s)
        # extended Euclid in F_{p^2}[y] against the modulus
        if all(c == (0, 0) for c in x):
            raise ZeroDivisionError("inverse of zero")
        k = level
        mod = list(self.levels[k].modulus)
        r0, r1 = mod, _strip(list(x))
        t0, t1 = [], [(1, 0)]
        while True:
            if len(r1) == 1:
                lead_inv = _f2inv(r1[0], p, s)
                return tuple(
                    _f2mul(lead_inv, t1[i] if i < len(t1) else (0, 0), p, s)
                    for i in range(k)
                )
            q, r = _polydivmod_f2(r0, r1, p, s)
            r0, r1 = r1, r
            t0, t1 = t1, _polysub_f2(t0, _polymul_f2(q, t1, p, s), p)
            if not r1:
                raise ZeroDivisionError("element not invertible (bad modulus?)")

    def pow(self, level, x, e: int):
        if e < 0:
            return self.pow(level, self.inv(level, x), -e)
        r = self.raw_one(level)
        b = x
        while e:
            if e & 1:
                r = self.mul(level, r, b)
            b = self.mul(level, b, b)
            e >>= 1
        return r

    def frob(self, level, x):
        """The p-power map x -> x^p at any level."""
        p = self.p
        if level == 1:
            return (x[0], (-x[1]) % p)
        lv = self.levels[level]
        if lv.frob_re is not None:
            k = level
            s = self.s
            # x^p = sum conj(c_i) * (y^p)^i; conj negates the t-component
            ca = _np.fromiter((c[0] for c in x), _np.int64, k)
            cb = (-_np.fromiter((c[1] for c in x), _np.int64, k)) % p
            re = (ca @ lv.frob_re + ((cb @ lv.frob_im) % p) * s) % p
            im = (ca @ lv.frob_im + cb @ lv.frob_re) % p
            return tuple(zip((int(v) for v in re), (int(v) for v in im)))
        acc = self.raw_zero(level)
        for i, ci in enumerate(x):
            if ci == (0, 0):
                continue
            cf = (ci[0], (-ci[1]) % p)
            acc = self.add(level, acc, self.scal(level, cf, lv.frob_pows[i]))
        return acc

    def is_zero(self, level, x):
        if level == 1:
            return x == (0, 0)
        return all(c == (0, 0) for c in x)

    def _sqrt_fp(self, a):
        """Square root in F_p or None (Tonelli-Shanks on ints)."""
        p = self.p
        a %= p
        if a == 0:
            return 0
        if pow(a, (p - 1) // 2, p) != 1:
            return None
        if p % 4 == 3:
            return pow(a, (p + 1) // 4, p)
        m, e = p - 1, 0
        while m % 2 == 0:
            m //= 2
            e += 1
        z = 2
        while pow(z, (p - 1) // 2, p) != p - 1:
            z += 1
        c = pow(z, m, p)
        t = pow(a, m, p)
        r = pow(a, (m + 1) // 2, p)
        while t != 1:
            t2, i = t, 0
            while t2 != 1:
                t2 = t2 * t2 % p
                i += 1
            b = pow(c, 1 << (e - i - 1), p)
            r = r * b % p
            c = b * b % p
            t = t * c % p
            e = i
        return r

    def _sqrt_f2(self, x):
        """Square root in F_{p^2} via two square roots in F_p.

        For w = a + bt with t^2 = s: the norm N = a^2 - s b^2 has a square
        root n in F_p when w is a square, and then x^2 = (a +- n)/2 for one
        choice of sign, y = b / (2x)."""
        p, s = self.p, self.s
        a, b = x
        if b == 0:
            r = self._sqrt_fp(a)
            if r is not None:
                return (r, 0)
            r = self._sqrt_fp(a * pow(s, p - 2, p) % p)
            if r is None:
                return None
            return (0, r)
        N = (a * a - s * b * b) % p
        n = self._sqrt_fp(N)
        if n is None:
            return None
        inv2 = (p + 1) // 2
        for sign in (n, p - n):
            half = (a + sign) * inv2 % p
            xr = self._sqrt_fp(half)
            if xr is None or xr == 0:
                continue
            yr = b * pow(2 * xr % p, p - 2, p) % p
            cand = (xr, yr)
            if _f2sqr(cand, p, s) == (a % p, b % p):
                return cand
        return None

    def sqrt(self, level, x):
        """A square root of x at the given level, or None. Tonelli-Shanks."""
        if self.is_zero(level, x):
            return x
        if level == 1:
            return self._sqrt_f2(x)
        q1 = self.p ** (2 * level) - 1
        if self.pow(level, x, q1 // 2) != self.raw_one(level):
            return None
        # write q-1 = 2^e * m
        m, e = q1, 0
        while m % 2 == 0:
            m //= 2
            e += 1
        # deterministic non-residue search, cached per level
        z = self._nonres.get(level)
        if z is None:
            idx = 0
            while True:
                idx += 1
                cand = self._enum_raw(level, idx)
                if self.is_zero(level, cand):
                    continue
                if self.pow(level, cand, q1 // 2) != self.raw_one(level):
                    z = cand
                    break
            self._nonres[level] = z
        c = self.pow(level, z, m)
        t = self.pow(level, x, m)
        r = self.pow(level, x, (m + 1) // 2)
        one = self.raw_one(level)
        while t != one:
            t2 = t
            i = 0
            while t2 != one:
                t2 = self.sqr(level, t2)
                i += 1
            b = c
            for _ in range(e - i - 1):
                b = self.sqr(level, b)
            r = self.mul(level, r, b)
            c = self.sqr(level, b)
            t = self.mul(level, t, c)
            e = i
        return r

    def _enum_raw(self, level, idx):
        """idx-th element in a fixed enumeration of the level (for searches).

        Bit-interleaved so that elements outside every proper subfield show
        up within the first few indices.
        """
        p = self.p
        digits = [d % p for d in _deinterleave(idx, 2 * level)]
        if level == 1:
            return (digits[0], digits[1])
        return tuple((digits[2 * i], digits[2 * i + 1]) for i in range(level))

    # -- tower management ----------------------------------------------------

    def extend(self, k: int) -> int:
        """Make F_{p^{2k}} available; returns the level handle k."""
        assert k >= 1
        if k in self.levels:
            return k
        p = self.p
        q = p * p
        mod = None
        binom_c = None
        # Binomials y^k - c keep reduction cheap; they exist only when every
        # prime factor of k divides q - 1, so fall back to a dense search.
        # Candidate c's are prefiltered by the classical binomial criterion
        # (c not an r-th power for every prime r | k; if 4 | k, additionally
        # c not in -4*(fourth powers); q = p^2 is always 1 mod 4), and the
        # winner is re-verified by the generic irreducibility test.
        if all((q - 1) % r == 0 for r in factor_int(k)):
            idx = 0
            while idx < q - 1 and mod is None:
                idx += 1
                c = self._enum_f2(idx)
                if c == (0, 0):
                    continue
                if not self._binomial_ok(c, k):
                    continue
                cand = [_f2neg(c, p)] + [(0, 0)] * (k - 1) + [(1, 0)]
                if self._irreducible_f2poly(cand, k):
                    mod = tuple(cand)
                    binom_c = c
        if mod is None:
            enc = 0
            while mod is None:
                enc += 1
                digits = _deinterleave(enc, 2 * k)
                lower = [(digits[2 * i] % p, digits[2 * i + 1] % p) for i in range(k)]
                cand = lower + [(1, 0)]
                if self._irreducible_f2poly(cand, k):
                    mod = tuple(cand)
        lv = _Level(k, mod, binom_c, None)
        self.levels[k] = lv
        if self._np and k >= 3 and binom_c is None:
            rows = []
            cur = list(mod[:k])  # y^k = -lower part (mod is monic)
            cur = [_f2neg(c, p) for c in cur]
            rows.append(tuple(cur))
            for _ in range(k - 2):
                # multiply by y, reduce the overflow coefficient
                top = cur[-1]
                cur = [(0, 0)] + cur[:-1]
                if top != (0, 0):
                    for j in range(k):
                        m = _f2mul(top, rows[0][j], p, self.s)
                        cur[j] = ((cur[j][0] + m[0]) % p, (cur[j][1] + m[1]) % p)
                rows.append(tuple(cur))
            lv.red_re = _np.array([[c[0] for c in r] for r in rows], dtype=_np.int64)
            lv.red_im = _np.array([[c[1] for c in r] for r in rows], dtype=_np.int64)
        # precompute y^(p*i) mod h for the Frobenius map
        yp = self._powmod_x(p, mod)
        yp_raw = tuple(yp[i] if i < len(yp) else (0, 0) for i in range(k))
        pows = [self.raw_one(k)]
        for _ in range(1, k):
            pows.append(self.mul(k, pows[-1], yp_raw))
        lv.frob_pows = pows
        if self._np and k >= 3:
            lv.frob_re = _np.array([[c[0] for c in r] for r in pows], dtype=_np.int64)
            lv.frob_im = _np.array([[c[1] for c in r] for r in pows], dtype=_np.int64)
        return k

    def _enum_f2(self, idx):
        # diagonal enumeration so elements outside F_p appear early
        p = self.p
        from math import isqrt

        m = isqrt(idx)
        r = idx - m * m
        if r <= m:
            return (r % p, m % p)
        return (m % p, (r - m - 1) % p)

    def _binomial_ok(self, c, k) -> bool:
        p, s = self.p, self.s
        q1 = p * p - 1
        for r in factor_int(k):
            if _f2pow(c, q1 // r, p, s) == (1, 0):
                return False
        if k % 4 == 0:
            # c must avoid -4 * (fourth powers)
            m4inv = _f2inv((-4 % p, 0), p, s)
            if _f2pow(_f2mul(c, m4inv, p, s), q1 // 4, p, s) == (1, 0):
                return False
        return True

    def _irreducible_f2poly(self, f, k) -> bool:
        """Is the monic degree-k polynomial f (f2 coefficients) irreducible over F_{p^2}?"""
        if k == 1:
            return True
        p, s = self.p, self.s
        q = p * p
        x = [(0, 0), (1, 0)]
        xq = self._powmod_x(q, f)
        # x^(q^j) mod f is the j-fold self-composition of xq, because the
        # coefficients of xq lie in F_{p^2} and are fixed by the q-power map.
        frob_iter = {1: xq}
        comp = xq
        for j in range(2, k + 1):
            comp = _polycompose_f2(xq, comp, f, p, s)
            frob_iter[j] = comp
        if _strip(list(_polysub_f2(frob_iter[k], x, p))):
            return False
        for r in factor_int(k):
            g = _polygcd_f2(_polysub_f2(frob_iter[k // r], x, p), list(f), p, s)
            if len(g) - 1 > 0:
                return False
        return True

    def _powmod_x(self, e, mod):
        """x^e mod mod, over F_{p^2}; returns a stripped coefficient list."""
        p, s = self.p, self.s
        r = [(1, 0)]
        b = [(0, 0), (1, 0)]
        while e:
            if e & 1:
                r = _polydivmod_f2(_polymul_f2(r, b, p, s), list(mod), p, s)[1]
            b = _polydivmod_f2(_polymul_f2(b, b, p, s), list(mod), p, s)[1]
            e >>= 1
        return r

    # -- serialization -------------------------------------------------------

    def elem_to_json(self, level, raw):
        if level == 1:
            return [str(raw[0]), str(raw[1])]
        return [[str(c[0]), str(c[1])] for c in raw]

    def elem_from_json(self, level, data):
        p = self.p
        if level == 1:
            return self.elem(1, (int(data[0]) % p, int(data[1]) % p))
        raw = tuple((int(c[0]) % p, int(c[1]) % p) for c in data)
        return self.elem(level, raw)


# ---------------------------------------------------------------------------
# Polynomial helpers over raw F_{p^2} coefficient lists (little-endian).
# ---------------------------------------------------------------------------


def _strip(f):
    while f and f[-1] == (0, 0):
        f.pop()
    return f


def _polymul_f2(f, g, p, s):
    if not f or not g:
        return []
    out = [(0, 0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a == (0, 0):
            continue
        for j, b in enumerate(g):
            if b == (0, 0):
                continue
            u, v = out[i + j]
            m = _f2mul(a, b, p, s)
            out[i + j] = ((u + m[0]) % p, (v + m[1]) % p)
    return _strip(out)


def _polysub_f2(f, g, p):
    n = max(len(f), len(g))
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else (0, 0)
        b = g[i] if i < len(g) else (0, 0)
        out.append(((a[0] - b[0]) % p, (a[1] - b[1]) % p))
    return _strip(out)


def _polydivmod_f2(f, g, p, s):
    f = list(f)
    assert g, "division by zero polynomial"
    ginv = _f2inv(g[-1], p, s)
    dg = len(g) - 1
    q = [(0, 0)] * max(0, len(f) - dg)
    while len(f) - 1 >= dg and f:
        c = _f2mul(f[-1], ginv, p, s)
        k = len(f) - 1 - dg
        q[k] = c
        for i in range(dg + 1):
            m = _f2mul(c, g[i], p, s)
            f[k + i] = ((f[k + i][0] - m[0]) % p, (f[k + i][1] - m[1]) % p)
        _strip(f)
    return _strip(q), f


def _polygcd_f2(f, g, p, s):
    f, g = list(f), list(g)
    while g:
        f, g = g, _polydivmod_f2(f, g, p, s)[1]
    if f:
        inv = _f2inv(f[-1], p, s)
        f = [_f2mul(inv, c, p, s) for c in f]
    return f


def _polycompose_f2(f, g, mod, p, s):
    """f(g) mod mod by Horner."""
    out = []
    for c in reversed(f):
        out = _polydivmod_f2(_polymul_f2(out, g, p, s), list(mod), p, s)[1]
        if c != (0, 0):
            if out:
                out[0] = ((out[0][0] + c[0]) % p, (out[0][1] + c[1]) % p)
            else:
                out = [c]
            _strip(out)
    return out


# ---------------------------------------------------------------------------
# Public wrapper types.
# ---------------------------------------------------------------------------


class FieldElement:
    """Immutable element of a tower level.

    Elements at different levels never mix implicitly; lift() from the
    base F_{p^2} to a higher level is the only supported coercion.
    """

    __slots__ = ("ctx", "level", "raw")

    def __init__(self, ctx, level, raw):
        self.ctx = ctx
        self.level = level
        self.raw = raw

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.ctx is not self.ctx or other.level != self.level:
                raise ValueError("level mismatch; lift explicitly")
            return other.raw
        if isinstance(other, int):
            return self.ctx.raw_from_f2(self.level, (other % self.ctx.p, 0))
        return NotImplemented

    def __add__(self, other):
        r = self._coerce(other)
        if r is NotImplemented:
            return NotImplemented
        return FieldElement(self.ctx, self.level, self.ctx.add(self.level, self.raw, r))

    __radd__ = __add__

    def __sub__(self, other):
        r = self._coerce(other)
        if r is NotImplemented:
            return NotImplemented
        return FieldElement(self.ctx, self.level, self.ctx.sub(self.level, self.raw, r))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FieldElement(self.ctx, self.level, self.ctx.neg(self.level, self.raw))

    def __mul__(self, other):
        r = self._coerce(other)
        if r is NotImplemented:
            return NotImplemented
        return FieldElement(self.ctx, self.level, self.ctx.mul(self.level, self.raw, r))

    __rmul__ = __mul__

    def __truediv__(self, other):
        r = self._coerce(other)
        if r is NotImplemented:
            return NotImplemented
        return FieldElement(
            self.ctx, self.level, self.ctx.mul(self.level, self.raw, self.ctx.inv(self.level, r))
        )

    def __rtruediv__(self, other):
        return FieldElement(self.ctx, self.level, self.ctx.inv(self.level, self.raw)) * other

    def __pow__(self, e):
        return FieldElement(self.ctx, self.level, self.ctx.pow(self.level, self.raw, e))

    def __eq__(self, other):
        if isinstance(other, int):
            return self.raw == self.ctx.raw_from_f2(self.level, (other % self.ctx.p, 0))
        return (
            isinstance(other, FieldElement)
            and self.level == other.level
            and self.raw == other.raw
        )

    def __hash__(self):
        return hash((self.level, self.raw))

    def __repr__(self):
        return f"FE(level={self.level}, {self.raw})"

    def __bool__(self):
        return not self.ctx.is_zero(self.level, self.raw)

    def inverse(self):
        return FieldElement(self.ctx, self.level, self.ctx.inv(self.level, self.raw))

    def frobenius(self):
        return FieldElement(self.ctx, self.level, self.ctx.frob(self.level, self.raw))

    def lift(self, level):
        if level == self.level:
            return self
        if self.level != 1:
            raise ValueError("can only lift from the base level")
        return FieldElement(self.ctx, level, self.ctx.raw_from_f2(level, self.raw))

    def descend(self):
        return FieldElement(self.ctx, 1, self.ctx.raw_to_f2(self.level, self.raw))

    def sqrt(self) -> Optional["FieldElement"]:
        r = self.ctx.sqrt(self.level, self.raw)
        if r is None:
            return None
        return FieldElement(self.ctx, self.level, r)

    def to_json(self):
        return self.ctx.elem_to_json(self.level, self.raw)


class Poly:
    """Univariate polynomial over one tower level (little-endian coeffs)."""

    __slots__ = ("ctx", "level", "coeffs")

    def __init__(self, ctx, level, coeffs):
        # coeffs: sequence of raw elements; trailing zeros stripped
        cs = list(coeffs)
        while cs and ctx.is_zero(level, cs[-1]):
            cs.pop()
        self.ctx = ctx
        self.level = level
        self.coeffs = tuple(cs)

    @classmethod
    def from_elements(cls, elems):
        e0 = elems[0]
        return cls(e0.ctx, e0.level, [e.raw for e in elems])

    @classmethod
    def from_ints(cls, ctx, ints, level=1):
        return cls(ctx, level, [ctx.raw_from_f2(level, (n % ctx.p, 0)) for n in ints])

    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.level == other.level
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.level, self.coeffs))

    def __repr__(self):
        return f"Poly(level={self.level}, deg={self.degree()})"

    def __add__(self, other):
        ctx, k = self.ctx, self.level
        n = max(len(self.coeffs), len(other.coeffs))
        z = ctx.raw_zero(k)
        return Poly(
            ctx,
            k,
            [
                ctx.add(
                    k,
                    self.coeffs[i] if i < len(self.coeffs) else z,
                    other.coeffs[i] if i < len(other.coeffs) else z,
                )
                for i in range(n)
            ],
        )

    def __sub__(self, other):
        ctx, k = self.ctx, self.level
        n = max(len(self.coeffs), len(other.coeffs))
        z = ctx.raw_zero(k)
        return Poly(
            ctx,
            k,
            [
                ctx.sub(
                    k,
                    self.coeffs[i] if i < len(self.coeffs) else z,
                    other.coeffs[i] if i < len(other.coeffs) else z,
                )
                for i in range(n)
            ],
        )

    def __neg__(self):
        ctx, k = self.ctx, self.level
        return Poly(ctx, k, [ctx.neg(k, c) for c in self.coeffs])

    def __mul__(self, other):
        ctx, k = self.ctx, self.level
        if isinstance(other, FieldElement):
            return Poly(ctx, k, [ctx.mul(k, other.raw, c) for c in self.coeffs])
        if isinstance(other, int):
            r = ctx.raw_from_f2(k, (other % ctx.p, 0))
            return Poly(ctx, k, [ctx.mul(k, r, c) for c in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return Poly(ctx, k, [])
        out = [ctx.raw_zero(k)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if ctx.is_zero(k, a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = ctx.add(k, out[i + j], ctx.mul(k, a, b))
        return Poly(ctx, k, out)

    __rmul__ = __mul__

    def divmod(self, other):
        ctx, k = self.ctx, self.level
        assert not other.is_zero(), "division by zero polynomial"
        rem = list(self.coeffs)
        dg = other.degree()
        ginv = ctx.inv(k, other.coeffs[-1])
        q = [ctx.raw_zero(k)] * max(0, len(rem) - dg)
        while len(rem) - 1 >= dg and rem:
            c = ctx.mul(k, rem[-1], ginv)
            pos = len(rem) - 1 - dg
            q[pos] = c
            for i in range(dg + 1):
                rem[pos + i] = ctx.sub(k, rem[pos + i], ctx.mul(k, c, other.coeffs[i]))
            while rem and ctx.is_zero(k, rem[-1]):
                rem.pop()
        return Poly(ctx, k, q), Poly(ctx, k, rem)

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def monic(self):
        if self.is_zero():
            return self
        ctx, k = self.ctx, self.level
        inv = ctx.inv(k, self.coeffs[-1])
        return Poly(ctx, k, [ctx.mul(k, inv, c) for c in self.coeffs])

    def gcd(self, other):
        f, g = self, other
        while not g.is_zero():
            f, g = g, f % g
        return f.monic()

    def derivative(self):
        ctx, k = self.ctx, self.level
        return Poly(
            ctx,
            k,
            [ctx.scal(k, (i % ctx.p, 0), c) for i, c in enumerate(self.coeffs) if i > 0],
        )

    def evaluate(self, x):
        """Evaluate at a FieldElement (any level >= this poly's level)."""
        ctx = self.ctx
        lvl = x.level
        acc = ctx.raw_zero(lvl)
        for c in reversed(self.coeffs):
            cl = c if self.level == lvl else ctx.raw_from_f2(lvl, ctx.raw_to_f2(self.level, c))
            acc = ctx.add(lvl, ctx.mul(lvl, acc, x.raw), cl)
        return FieldElement(ctx, lvl, acc)

    def lift(self, level):
        if level == self.level:
            return self
        assert self.level == 1
        ctx = self.ctx
        return Poly(ctx, level, [ctx.raw_from_f2(level, c) for c in self.coeffs])

    def powmod(self, e: int, mod: "Poly") -> "Poly":
        r = Poly(self.ctx, self.level, [self.ctx.raw_one(self.level)])
        b = self % mod
        while e:
            if e & 1:
                r = (r * b) % mod
            b = (b * b) % mod
            e >>= 1
        return r

    def conjugate(self):
        """Coefficient-wise p-power (Galois conjugation); base level only."""
        assert self.level == 1
        ctx = self.ctx
        return Poly(ctx, 1, [(c[0], (-c[1]) % ctx.p) for c in self.coeffs])

    def to_json(self):
        return [self.ctx.elem_to_json(self.level, c) for c in self.coeffs]


# ---------------------------------------------------------------------------
# Root finding and small-degree factoring.
# ---------------------------------------------------------------------------


def _f2poly_powmod(e: int, base, mod, p, s):
    """base^e mod mod over F_{p^2}, on raw coefficient lists.

    The modulus reduction rows x^d .. x^{2d-2} are precomputed once, so a
    squaring costs one convolution plus d-1 row additions."""
    mod = list(mod)
    d = len(mod) - 1
    if d < 1:
        raise ZeroDivisionError("constant modulus")
    minv = _f2inv(mod[-1], p, s)
    monic = [_f2mul(minv, c, p, s) for c in mod]
    rows = [[_f2neg(c, p) for c in monic[:d]]]
    for _ in range(d - 2):
        prev = rows[-1]
        top = prev[-1]
        nxt = [(0, 0)] + prev[:-1]
        if top != (0, 0):
            nxt = [
                _f2add(v, _f2mul(top, rows[0][i], p, s), p) for i, v in enumerate(nxt)
            ]
        rows.append(nxt)

    def reduce(f):
        for i in range(len(f) - 1, d - 1, -1):
            hi = f[i]
            if hi != (0, 0):
                row = rows[i - d]
                for j in range(d):
                    rj = row[j]
                    if rj != (0, 0):
                        f[j] = _f2add(f[j], _f2mul(hi, rj, p, s), p)
        del f[d:]
        return _strip(f)

    r = [(1, 0)]
    b = reduce(list(base)) if len(base) - 1 >= d else _strip(list(base))
    while e:
        if e & 1:
            r = reduce(_polymul_f2(r, b, p, s))
        b = reduce(_polymul_f2(b, b, p, s))
        e >>= 1
    return r


def f2_quadratic_roots(ctx: FieldContext, c1, c0):
    """Roots in F_{p^2} of x^2 + c1 x + c0 (raw pairs); [] if irreducible."""
    p, s = ctx.p, ctx.s
    disc = _f2sub(_f2mul(c1, c1, p, s), _f2scal(4, c0, p), p)
    sq = ctx.sqrt(1, disc)
    if sq is None:
        return []
    inv2 = pow(2, p - 2, p)
    r1 = _f2scal(inv2, _f2sub(sq, c1, p), p)
    r2 = _f2scal(inv2, _f2sub(_f2neg(sq, p), c1, p), p)
    return [r1] if r1 == r2 else [r1, r2]


def f2_split_all(ctx: FieldContext, coeffs, rng: random.Random):
    """All roots of a monic squarefree poly over F_{p^2} that is known to
    split into linear factors; raw pairs in, raw pairs out."""
    p, s = ctx.p, ctx.s
    g = _strip(list(coeffs))
    if len(g) - 1 >= 1 and g[-1] != (1, 0):
        inv = _f2inv(g[-1], p, s)
        g = [_f2mul(inv, c, p, s) for c in g]
    deg = len(g) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [_f2neg(g[0], p)]
    if deg == 2:
        out = f2_quadratic_roots(ctx, g[1], g[0])
        assert len(out) == 2, "quadratic did not split"
        return out
    q1h = (p * p - 1) // 2
    while True:
        delta = (rng.randrange(p), rng.randrange(p))
        w = _f2poly_powmod(q1h, [delta, (1, 0)], g, p, s)
        w = _polysub_f2(w, [(1, 0)], p)
        d = _polygcd_f2(w, g, p, s)
        if 0 < len(d) - 1 < deg:
            rest = _polydivmod_f2(g, d, p, s)[0]
            return f2_split_all(ctx, d, rng) + f2_split_all(ctx, rest, rng)


def f2_factor_deg_le2(ctx: FieldContext, coeffs, rng: random.Random):
    """Factor a monic squarefree poly over F_{p^2} whose irreducible factors
    all have degree <= 2 (raw in, (roots, quadratics) out).

    Quadratics come back as raw coefficient lists [c0, c1, (1,0)].
    """
    p, s = ctx.p, ctx.s
    f = _strip(list(coeffs))
    if f[-1] != (1, 0):
        inv = _f2inv(f[-1], p, s)
        f = [_f2mul(inv, c, p, s) for c in f]
    q = p * p
    x = [(0, 0), (1, 0)]
    xq = _f2poly_powmod(q, x, f, p, s)
    g1 = _polygcd_f2(_polysub_f2(xq, x, p), f, p, s)
    roots = f2_split_all(ctx, g1, rng) if len(g1) - 1 > 0 else []
    rest = _polydivmod_f2(f, g1, p, s)[0] if len(g1) - 1 > 0 else f
    quads = []

    def split2(g):
        dg = len(g) - 1
        assert dg % 2 == 0
        if dg == 0:
            return
        if dg == 2:
            quads.append(g)
            return
        xq_g = _polydivmod_f2(xq, g, p, s)[1]
        while True:
            # u = x + delta, so u^q = x^q + delta and
            # u^((q^2-1)/2) = (u * u^q)^((q-1)/2)
            delta = (rng.randrange(p), rng.randrange(p))
            uq = _polysub_f2(xq_g, [_f2neg(delta, p)], p)
            un = _polydivmod_f2(_polymul_f2([delta, (1, 0)], uq, p, s), g, p, s)[1]
            w = _f2poly_powmod((q - 1) // 2, un, g, p, s)
            w = _polysub_f2(w, [(1, 0)], p)
            d = _polygcd_f2(w, g, p, s)
            if 0 < len(d) - 1 < dg:
                split2(d)
                split2(_polydivmod_f2(g, d, p, s)[0])
                return

    if len(rest) - 1 > 0:
        split2(rest)
    return roots, quads


def roots_in_field(f: Poly, level: int, rng: random.Random):
    """All roots of f at the given tower level, with multiplicities.

    Returns a list of (FieldElement, multiplicity). Uses gcd with x^q - x
    followed by randomized equal-degree splitting.
    """
    ctx = f.ctx
    assert not f.is_zero()
    if level not in ctx.levels:
        ctx.extend(level)
    if level == 1 and f.level == 1:
        return _roots_f2_fast(ctx, f, rng)
    if level != f.level:
        f = f.lift(level)
    if f.degree() == 0:
        return []
    q = ctx.p ** (2 * level)
    fm = f.monic()
    x = Poly(ctx, level, [ctx.raw_zero(level), ctx.raw_one(level)])
    xq = x.powmod(q, fm)
    g = (xq - x).gcd(fm)
    roots = _split_linear(g, q, rng)
    out = []
    for r in roots:
        mult = 0
        lin = Poly(ctx, level, [ctx.neg(level, r), ctx.raw_one(level)])
        rem = fm
        while True:
            qq, rr = rem.divmod(lin)
            if not rr.is_zero():
                break
            mult += 1
            rem = qq
        out.append((FieldElement(ctx, level, r), mult))
    return out


def _roots_f2_fast(ctx: FieldContext, f: Poly, rng: random.Random):
    """Base-level roots with multiplicity, on raw coefficient lists."""
    p, s = ctx.p, ctx.s
    fm = _strip(list(f.coeffs))
    if len(fm) - 1 <= 0:
        return []
    if fm[-1] != (1, 0):
        inv = _f2inv(fm[-1], p, s)
        fm = [_f2mul(inv, c, p, s) for c in fm]
    if len(fm) == 2:
        return [(FieldElement(ctx, 1, _f2neg(fm[0], p)), 1)]
    xq = _f2poly_powmod(p * p, [(0, 0), (1, 0)], fm, p, s)
    g = _polygcd_f2(_polysub_f2(xq, [(0, 0), (1, 0)], p), fm, p, s)
    if len(g) - 1 <= 0:
        return []
    roots = f2_split_all(ctx, g, rng)
    out = []
    for r in roots:
        mult = 0
        lin = [_f2neg(r, p), (1, 0)]
        rem = fm
        while True:
            qq, rr = _polydivmod_f2(rem, lin, p, s)
            if rr:
                break
            mult += 1
            rem = qq
        out.append((FieldElement(ctx, 1, r), mult))
    return out


def _split_linear(g: Poly, q: int, rng: random.Random):
    """Roots of a monic squarefree product of linear factors."""
    ctx, k = g.ctx, g.level
    if g.degree() <= 0:
        return []
    if g.degree() == 1:
        return [ctx.neg(k, g.coeffs[0])]
    # random delta: gcd((x+delta)^((q-1)/2) - 1, g)
    while True:
        delta = ctx.random_element(k, rng).raw
        shift = Poly(ctx, k, [delta, ctx.raw_one(k)])
        h = shift.powmod((q - 1) // 2, g)
        one = Poly(ctx, k, [ctx.raw_one(k)])
        d = (h - one).gcd(g)
        if 0 < d.degree() < g.degree():
            return _split_linear(d, q, rng) + _split_linear(g // d, q, rng)


def factor_squarefree(f: Poly, rng: random.Random):
    """Irreducible factors of a squarefree monic poly over its level.

    Only intended for the small degrees that arise from division
    polynomials (degree <= 12); distinct-degree then equal-degree split.
    """
    ctx, k = f.ctx, f.level
    q = ctx.p ** (2 * k)
    fm = f.monic()
    out = []
    x = Poly(ctx, k, [ctx.raw_zero(k), ctx.raw_one(k)])
    d = 0
    xqd = x
    rem = fm
    while rem.degree() > 0:
        d += 1
        if 2 * d > rem.degree():
            out.append(rem)
            break
        xqd = xqd.powmod(q, rem)
        g = (xqd - x).gcd(rem)
        if g.degree() > 0:
            out.extend(_equal_degree_split(g, d, q, rng))
            rem = rem // g
            xqd = xqd % rem if rem.degree() > 0 else xqd
    return out


def _equal_degree_split(g: Poly, d: int, q: int, rng: random.Random):
    ctx, k = g.ctx, g.level
    if g.degree() == d:
        return [g.monic()]
    one = Poly(ctx, k, [ctx.raw_one(k)])
    while True:
        h = Poly(ctx, k, [ctx.random_element(k, rng).raw for _ in range(g.degree())])
        if h.is_zero():
            continue
        w = h.powmod((q ** d - 1) // 2, g) - one
        u = w.gcd(g)
        if 0 < u.degree() < g.degree():
            return _equal_degree_split(u, d, q, rng) + _equal_degree_split(g // u, d, q, rng)


# ---------------------------------------------------------------------------
# Spec-level convenience entry points.
# ---------------------------------------------------------------------------


def make_field(p: int) -> FieldContext:
    """F_{p^2} for an odd prime p > 3. Raises NotPrime / TooSmall."""
    return FieldContext(p)


def extend_tower(ctx: FieldContext, k: int) -> int:
    """Make F_{p^{2k}} available and return its level handle."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return ctx.extend(k)


def frobenius(x: FieldElement) -> FieldElement:
    """x^p, at any tower level."""
    return x.frobenius()
