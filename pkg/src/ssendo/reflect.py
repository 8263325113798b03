"""Inseparable reflections: endomorphisms pi o dual(phi)^(p) o psi o phi.

A reflection is found by repeating fresh non-backtracking walks of the
prescribed length until the endpoint is d-isogenous to its conjugate,
truncating at the first index where that happens, and reflecting the
walk across the F_p spine by Galois conjugation.
"""

import random
from dataclasses import dataclass
from math import gcd

from .curves import (
    Curve,
    IsogenyChain,
    conjugate_step,
    dual_step,
    frobenius_step,
    random_point,
)
from .ssgraph import WalkParams, build_d_structure, has_d_structure, nbt_walk, walk_length

__all__ = ["InseparableReflection", "compute_reflection", "verify_reflection"]


@dataclass
class InseparableReflection:
    """An endomorphism alpha with alpha^2 = [-ell^{2k} d p], as a chain.

    walk_steps are the k forward Velu steps phi_1..phi_k; structure is the
    degree-d map psi at the walk endpoint; chain is the full endomorphism
    pi o dual(phi)^(p) o psi o phi of E.
    """

    base: Curve
    chain: IsogenyChain
    walk_steps: tuple
    structure: object
    ell: int
    k: int
    d: int
    epsilon: int
    walks_tried: int
    j_walk: list

    @property
    def degree(self) -> int:
        return self.chain.formal_degree

    @property
    def phi_degree(self) -> int:
        return self.ell ** self.k

    def to_json(self):
        return {
            "j_walk": [j.to_json() for j in self.j_walk],
            "ell": self.ell,
            "k": self.k,
            "d": self.d,
            "epsilon": self.epsilon,
            "degree": str(self.degree),
            "walks_tried": self.walks_tried,
            "chain": self.chain.to_json(),
        }


def compute_reflection(E: Curve, ell: int, d: int, rng: random.Random,
                       greedy: bool = False) -> InseparableReflection:
    """One inseparable reflection of E of degree ell^{2k} d p.

    Repeats fresh length-t walks until the endpoint has a degree-d map to
    its conjugate, then truncates to the first index k >= 1 where that
    holds.  With greedy=True every intermediate vertex of a walk is
    tested, accepting early; the default tests only endpoints.
    """
    p = E.ctx.p
    assert d in (1, 2) and gcd(d, ell) == 1 and 4 * d < p
    t = walk_length(p, ell)
    params = WalkParams(p, ell, d, t)
    tried = 0
    stop = (lambda j: has_d_structure(j, d)) if greedy else None
    while True:
        tried += 1
        rec = nbt_walk(params, E, rng, stop_when=stop)
        if greedy:
            if len(rec.steps) < t or has_d_structure(rec.j_sequence[-1], d):
                k = len(rec.steps)
                if k >= 1 and has_d_structure(rec.j_sequence[k], d):
                    break
            continue
        if not has_d_structure(rec.j_sequence[t], d):
            continue
        k = next(i for i in range(1, t + 1) if has_d_structure(rec.j_sequence[i], d))
        break
    fwd = rec.steps[:k]
    Ek = fwd[-1].codomain
    psi = build_d_structure(Ek, d, rng)
    duals = [conjugate_step(dual_step(s, rng)) for s in reversed(fwd)]
    pi = frobenius_step(duals[-1].codomain)
    chain = IsogenyChain(list(fwd) + [psi] + duals + [pi])
    assert chain.codomain == E, "reflection does not return to its base curve"
    assert chain.formal_degree == ell ** (2 * k) * d * p
    return InseparableReflection(
        base=E,
        chain=chain,
        walk_steps=tuple(fwd),
        structure=psi,
        ell=ell,
        k=k,
        d=d,
        epsilon=-1,
        walks_tried=tried,
        j_walk=rec.j_sequence[: k + 1],
    )


def verify_reflection(alpha: InseparableReflection, trials: int,
                      rng: random.Random) -> bool:
    """Check alpha(alpha(P)) + [deg alpha] P = O and the homomorphism
    property on `trials` random points."""
    if trials <= 0:
        return True
    E = alpha.base
    n = alpha.degree
    for _ in range(trials):
        P = random_point(E, 1, rng)
        Q = random_point(E, 1, rng)
        aP = alpha.chain.evaluate(P)
        if alpha.chain.evaluate(aP) != (-n) * P:
            return False
        if alpha.chain.evaluate(P + Q) != aP + alpha.chain.evaluate(Q):
            return False
    return True
