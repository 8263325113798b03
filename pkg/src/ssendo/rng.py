"""Deterministic seed derivation.

All randomness in the package flows from a single 64-bit master seed.
Parallel work units get their own streams derived from (master, *labels),
so serial and parallel runs agree bit for bit.
"""

import hashlib
import random


def derive_seed(master: int, *labels) -> int:
    """Derive a child seed from a master seed and a label path.

    Labels may be ints or strings; the derivation is a SHA-256 of the
    canonical textual path, so it is stable across platforms and runs.
    """
    path = ":".join(str(x) for x in (master, *labels))
    digest = hashlib.sha256(path.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(master: int, *labels) -> random.Random:
    """A fresh random.Random seeded from derive_seed(master, *labels)."""
    return random.Random(derive_seed(master, *labels))
