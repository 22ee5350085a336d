"""Seed derivation and deterministic parallel map."""

import hashlib

from joblib import Parallel, delayed

SEED_MASK = (1 << 64) - 1


def derive_seed(seed, *labels):
    """Derive a 64-bit sub-seed from ``seed`` and a sequence of labels.

    The derivation hashes the labels, so a stage that asks for
    ``derive_seed(s, "cv", 3)`` gets the same stream regardless of which
    other stages exist.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed) & SEED_MASK).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest(), "little")


def parallel_map(func, items, jobs=1):
    """``[func(x) for x in items]``, optionally spread over ``jobs`` processes.

    Output order always follows ``items``; callers aggregate in that order
    so the result does not depend on scheduling.
    """
    items = list(items)
    if jobs is None or jobs == 1 or len(items) <= 1:
        return [func(x) for x in items]
    return Parallel(n_jobs=jobs)(delayed(func)(x) for x in items)
