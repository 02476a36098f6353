"""Deterministic per-stage seed derivation.

One top-level seed reproduces the whole pipeline: each stage derives its
own RNG seed by hashing the stage name into the base seed, so reordering
or skipping stages never shifts another stage's randomness.
"""

from __future__ import annotations

import hashlib


def derive_seed(base_seed: int, stage: str) -> int:
    """Map (base_seed, stage-name) to a stable 63-bit seed."""
    digest = hashlib.blake2b(f"{base_seed}:{stage}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
