"""Deterministic seed derivation for all pseudorandom streams.

Every random draw in the package flows through a stream keyed by
(master seed, purpose tag, indices...). Keys are hashed with SHA-256, so the
derived seeds are stable across platforms, Python builds and numpy versions,
and two backends handed the same master seed see identical graph batches.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def derive_seed(*parts: int | float | str) -> int:
    """Collapse (master seed, purpose tag, indices...) into a 63-bit seed."""
    blob = _SEP.join(repr(p).encode() for p in parts)
    digest = hashlib.sha256(blob).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def derive_rng(*parts: int | float | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
