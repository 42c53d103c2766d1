"""Stable seed derivation, independent of PYTHONHASHSEED and platform."""

import hashlib


def derive_seed(*parts) -> int:
    """Map a tuple of ints/strings/floats to a stable 63-bit seed.

    Used wherever per-item seeds are derived from a master seed (per-example
    attack seeds, grid cell seeds), so results do not depend on processing
    order or on Python's salted string hashing.
    """
    key = "\x1f".join(repr(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "big") >> 1
