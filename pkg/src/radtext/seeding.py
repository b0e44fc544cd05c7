"""Deterministic seed derivation.

All randomness in the CLI flows from a single base seed.  Stages derive
their own seed by mixing the base with a CRC-32 of a stable stage tag, so
adding a stage never shifts the streams of the others.
"""

import zlib


def derive_seed(seed: int, tag: str) -> int:
    """Mix ``seed`` with ``tag``: (seed * 1000003 + crc32(tag)) mod 2^63."""
    return (int(seed) * 1_000_003 + zlib.crc32(tag.encode("utf-8"))) % (1 << 63)
