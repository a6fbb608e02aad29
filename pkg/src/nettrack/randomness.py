"""Seeded random substreams.

All randomness in the package flows through one 64-bit experiment seed.
Each consumer asks for a named substream; the stream key is derived by
hashing (seed, label), so adding a new stream to the code never perturbs
the draws seen by existing streams.  Generators are numpy PCG64.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(label: str) -> int:
    """Stable 64-bit key for a stream label."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``label`` under the experiment ``seed``."""
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream_key(label)])
    return np.random.Generator(np.random.PCG64(seq))
