"""Seeded, counter-based random streams.

All randomness in the package flows through one named generator family:
a Philox counter-based bit generator keyed by ``(seed, stream label)``.
Substreams for parallel work items are derived from the label, never from
call order, so results are reproducible regardless of scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, label: str = "") -> np.random.Generator:
    """Return the generator for ``(seed, label)``.

    The same pair always yields the same stream; distinct labels give
    statistically independent streams under the same seed.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_label_key(label),))
    return np.random.Generator(np.random.Philox(ss))
