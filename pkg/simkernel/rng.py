# lunarnet/simkernel/rng.py
import hashlib
from typing import Dict

import numpy as np


def component_key(component_id: str) -> int:
    """Stable 64-bit key for a component id (blake2b, 8-byte digest)."""
    digest = hashlib.blake2b(component_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class RngStreams:
    """One independent generator per component, split from a master seed.

    Streams are derived from (seed, component key) so registering another
    component never shifts the draws of an existing one.
    """

    def __init__(self, seed: int):
        if not 0 <= seed < 2**64:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._streams: Dict[str, np.random.Generator] = {}

    def get(self, component_id: str) -> np.random.Generator:
        stream = self._streams.get(component_id)
        if stream is None:
            seq = np.random.SeedSequence([self.seed, component_key(component_id)])
            stream = np.random.Generator(np.random.PCG64(seq))
            self._streams[component_id] = stream
        return stream
