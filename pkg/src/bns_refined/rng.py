"""Counter-based random streams.

Every consumer of randomness (a simulated path, a tree of a forest, a
network's weight initialisation) gets its own Philox stream.  The Philox key
comes from the root seed; the unit identifiers are written into the two high
words of the 256-bit counter, so streams never overlap (each one can draw
2**128 blocks before touching the next) and no stream depends on the order in
which the others were consumed.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1


@lru_cache(maxsize=256)
def _key(seed: int) -> int:
    words = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(words[0]) | (int(words[1]) << 64)


def stream(seed: int, unit: int, sub: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, unit, sub)``.

    ``unit`` is typically a path or tree index and ``sub`` a component id
    within that unit.
    """
    if seed < 0 or unit < 0 or sub < 0:
        raise ValueError("seed, unit and sub must be non-negative")
    counter = (int(unit) & _MASK64) << 192 | (int(sub) & _MASK64) << 128
    return np.random.Generator(np.random.Philox(counter=counter, key=_key(int(seed))))


def derive_seed(seed: int, label: int) -> int:
    """Independent child seed for a pipeline stage, stable across platforms."""
    if seed < 0 or label < 0:
        raise ValueError("seed and label must be non-negative")
    word = np.random.SeedSequence([int(seed), int(label)]).generate_state(1, dtype=np.uint64)[0]
    return int(word) >> 2


class StreamFactory:
    """Cheap repeated access to ``stream(seed, unit, sub)`` for one seed.

    Re-positions a single Philox counter instead of constructing a new bit
    generator.  The returned generator is shared: it is only valid until the
    next call, and a factory must not be used from several threads.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self._bitgen = np.random.Philox(key=_key(int(seed)))
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state

    def __call__(self, unit: int, sub: int = 0) -> np.random.Generator:
        if unit < 0 or sub < 0:
            raise ValueError("unit and sub must be non-negative")
        st = self._state
        st["state"]["counter"] = np.array([0, 0, sub, unit], dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self._gen
