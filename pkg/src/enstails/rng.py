"""Deterministic pseudorandom streams.

All randomness in this package flows through the Philox-4x64-10 counter-based
generator (Salmon et al. 2011, as shipped in ``numpy.random.Philox``).  A
stream is identified by a single 64-bit key; the key is zero-extended to the
generator's 128-bit key word.  Sub-streams (one per grid cell, per pipeline
stage) are derived from a global seed with the splitmix64 finalizer so that
the degree of parallelism can never change results: a cell's stream depends
only on ``(global_seed, stage_id, cell_index)``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Fixed stage identifiers mixed into per-cell seeds (documented in README).
STAGE_SYNTH_REALIZATION = 11
STAGE_SYNTH_SMALL = 12
STAGE_SYNTH_HUGE = 13
STAGE_SYNTH_DEWPOINT = 14
STAGE_FIT = 4


def splitmix64(x: int) -> int:
    """One step of the splitmix64 sequence: advance by the golden gamma, finalize."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, *components: int) -> int:
    """Derive a 64-bit sub-seed from ``seed`` and integer components.

    The mixing function is fixed: start from the seed, then for each
    component XOR it in and apply the splitmix64 finalizer.  Deterministic,
    order-sensitive, and documented so independent implementations agree.
    """
    z = seed & _MASK64
    for c in components:
        z = splitmix64(z ^ (c & _MASK64))
    return z


def stream(seed: int) -> np.random.Generator:
    """A Generator over Philox-4x64-10 keyed directly with ``seed`` (counter 0)."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def cell_stream(global_seed: int, stage_id: int, cell_index: int) -> np.random.Generator:
    """Stream for one grid cell in one pipeline stage."""
    return stream(mix_seed(global_seed, stage_id, cell_index))
