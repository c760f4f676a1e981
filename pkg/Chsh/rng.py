"""
Counter-mode random streams.

Every trial owns a fixed block of UNIFORMS_PER_TRIAL doubles drawn from a
Philox stream keyed by (seed, stream id). The Philox counter is positioned from
the trial index, so the numbers a trial sees do not depend on how trials are
split into shards.
"""
import numpy as np

UNIFORMS_PER_TRIAL = 8
# Philox4x64 emits four 64-bit words per counter step, one word per double.
WORDS_PER_BLOCK = 4
BLOCKS_PER_TRIAL = UNIFORMS_PER_TRIAL // WORDS_PER_BLOCK

MASK_64 = (1 << 64) - 1

# Stream ids: setting pairs use 0-3.
COIN_STREAM = 4
SELECTION_STREAM_BASE = 8


def stream_key(seed, stream):
    return (int(seed) & MASK_64) | (int(stream) << 64)


def trial_uniforms(seed, stream, start, stop):
    """Uniforms in [0, 1) for trials [start, stop), shape (stop - start, UNIFORMS_PER_TRIAL)."""
    bit_generator = np.random.Philox(key=stream_key(seed, stream), counter=start * BLOCKS_PER_TRIAL)
    return np.random.Generator(bit_generator).random((stop - start, UNIFORMS_PER_TRIAL))


def shard_bounds(trials, shards):
    """Contiguous [start, stop) ranges, larger shards first; empty shards are dropped."""
    base, extra = divmod(trials, shards)
    bounds = []
    start = 0
    for index in range(shards):
        stop = start + base + (1 if index < extra else 0)
        if stop > start:
            bounds.append((start, stop))
        start = stop
    return bounds
