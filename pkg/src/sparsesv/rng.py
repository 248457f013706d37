"""Counter-based random numbers (Philox4x32-10), vectorized over numpy arrays.

Every random quantity in the package is a pure function of a 64-bit key and a
128-bit counter, so results never depend on evaluation order or on how work is
split across threads.

Stream layout
-------------
* ``key``      -- the 64-bit seed, split into (low word, high word).
* ``counter``  -- four 32-bit words ``(c0, c1, c2, tag)``; ``tag`` separates
  domains (entry sampling, trial-seed derivation, ...).

Matrix entry ``(j, i)`` sampled under seed ``s`` uses key ``s`` and counter
``(i, j, 0, TAG_ENTRY)``; the 128 output bits give two uniforms of 53 bits.
The seed of trial ``t`` under base seed ``s`` is the first 64 output bits of
key ``s`` and counter ``(t_lo, t_hi, 0, TAG_TRIAL)``.
"""

from __future__ import annotations

import numpy as np

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF
ROUNDS = 10

TAG_ENTRY = 0x454E5452  # "ENTR"
TAG_TRIAL = 0x5452494C  # "TRIL"
TAG_AUX = 0x41555858    # "AUXX"

_U32 = np.uint64(MASK32)
_SHIFT = np.uint64(32)


def split_seed(seed: int) -> tuple[int, int]:
    """Return the (low, high) 32-bit words of a seed reduced modulo 2**64."""
    seed = int(seed) & MASK64
    return seed & MASK32, seed >> 32


def philox4x32(counter, key):
    """Apply Philox4x32-10 elementwise.

    ``counter`` is a sequence of four integer arrays (broadcastable), ``key`` a
    pair of integer arrays. Values are taken modulo 2**32. Returns four
    ``uint64`` arrays holding 32-bit outputs.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _U32 for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) & _U32 for k in key)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    for rnd in range(ROUNDS):
        if rnd:
            k0 = (k0 + np.uint64(PHILOX_W0)) & _U32
            k1 = (k1 + np.uint64(PHILOX_W1)) & _U32
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT) ^ c1 ^ k0,
            p1 & _U32,
            (p0 >> _SHIFT) ^ c3 ^ k1,
            p0 & _U32,
        )
    return c0, c1, c2, c3


def _to_unit_open(hi, lo):
    # 53 high bits of the 64-bit word, centred in their cell: u in (0, 1)
    word = (hi << _SHIFT) | lo
    return ((word >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniform_pair(counter, key):
    """Two independent uniforms on the open interval (0, 1) per counter."""
    w0, w1, w2, w3 = philox4x32(counter, key)
    return _to_unit_open(w1, w0), _to_unit_open(w3, w2)


def derive_seeds(seed: int, indices, tag: int = TAG_TRIAL) -> np.ndarray:
    """Child seeds for ``indices`` under ``seed``; returns ``uint64`` array."""
    idx = np.asarray(indices, dtype=np.uint64)
    lo, hi = split_seed(seed)
    w0, w1, _, _ = philox4x32(
        (idx & _U32, idx >> _SHIFT, np.uint64(0), np.uint64(tag)), (lo, hi)
    )
    return (w1 << _SHIFT) | w0


def derive_seed(seed: int, index: int, tag: int = TAG_TRIAL) -> int:
    return int(derive_seeds(seed, [index], tag)[0])
