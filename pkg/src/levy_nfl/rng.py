"""Counter-based random numbers keyed by ``(seed, stream)``.

Philox4x64-10 is evaluated directly on numpy ``uint64`` arrays, so every path
gets its own stream (``stream = path index``) and a draw depends only on
``(seed, stream, counter)``.  Order of generation and chunking across threads
therefore never changes a result.  The bit stream is identical to
``numpy.random.Philox`` for the same key and counter.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

GENERATOR_ID = "philox4x64-10"

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# purpose tags, stored in counter word 1
TAG_GAUSS = 1
TAG_ARRIVAL = 2
TAG_SIZE = 3


def _mulhilo(a, b):
    a0, a1 = a & _LO32, a >> _S32
    b0, b1 = b & _LO32, b >> _S32
    p00, p01, p10, p11 = a0 * b0, a0 * b1, a1 * b0, a1 * b1
    mid = (p00 >> _S32) + (p01 & _LO32) + (p10 & _LO32)
    hi = p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)
    return hi, a * b


def philox4x64(counter, key, rounds: int = 10):
    """Apply the Philox4x64 bijection; ``counter`` is 4 words, ``key`` 2 words.

    Words may be scalars or equally-shaped arrays (broadcast).
    """
    with np.errstate(over="ignore"):
        c = np.broadcast_arrays(*[np.asarray(w, dtype=np.uint64) for w in (*counter, *key)])
        c0, c1, c2, c3, k0, k1 = (w.copy() for w in c)
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def raw_words(seed: int, streams, tag: int, index: int, n: int, segment: int = 0) -> np.ndarray:
    """``n`` raw 64-bit words per stream for the draw slot ``(index, tag, segment)``."""
    streams = np.asarray(streams, dtype=np.uint64)
    nblocks = -(-n // 4)
    out = np.empty((streams.size, 4 * nblocks), dtype=np.uint64)
    for blk in range(nblocks):
        words = philox4x64((index, tag, blk, segment), (seed, streams))
        for j in range(4):
            out[:, 4 * blk + j] = words[j]
    return out[:, :n]


def uniforms(seed: int, streams, tag: int, index: int, n: int, segment: int = 0) -> np.ndarray:
    """Uniforms on the open interval (0, 1), shape ``(len(streams), n)``."""
    w = raw_words(seed, streams, tag, index, n, segment)
    return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, streams, tag: int, index: int, n: int, segment: int = 0) -> np.ndarray:
    return ndtri(uniforms(seed, streams, tag, index, n, segment))
