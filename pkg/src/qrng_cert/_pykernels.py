"""Pure numpy fallbacks for the compiled kernels in ``_ckernels.pyx``."""

from math import comb

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_ROW_CHUNK = 4096


def toeplitz_direct(seed_words, xrev_words, ell):
    """Row parities of a GF(2) Toeplitz matrix against a packed input.

    Row ``i`` is the seed window starting at bit ``i``; ``xrev_words`` holds the
    input bits in reversed order, zero padded to whole words.
    """
    seed_words = np.ascontiguousarray(seed_words, dtype=np.uint64)
    xrev_words = np.ascontiguousarray(xrev_words, dtype=np.uint64)
    nw = xrev_words.shape[0]
    if seed_words.shape[0] < ((ell - 1) >> 6) + nw + 1:
        raise ValueError("seed_words too short for requested rows")
    out = np.zeros(ell, dtype=np.uint8)
    rows = np.arange(ell)
    for b in range(min(64, ell)):
        if b == 0:
            shifted = seed_words
        else:
            shifted = (seed_words[:-1] >> np.uint64(b)) | (seed_words[1:] << np.uint64(64 - b))
        windows = sliding_window_view(shifted, nw)
        idx = rows[b::64]
        for start in range(0, idx.size, _ROW_CHUNK):
            sel = idx[start:start + _ROW_CHUNK]
            acc = np.bitwise_xor.reduce(windows[sel >> 6] & xrev_words, axis=1)
            out[sel] = np.bitwise_count(acc) & 1
    return out


def compositions(n, d):
    """All ``d``-part weak compositions of ``n`` in lexicographic order."""
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    # flat holds every j-part composition of r, blocks ordered by r = n, n-1, ..., 0,
    # so the tails following a head v in a composition of r form one contiguous slice
    flat = np.arange(n, -1, -1, dtype=np.int64)[:, None]
    sizes = np.ones(n + 1, dtype=np.int64)
    for j in range(2, d + 1):
        starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        targets = [n] if j == d else range(n, -1, -1)
        blocks, new_sizes = [], []
        for r in targets:
            k0 = n - r
            heads = np.repeat(np.arange(n + 1 - k0, dtype=np.int64), sizes[k0:])
            blocks.append(np.hstack([heads[:, None], flat[starts[k0] :]]))
            new_sizes.append(heads.size)
        flat = np.vstack(blocks)
        sizes = np.array(new_sizes, dtype=np.int64)
    out = flat if d > 1 else flat[:1]
    assert out.shape[0] == comb(n + d - 1, d - 1)
    return out
