"""Pure-numpy sign-permutation kernel, bit-compatible with the compiled one.

Contract shared with permute_cy (iteration t, stream key `key`):

  k          = min(subsample, n)
  n_swap     = k if k < n else 0          (k == n needs no index sampling)
  n_signword = ceil(k / 64)
  stride     = n_swap + n_signword
  swap i     : u = u64(key, t*stride + i);  j = i + u % (n - i)   (partial
               Fisher-Yates into an identity index array, i = 0..k-1)
  sign r     : bit (r % 64) of u64(key, t*stride + n_swap + r//64), LSB first;
               bit 1 -> +1, bit 0 -> -1
  statistic  : mean of the k signed values; counted when >= observed

Iterations are processed in blocks. The (B, n) index matrix is restored after
every block by replaying the swaps in reverse (swaps are involutions), which
keeps the per-block cost O(B*k) instead of O(B*n) for the common k << n case.
"""

from __future__ import annotations

import numpy as np

from .._rng import u64_block

BACKEND = "python"

# Block size is bounded by the (B, n) int64 index matrix; cap it near 384 MB.
_MAX_IDX_CELLS = 48_000_000


def _signs(key: int, ts: np.ndarray, stride: int, n_swap: int, n_words: int, k: int) -> np.ndarray:
    """(B, k) array of +-1.0 sign factors for the iterations in ts."""
    ctrs = ts[:, None] * np.uint64(stride) + (np.uint64(n_swap) + np.arange(n_words, dtype=np.uint64))[None, :]
    words = u64_block(key, ctrs)
    bits = np.unpackbits(words.astype("<u8").view(np.uint8).reshape(len(ts), n_words * 8),
                         axis=1, bitorder="little")
    return bits[:, :k].astype(np.float64) * 2.0 - 1.0


def count_extreme(pmis: np.ndarray, observed: float, n_permutations: int,
                  subsample: int, key: int) -> int:
    """Number of permuted subsample means >= observed, over n_permutations draws."""
    x = np.ascontiguousarray(pmis, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty pmi vector")
    k = min(int(subsample), n)
    if k < 1:
        raise ValueError("subsample must be >= 1")
    do_swap = k < n
    n_swap = k if do_swap else 0
    n_words = (k + 63) // 64
    stride = n_swap + n_words

    blk = max(16, min(4096, _MAX_IDX_CELLS // max(n, 1))) if do_swap else 4096
    count = 0
    idx = None
    jbuf = None
    if do_swap:
        idx = np.empty((blk, n), dtype=np.int64)
        idx[:] = np.arange(n, dtype=np.int64)[None, :]
        jbuf = np.empty((blk, k), dtype=np.int64)

    for t0 in range(0, n_permutations, blk):
        t1 = min(t0 + blk, n_permutations)
        ts = np.arange(t0, t1, dtype=np.uint64)
        b = t1 - t0
        if do_swap:
            rows = np.arange(b)
            base = ts * np.uint64(stride)
            for i in range(k):
                u = u64_block(key, base + np.uint64(i))
                j = (np.uint64(i) + u % np.uint64(n - i)).astype(np.int64)
                jbuf[:b, i] = j
                vi = idx[:b, i].copy()
                idx[:b, i] = idx[rows, j]
                idx[rows, j] = vi
            vals = x[idx[:b, :k]]
        else:
            vals = np.broadcast_to(x, (b, n))
        stats = (vals * _signs(key, ts, stride, n_swap, n_words, k)).sum(axis=1) / k
        count += int(np.count_nonzero(stats >= observed))
        if do_swap:
            # replay the swaps backwards so the index matrix is identity again
            rows = np.arange(b)
            for i in range(k - 1, -1, -1):
                j = jbuf[:b, i]
                vi = idx[:b, i].copy()
                idx[:b, i] = idx[rows, j]
                idx[rows, j] = vi
    return count
