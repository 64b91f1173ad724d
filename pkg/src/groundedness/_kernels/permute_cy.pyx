# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sign-permutation kernel.

Implements exactly the counter/stream contract documented in permute_np.py;
the two backends must produce identical counts for the same inputs.
"""

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

BACKEND = "cython"


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z ^= z >> 30
    z = z * <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z = z * <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline uint64_t _u64_at(uint64_t key, uint64_t ctr) nogil:
    return _mix64(key + (ctr + <uint64_t>1) * <uint64_t>0x9E3779B97F4A7C15)


def count_extreme(double[::1] pmis, double observed, long n_permutations,
                  long subsample, unsigned long long key):
    """Number of permuted subsample means >= observed, over n_permutations draws."""
    cdef Py_ssize_t n = pmis.shape[0]
    if n == 0:
        raise ValueError("empty pmi vector")
    cdef Py_ssize_t k = subsample if subsample < n else n
    if k < 1:
        raise ValueError("subsample must be >= 1")
    cdef bint do_swap = k < n
    cdef Py_ssize_t n_swap = k if do_swap else 0
    cdef Py_ssize_t n_words = (k + 63) // 64
    cdef uint64_t stride = <uint64_t>(n_swap + n_words)

    cdef int64_t* idx = NULL
    cdef Py_ssize_t i, r
    cdef uint64_t t, base, u, w
    cdef int64_t j, tmp
    cdef double s, stat, v
    cdef long count = 0

    if do_swap:
        idx = <int64_t*>malloc(n * sizeof(int64_t))
        if idx == NULL:
            raise MemoryError()
        for i in range(n):
            idx[i] = i

    with nogil:
        for t in range(<uint64_t>n_permutations):
            base = t * stride
            s = 0.0
            if do_swap:
                for i in range(k):
                    u = _u64_at(key, base + <uint64_t>i)
                    j = i + <int64_t>(u % <uint64_t>(n - i))
                    tmp = idx[i]
                    idx[i] = idx[j]
                    idx[j] = tmp
                w = 0
                for r in range(k):
                    if (r & 63) == 0:
                        w = _u64_at(key, base + <uint64_t>n_swap + <uint64_t>(r >> 6))
                    v = pmis[idx[r]]
                    if w & <uint64_t>1:
                        s += v
                    else:
                        s -= v
                    w >>= 1
                # undo the swaps in reverse so idx is identity for the next pass
                for i in range(k - 1, -1, -1):
                    u = _u64_at(key, base + <uint64_t>i)
                    j = i + <int64_t>(u % <uint64_t>(n - i))
                    tmp = idx[i]
                    idx[i] = idx[j]
                    idx[j] = tmp
            else:
                w = 0
                for r in range(k):
                    if (r & 63) == 0:
                        w = _u64_at(key, base + <uint64_t>(r >> 6))
                    v = pmis[r]
                    if w & <uint64_t>1:
                        s += v
                    else:
                        s -= v
                    w >>= 1
            stat = s / k
            if stat >= observed:
                count += 1

    if idx != NULL:
        free(idx)
    return count
