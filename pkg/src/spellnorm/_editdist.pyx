# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled edit-distance kernels.

Same contracts as spellnorm._editdist_py; this version exists because the
knowledge-base suggestion scan computes one distance per stored word and
dominates suggestion latency once the store grows.
"""

from libc.stdlib cimport free, malloc


cdef int _min3(int x, int y, int z) noexcept nogil:
    if y < x:
        x = y
    if z < x:
        x = z
    return x


cdef Py_UCS4 *_copy_chars(str s, Py_ssize_t n) except NULL:
    cdef Py_UCS4 *buf = <Py_UCS4 *> malloc(n * sizeof(Py_UCS4))
    cdef Py_ssize_t i
    if buf == NULL:
        raise MemoryError()
    for i in range(n):
        buf[i] = s[i]
    return buf


def levenshtein(str a, str b):
    """Classic unit-cost edit distance (insert / delete / substitute)."""
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la < lb:
        a, b = b, a
        la, lb = lb, la
    cdef Py_UCS4 *ca = _copy_chars(a, la)
    cdef Py_UCS4 *cb
    try:
        cb = _copy_chars(b, lb)
    except BaseException:
        free(ca)
        raise
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *curr = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *tmp
    cdef Py_ssize_t i, j
    cdef int cost, result
    if prev == NULL or curr == NULL:
        free(ca); free(cb); free(prev); free(curr)
        raise MemoryError()
    with nogil:
        for j in range(lb + 1):
            prev[j] = <int> j
        for i in range(1, la + 1):
            curr[0] = <int> i
            for j in range(1, lb + 1):
                cost = 0 if ca[i - 1] == cb[j - 1] else 1
                curr[j] = _min3(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
            tmp = prev; prev = curr; curr = tmp
        result = prev[lb]
    free(ca); free(cb); free(prev); free(curr)
    return result


def damerau_levenshtein(str a, str b):
    """Edit distance with adjacent transposition as a unit operation.

    Restricted (optimal string alignment) variant: no substring is edited
    more than once, so e.g. ("ca", "abc") costs 3.
    """
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef Py_UCS4 *ca = _copy_chars(a, la)
    cdef Py_UCS4 *cb
    try:
        cb = _copy_chars(b, lb)
    except BaseException:
        free(ca)
        raise
    cdef int *prev2 = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *curr = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *tmp
    cdef Py_ssize_t i, j
    cdef int cost, d, result
    if prev2 == NULL or prev == NULL or curr == NULL:
        free(ca); free(cb); free(prev2); free(prev); free(curr)
        raise MemoryError()
    with nogil:
        for j in range(lb + 1):
            prev[j] = <int> j
            prev2[j] = 0
        for i in range(1, la + 1):
            curr[0] = <int> i
            for j in range(1, lb + 1):
                cost = 0 if ca[i - 1] == cb[j - 1] else 1
                d = _min3(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
                if i > 1 and j > 1 and ca[i - 1] == cb[j - 2] and ca[i - 2] == cb[j - 1]:
                    if prev2[j - 2] + 1 < d:
                        d = prev2[j - 2] + 1
                curr[j] = d
            tmp = prev2; prev2 = prev; prev = curr; curr = tmp
        result = prev[lb]
    free(ca); free(cb); free(prev2); free(prev); free(curr)
    return result
