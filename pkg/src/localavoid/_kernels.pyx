# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels (moduli below 2**62)."""

from libc.stdlib cimport malloc, free

cdef extern from *:
    """
    static inline unsigned long long la_mulmod(unsigned long long a,
                                               unsigned long long b,
                                               unsigned long long m) {
        return (unsigned long long)(((unsigned __int128)a * b) % m);
    }
    """
    unsigned long long la_mulmod(unsigned long long a, unsigned long long b,
                                 unsigned long long m) nogil

ctypedef unsigned long long u64


cdef inline int _val(u64 value, u64 p, int cap) nogil:
    cdef int v = 0
    if value == 0:
        return cap
    while value % p == 0 and v < cap:
        value //= p
        v += 1
    return v


def product_max_valuation(terms, columns, modulus, p, cap, groups=None, stop_at=None):
    cdef Py_ssize_t nvars = len(columns)
    cdef Py_ssize_t nterms = len(terms)
    cdef Py_ssize_t i, j, k, t, n, offset
    cdef u64 M = modulus
    cdef u64 P = p
    cdef int CAP = cap
    cdef int STOP = stop_at if stop_at is not None else CAP + 1
    cdef int use_groups = groups is not None
    for col in columns:
        if len(col) == 0:
            return -1, None, 0

    cdef Py_ssize_t *sizes = <Py_ssize_t *> malloc(nvars * sizeof(Py_ssize_t))
    cdef Py_ssize_t *starts = <Py_ssize_t *> malloc(nvars * sizeof(Py_ssize_t))
    cdef Py_ssize_t *idx = <Py_ssize_t *> malloc(nvars * sizeof(Py_ssize_t))
    cdef u64 *coefs = <u64 *> malloc(nterms * sizeof(u64))
    cdef Py_ssize_t total_pts = 0
    for i in range(nvars):
        sizes[i] = len(columns[i])
        starts[i] = total_pts
        total_pts += sizes[i]
    cdef u64 *fac = <u64 *> malloc(total_pts * nterms * sizeof(u64))
    cdef long long *grp = <long long *> malloc(total_pts * sizeof(long long))
    cdef u64 acc, total
    cdef int v, best = -1
    cdef long long g0
    cdef int same
    cdef long long checked = 0
    best_idx = None
    try:
        for t in range(nterms):
            coefs[t] = terms[t][0] % modulus
        offset = 0
        for i in range(nvars):
            col = columns[i]
            n = len(col[0])
            for j in range(sizes[i]):
                pt = col[j]
                for t in range(nterms):
                    exps = terms[t][1]
                    acc = 1
                    for k in range(n):
                        ek = exps[offset + k]
                        if ek:
                            acc = la_mulmod(acc, pow(pt[k], ek, modulus), M)
                    fac[(starts[i] + j) * nterms + t] = acc
                grp[starts[i] + j] = groups[i][j] if use_groups else 0
            offset += n
        for i in range(nvars):
            idx[i] = 0
        while True:
            same = 0
            if use_groups:
                same = 1
                g0 = grp[starts[0] + idx[0]]
                for i in range(1, nvars):
                    if grp[starts[i] + idx[i]] != g0:
                        same = 0
                        break
            if not same:
                total = 0
                for t in range(nterms):
                    acc = coefs[t]
                    for i in range(nvars):
                        acc = la_mulmod(acc, fac[(starts[i] + idx[i]) * nterms + t], M)
                    total = (total + acc) % M
                v = _val(total, P, CAP)
                checked += 1
                if v > best:
                    best = v
                    best_idx = tuple(idx[i] for i in range(nvars))
                    if best >= STOP:
                        break
            # odometer, last variable fastest
            i = nvars - 1
            while i >= 0:
                idx[i] += 1
                if idx[i] < sizes[i]:
                    break
                idx[i] = 0
                i -= 1
            if i < 0:
                break
    finally:
        free(sizes); free(starts); free(idx); free(coefs); free(fac); free(grp)
    return best, best_idx, checked
