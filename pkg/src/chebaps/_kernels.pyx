# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Bessel table, Clenshaw sums and the ADMM inner loop."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, ceil, log, exp, lgamma
from scipy.linalg.cython_blas cimport dgemv
from scipy.linalg.cython_lapack cimport dsyev

cnp.import_array()

DEF RESCALE = 1e250
DEF TINY = 1e-6
DEF UNDERFLOW = 1e-280

cdef int BLOCK_ZERO = 0
cdef int BLOCK_NONNEG = 1
cdef int BLOCK_FREE = 2
cdef int BLOCK_PSD = 3
cdef int BLOCK_L1 = 4


cdef void _bessel_row(int nmax, double x, double[::1] row) noexcept nogil:
    cdef double ax = fabs(x)
    cdef int n, k, top, start
    cdef double h, jp1, j, jm1, norm, t
    if ax < TINY:
        h = ax / 2.0
        row[0] = 1.0 - h * h
        for n in range(1, nmax + 1):
            if h == 0.0:
                row[n] = 0.0
            else:
                t = exp(n * log(h) - lgamma(n + 1.0)) * (1.0 - h * h / (n + 1.0))
                row[n] = -t if (x < 0 and n % 2 == 1) else t
    else:
        top = nmax if nmax > <int>ceil(ax) else <int>ceil(ax)
        start = top + 20 + <int>(10.0 * sqrt(<double>top))
        start += start % 2
        for n in range(nmax + 1):
            row[n] = 0.0
        jp1 = 0.0
        j = 1e-300
        norm = 0.0
        for k in range(start, 0, -1):
            jm1 = (2.0 * k / ax) * j - jp1
            jp1 = j
            j = jm1
            if k - 1 <= nmax:
                row[k - 1] = j
            if (k - 1) % 2 == 0 and k > 1:
                norm += 2.0 * j
            if fabs(j) > RESCALE:
                j /= RESCALE
                jp1 /= RESCALE
                norm /= RESCALE
                for n in range(k - 1, nmax + 1):
                    row[n] /= RESCALE
        norm += j
        for n in range(nmax + 1):
            row[n] /= norm
            if x < 0 and n % 2 == 1:
                row[n] = -row[n]
    for n in range(nmax + 1):
        if fabs(row[n]) < UNDERFLOW:
            row[n] = 0.0


def bessel_table(int nmax, x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.zeros((xv.shape[0], nmax + 1))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            _bessel_row(nmax, xv[i], ov[i])
    return out


def clenshaw(data, x):
    cdef const double[::1] a = np.ascontiguousarray(data, dtype=np.float64)
    xa = np.asarray(x, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(xa).ravel()
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i, k, p = a.shape[0] - 1
    cdef double b1, b2, t, xx
    with nogil:
        for i in range(xv.shape[0]):
            xx = xv[i]
            b1 = 0.0
            b2 = 0.0
            for k in range(p, 0, -1):
                t = a[k] + 2.0 * xx * b1 - b2
                b2 = b1
                b1 = t
            ov[i] = a[0] / sqrt(2.0) + xx * b1 - b2
    return out.reshape(xa.shape)


cdef int _proj_psd(double* v, double* z, int k, double* m, double* ev,
                   double* work, int lwork) noexcept nogil:
    # svec order is row-wise lower triangle with sqrt(2) on off-diagonals
    cdef int i, j, idx, c, info = 0
    cdef double r2 = sqrt(2.0), s, lam
    cdef char jobz = b'V'
    cdef char uplo = b'U'
    idx = 0
    for i in range(k):
        for j in range(i + 1):
            s = v[idx] if i == j else v[idx] / r2
            # column-major storage, upper triangle = row-major lower
            m[i * k + j] = s
            m[j * k + i] = s
            idx += 1
    dsyev(&jobz, &uplo, &k, m, &k, ev, work, &lwork, &info)
    idx = 0
    for i in range(k):
        for j in range(i + 1):
            s = 0.0
            for c in range(k):
                lam = ev[c]
                if lam > 0.0:
                    s += lam * m[c * k + i] * m[c * k + j]
            z[idx] = s if i == j else s * r2
            idx += 1
    return info


def admm_run(const double[:, ::1] kinv, const double[:, ::1] a, const double[::1] q,
             const double[::1] b,
             double[::1] x, double[::1] z, double[::1] u,
             double rho, double sigma, double alpha, int n_iter,
             const int[::1] kinds, const int[::1] starts, const int[::1] lens,
             const int[::1] dims, const double[::1] weights):
    """Run ``n_iter`` relaxed ADMM steps, updating ``x``, ``z``, ``u`` in place."""
    cdef int n = x.shape[0], m = z.shape[0], nb = kinds.shape[0]
    cdef int it, i, blk, s, ln, kmax = 1, inc = 1
    cdef double one = 1.0, zero = 0.0, t, thr
    cdef char tr_n = b'N'
    cdef char tr_t = b'T'
    for blk in range(nb):
        if kinds[blk] == BLOCK_PSD and dims[blk] > kmax:
            kmax = dims[blk]
    cdef int lwork = 3 * kmax * kmax
    cdef double[::1] mbuf = np.empty(kmax * kmax)
    cdef double[::1] ebuf = np.empty(kmax)
    cdef double[::1] wbuf = np.empty(lwork)
    cdef double[::1] tv = np.empty(m)
    cdef double[::1] rhs = np.empty(n)
    cdef double[::1] w = np.empty(m)
    cdef double[::1] v = np.empty(m)
    with nogil:
        for it in range(n_iter):
            for i in range(m):
                tv[i] = z[i] + b[i] - u[i]
            for i in range(n):
                rhs[i] = sigma * x[i] - q[i]
            # C-order (m, n) is Fortran (n, m): 'N' gives a^T tv
            dgemv(&tr_n, &n, &m, &rho, <double*>&a[0, 0], &n, &tv[0], &inc, &one, &rhs[0], &inc)
            dgemv(&tr_t, &n, &n, &one, <double*>&kinv[0, 0], &n, &rhs[0], &inc, &zero, &x[0], &inc)
            dgemv(&tr_t, &n, &m, &one, <double*>&a[0, 0], &n, &x[0], &inc, &zero, &w[0], &inc)
            for i in range(m):
                v[i] = alpha * (w[i] - b[i]) + (1.0 - alpha) * z[i] + u[i]
            for blk in range(nb):
                s = starts[blk]
                ln = lens[blk]
                if kinds[blk] == BLOCK_ZERO:
                    for i in range(s, s + ln):
                        z[i] = 0.0
                elif kinds[blk] == BLOCK_NONNEG:
                    for i in range(s, s + ln):
                        z[i] = v[i] if v[i] > 0.0 else 0.0
                elif kinds[blk] == BLOCK_PSD:
                    _proj_psd(&v[s], &z[s], dims[blk], &mbuf[0], &ebuf[0], &wbuf[0], lwork)
                elif kinds[blk] == BLOCK_L1:
                    thr = weights[blk] / rho
                    for i in range(s, s + ln):
                        t = fabs(v[i]) - thr
                        if t <= 0.0:
                            z[i] = 0.0
                        elif v[i] > 0.0:
                            z[i] = t
                        else:
                            z[i] = -t
                else:
                    for i in range(s, s + ln):
                        z[i] = v[i]
            for i in range(m):
                u[i] = v[i] - z[i]
