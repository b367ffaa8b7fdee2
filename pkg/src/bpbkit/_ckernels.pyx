# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the loops in ``_pykernels``.

Same signatures and semantics; results agree with the numpy path to
rounding.  Inputs are complex128 throughout.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, INFINITY, isinf

cnp.import_array()

ctypedef double complex cplx

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)


cdef inline double _lp(const cplx* v, Py_ssize_t n, double p) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, a, m = 0.0
    if isinf(p):
        for k in range(n):
            a = cabs(v[k])
            if a > m:
                m = a
        return m
    if p == 1.0:
        for k in range(n):
            s += cabs(v[k])
        return s
    if p == 2.0:
        for k in range(n):
            s += v[k].real * v[k].real + v[k].imag * v[k].imag
        return sqrt(s)
    for k in range(n):
        a = cabs(v[k])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    for k in range(n):
        s += pow(cabs(v[k]) / m, p)
    return m * pow(s, 1.0 / p)


cdef inline void _unit_dual(const cplx* v, cplx* out, Py_ssize_t n, double r) noexcept nogil:
    # norming functional of v in l_r; zero vector maps to zero
    cdef Py_ssize_t k, kmax = 0
    cdef double nrm = _lp(v, n, r), a, amax = -1.0
    for k in range(n):
        out[k] = 0
    if nrm == 0.0:
        return
    if isinf(r):
        for k in range(n):
            a = cabs(v[k])
            if a > amax:
                amax = a
                kmax = k
        out[kmax] = conj(v[kmax]) / amax
        return
    for k in range(n):
        a = cabs(v[k])
        if a > 0.0:
            if r == 1.0:
                out[k] = conj(v[k]) / a
            elif r == 2.0:
                out[k] = conj(v[k]) / nrm
            else:
                out[k] = pow(a / nrm, r - 1.0) * (conj(v[k]) / a)


cdef inline double _range_norm(const cplx* y, Py_ssize_t nb, Py_ssize_t mb,
                               double r, int outer) noexcept nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, b
    for j in range(nb):
        b = _lp(y + j * mb, mb, r)
        if outer == 1:
            s += b
        elif b > s:
            s = b
    return s


cdef double _apply(const cplx[:, :, ::1] T, const cplx* x, cplx* y) noexcept nogil:
    cdef Py_ssize_t n = T.shape[0], M = T.shape[1], d = T.shape[2]
    cdef Py_ssize_t i, m, l
    cdef cplx acc
    for m in range(M):
        y[m] = 0
    for i in range(n):
        for m in range(M):
            acc = 0
            for l in range(d):
                acc = acc + T[i, m, l] * x[i * d + l]
            y[m] = y[m] + acc
    return 0.0


def ascent(T_in, X0, double p, double r, Py_ssize_t nb, Py_ssize_t mb, int outer,
           Py_ssize_t maxiter, double tol):
    """Multistart alternating ascent for ``max ||T x||``; see ``_pykernels.ascent``."""
    cdef cplx[:, :, ::1] T = np.ascontiguousarray(T_in, dtype=np.complex128)
    Xarr = np.array(X0, dtype=np.complex128, order="C", copy=True)
    cdef cplx[:, :, ::1] X = Xarr
    cdef Py_ssize_t K = X.shape[0], n = T.shape[0], M = T.shape[1], d = T.shape[2]
    cdef Py_ssize_t k, it, i, m, l, j
    vals_arr = np.zeros(K, dtype=np.float64)
    iters_arr = np.zeros(K, dtype=np.int64)
    cdef double[::1] vals = vals_arr
    cdef long long[::1] iters = iters_arr
    cdef cplx[::1] y = np.zeros(M, dtype=np.complex128)
    cdef cplx[::1] f = np.zeros(M, dtype=np.complex128)
    cdef cplx[::1] g = np.zeros(d, dtype=np.complex128)
    cdef cplx[::1] xn = np.zeros(n * d, dtype=np.complex128)
    cdef double q = INFINITY if p == 1.0 else (1.0 if isinf(p) else p / (p - 1.0))
    cdef double val, vn, gn, bn, bmax, a
    cdef Py_ssize_t jmax
    cdef cplx* xk

    with nogil:
        for k in range(K):
            xk = &X[k, 0, 0]
            _apply(T, xk, &y[0])
            val = _range_norm(&y[0], nb, mb, r, outer)
            for it in range(maxiter):
                # norming functional of y in the range norm
                if outer == 0 and nb > 1:
                    bmax = -1.0
                    jmax = 0
                    for j in range(nb):
                        bn = _lp(&y[j * mb], mb, r)
                        if bn > bmax:
                            bmax = bn
                            jmax = j
                    for m in range(M):
                        f[m] = 0
                    _unit_dual(&y[jmax * mb], &f[jmax * mb], mb, r)
                else:
                    for j in range(nb):
                        _unit_dual(&y[j * mb], &f[j * mb], mb, r)
                # blockwise best response to g_i = f T_i
                for i in range(n):
                    for l in range(d):
                        g[l] = 0
                    for m in range(M):
                        if f[m] != 0:
                            for l in range(d):
                                g[l] = g[l] + f[m] * T[i, m, l]
                    gn = _lp(&g[0], d, q)
                    if gn == 0.0:
                        for l in range(d):
                            xn[i * d + l] = xk[i * d + l]
                    else:
                        for l in range(d):
                            a = cabs(g[l])
                            if a == 0.0:
                                xn[i * d + l] = 0
                            elif d == 1 or q == 1.0:
                                xn[i * d + l] = conj(g[l]) / a
                            elif q == 2.0:
                                xn[i * d + l] = conj(g[l]) / gn
                            else:
                                xn[i * d + l] = pow(a / gn, q - 1.0) * (conj(g[l]) / a)
                _apply(T, &xn[0], &y[0])
                vn = _range_norm(&y[0], nb, mb, r, outer)
                iters[k] += 1
                if vn > val:
                    for l in range(n * d):
                        xk[l] = xn[l]
                    if vn <= val * (1.0 + tol):
                        val = vn
                        break
                    val = vn
                else:
                    break
            vals[k] = val
    return Xarr, vals_arr, iters_arr


def c_modulus_grid(xs_in, ys_in, lams_in, double eps, double p):
    """For each x: min over y of max over lambda of ||x + lambda eps y||_p."""
    cdef cplx[:, ::1] xs = np.ascontiguousarray(xs_in, dtype=np.complex128)
    cdef cplx[:, ::1] ys = np.ascontiguousarray(ys_in, dtype=np.complex128)
    cdef cplx[::1] lams = np.ascontiguousarray(lams_in, dtype=np.complex128)
    cdef Py_ssize_t Nx = xs.shape[0], Ny = ys.shape[0], D = xs.shape[1], L = lams.shape[0]
    best_arr = np.full(Nx, np.inf)
    arg_arr = np.zeros(Nx, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef long long[::1] arg = arg_arr
    cdef cplx[::1] w = np.zeros(D, dtype=np.complex128)
    cdef Py_ssize_t a, b, t, k
    cdef double v, vmax
    cdef cplx le
    with nogil:
        for a in range(Nx):
            for b in range(Ny):
                vmax = -1.0
                for t in range(L):
                    le = eps * lams[t]
                    for k in range(D):
                        w[k] = xs[a, k] + le * ys[b, k]
                    v = _lp(&w[0], D, p)
                    if v > vmax:
                        vmax = v
                        if vmax >= best[a]:
                            break  # cannot improve the min for this x
                if vmax < best[a]:
                    best[a] = vmax
                    arg[a] = b
    return best_arr, arg_arr
