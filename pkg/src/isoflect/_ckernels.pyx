# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same API and algorithm as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan2, M_PI, fabs, sqrt, pow, hypot, copysign

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)
    double complex conj(double complex)

cnp.import_array()

BACKEND = "cython"

cdef enum:
    MAXSTACK = 4096

cdef double XK[15]
cdef double WK[15]
cdef double WG[15]

_xk = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
       0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
       0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
       0.207784955007898467600689403773245, 0.0]
_wk = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
       0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
       0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
       0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
_wg = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
       0.381830050505118944950369775488975, 0.417959183673469387755102040816327]

cdef int _i
for _i in range(7):
    XK[_i] = -_xk[_i]
    XK[14 - _i] = _xk[_i]
    WK[_i] = _wk[_i]
    WK[14 - _i] = _wk[_i]
XK[7] = 0.0
WK[7] = _wk[7]
for _i in range(15):
    WG[_i] = 0.0
for _i in range(3):
    WG[2 * _i + 1] = _wg[_i]
    WG[13 - 2 * _i] = _wg[_i]
WG[7] = _wg[3]


cdef inline double complex _ipow(double complex z, int k) noexcept nogil:
    cdef double complex r = 1.0
    cdef double complex b = z
    while k:
        if k & 1:
            r = r * b
        k >>= 1
        if k:
            b = b * b
    return r


cdef inline double complex _q(double complex x, int n) noexcept nogil:
    cdef double complex acc = 1.0
    cdef double complex p = 1.0
    cdef int j
    for j in range(2 * n - 1):
        p = p * x
        acc = acc + p
    return acc


cdef inline double complex _csqrt(double complex x) noexcept nogil:
    """Principal square root."""
    cdef double a = creal(x), b = cimag(x)
    cdef double r = hypot(a, b), s
    cdef double complex out
    if r == 0.0:
        out.real = 0.0
        out.imag = 0.0
    elif a >= 0.0:
        s = sqrt(0.5 * (r + a))
        out.real = s
        out.imag = b / (2.0 * s)
    else:
        s = sqrt(0.5 * (r - a))
        out.real = fabs(b) / (2.0 * s)
        out.imag = copysign(s, b)
    return out


cdef inline double complex _rootinv(double complex x, int n) noexcept nogil:
    """Principal x^(-1/n); repeated square roots when n is a power of two."""
    cdef double ang, mag, d
    cdef double complex out
    if n & (n - 1) == 0:
        out = x
        while n > 1:
            out = _csqrt(out)
            n >>= 1
        d = creal(out) * creal(out) + cimag(out) * cimag(out)
        out.real = creal(out) / d
        out.imag = -cimag(out) / d
        return out
    ang = -atan2(cimag(x), creal(x)) / n
    mag = pow(hypot(creal(x), cimag(x)), -1.0 / n)
    out.real = mag * cos(ang)
    out.imag = mag * sin(ang)
    return out


# mode 0: radial integrand w*upper*(1-(w s)^2n)^(-1/n), s = t*upper
# mode 1: tail integrand vend*(-om*n*v^(n-2)*q(1-v^n)^(-1/n)), v = t*vend
cdef inline double complex _f(int mode, int n, double complex a, double complex b, double t) noexcept nogil:
    cdef double complex z, v, x
    if mode == 0:
        z = a * (b * t)
        return a * b * _rootinv(1.0 - _ipow(z, 2 * n), n)
    v = b * t
    x = 1.0 - _ipow(v, n)
    return b * (-a * n * _ipow(v, n - 2) * _rootinv(_q(x, n), n))


cdef int _gk(int mode, int n, double complex a, double complex b, double tol,
             double complex* result) noexcept nogil:
    cdef double lo_stack[MAXSTACK]
    cdef double wd_stack[MAXSTACK]
    cdef int top = 0
    cdef int panels = 0
    cdef double lo, wd, err
    cdef double complex kron, gauss, fv
    cdef int j
    result[0] = 0.0
    lo_stack[0] = 0.0
    wd_stack[0] = 1.0
    top = 1
    while top > 0:
        top -= 1
        lo = lo_stack[top]
        wd = wd_stack[top]
        kron = 0.0
        gauss = 0.0
        for j in range(15):
            fv = _f(mode, n, a, b, lo + wd * 0.5 * (XK[j] + 1.0))
            kron = kron + WK[j] * fv
            gauss = gauss + WG[j] * fv
        kron = kron * (0.5 * wd)
        gauss = gauss * (0.5 * wd)
        err = cabs(kron - gauss)
        if err <= tol * wd or wd < 1e-13:
            result[0] = result[0] + kron
            continue
        panels += 1
        if panels > 16384 or top + 2 > MAXSTACK:
            return -1
        # push right half first so the left half is integrated first
        lo_stack[top] = lo + 0.5 * wd
        wd_stack[top] = 0.5 * wd
        lo_stack[top + 1] = lo
        wd_stack[top + 1] = 0.5 * wd
        top += 2
    return 0


cdef double _threshold(int n) noexcept nogil:
    return sin(M_PI / (2.0 * n))


_RADIUS_CACHE = {}


def sc_vertex_radius(int n, double tol=1e-14):
    key = (n, tol)
    if key in _RADIUS_CACHE:
        return _RADIUS_CACHE[key]
    cdef double split = 1.0 - 0.5 * _threshold(n)
    cdef double complex head, tail
    if _gk(0, n, 1.0, split, tol, &head) != 0:
        raise ArithmeticError("SC quadrature did not converge")
    cdef double complex vend = (1.0 - split) ** (1.0 / n)
    if _gk(1, n, 1.0, vend, tol, &tail) != 0:
        raise ArithmeticError("SC quadrature did not converge")
    _RADIUS_CACHE[key] = creal(head - tail)
    return _RADIUS_CACHE[key]


def sc_map_many(int n, w, double tol=1e-14):
    arr = np.asarray(w, dtype=np.complex128)
    flat = np.ascontiguousarray(arr.ravel())
    out = np.empty_like(flat)
    cdef double complex[::1] wv = flat
    cdef double complex[::1] ov = out
    cdef Py_ssize_t m = flat.shape[0]
    cdef Py_ssize_t idx
    cdef int k, status = 0
    cdef double d, dbest, thr = _threshold(n)
    cdef double complex om, ombest, wi, vend, res
    cdef double R = sc_vertex_radius(n, tol)
    with nogil:
        for idx in range(m):
            wi = wv[idx]
            dbest = 1e300
            ombest = 1.0
            for k in range(2 * n):
                om = cexp(1j * M_PI * k / n)
                d = cabs(wi - om)
                if d < dbest:
                    dbest = d
                    ombest = om
            if dbest >= thr:
                status = _gk(0, n, wi, 1.0, tol, &res)
                ov[idx] = res
            elif dbest < 4e-16:
                ov[idx] = ombest * R
            else:
                vend = cexp(clog(1.0 - wi / ombest) / n)
                status = _gk(1, n, ombest, vend, tol, &res)
                ov[idx] = ombest * R + res
            if status != 0:
                break
    if status != 0:
        raise ArithmeticError("SC quadrature did not converge")
    return out.reshape(arr.shape)


def polygon_height_many(int n, w):
    arr = np.asarray(w, dtype=np.complex128)
    flat = np.ascontiguousarray(arr.ravel())
    out = np.empty(flat.shape[0], dtype=np.float64)
    cdef double complex[::1] wv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t m = flat.shape[0]
    cdef Py_ssize_t idx
    cdef int j
    cdef double acc, ang
    cdef double complex a, b, wi, r
    cdef double complex mids[64]
    if 2 * n > 64:
        raise ValueError("n too large")
    for j in range(2 * n):
        mids[j] = cexp(1j * ((j + 1) * M_PI / n - M_PI / (2.0 * n)))
    with nogil:
        for idx in range(m):
            wi = wv[idx]
            acc = 0.0
            for j in range(n):
                a = mids[2 * j] - wi
                b = mids[2 * j + 1] - wi
                r = b * conj(a)
                ang = atan2(cimag(r), creal(r))
                if ang < 0:
                    ang += 2.0 * M_PI
                acc += ang
            ov[idx] = acc / M_PI - 0.5
    return out.reshape(arr.shape)
