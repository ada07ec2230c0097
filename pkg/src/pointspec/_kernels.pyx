# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: direct weighted DFT sums and Bessel pair sums.

Mirrors _kernels_py exactly in semantics.  Accumulation is Kahan-compensated
per output slot, phases are reduced modulo 1 before the trig calls, and trig
is evaluated at the absolute reduced phase (sign applied to the odd part) so
node negation conjugates results bitwise.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, cos, fabs, rint, sin, sqrt
from scipy.special.cython_special cimport j0 as c_j0, j1 as c_j1

cnp.import_array()

BACKEND_NAME = "cython"

cdef double TWO_PI = 2.0 * M_PI


cdef inline void kahan_add(double* acc, double* comp, double x) noexcept nogil:
    cdef double y = x - comp[0]
    cdef double t = acc[0] + y
    comp[0] = (t - acc[0]) - y
    acc[0] = t


def dft_weighted(const double[:, ::1] points, const double[:, ::1] weights,
                 const double[:, ::1] nodes):
    """Direct sums Z[m, p] = sum_n weights[n, p] * exp(-2j pi nodes[m].points[n])."""
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t n_w = weights.shape[1]
    cdef Py_ssize_t n_nodes = nodes.shape[0]
    if weights.shape[0] != n_pts:
        raise ValueError("weights and points disagree on n")
    if nodes.shape[1] != d:
        raise ValueError("nodes and points disagree on d")

    out = np.empty((n_nodes, n_w), dtype=np.complex128)
    cdef double complex[:, ::1] out_v = out
    re = np.zeros(n_w)
    im = np.zeros(n_w)
    re_c = np.zeros(n_w)
    im_c = np.zeros(n_w)
    cdef double[::1] re_v = re, im_v = im, re_cv = re_c, im_cv = im_c

    cdef Py_ssize_t m, n, j, p
    cdef double s, r, a, cr, si, wv
    with nogil:
        for m in range(n_nodes):
            for p in range(n_w):
                re_v[p] = 0.0
                im_v[p] = 0.0
                re_cv[p] = 0.0
                im_cv[p] = 0.0
            for n in range(n_pts):
                s = 0.0
                for j in range(d):
                    s += nodes[m, j] * points[n, j]
                r = s - rint(s)
                a = fabs(r)
                cr = cos(TWO_PI * a)
                si = sin(TWO_PI * a)
                if r < 0.0:
                    si = -si
                for p in range(n_w):
                    wv = weights[n, p]
                    kahan_add(&re_v[p], &re_cv[p], wv * cr)
                    kahan_add(&im_v[p], &im_cv[p], -wv * si)
            for p in range(n_w):
                out_v[m, p] = re_v[p] + 1j * im_v[p]
    return out


cdef inline double bessel_eval(int which, double x) noexcept nogil:
    # which: 0 -> J0, 1 -> J1, 2 -> J_{1/2}, 3 -> J_{3/2}
    cdef double x2
    if which == 0:
        return c_j0(x)
    if which == 1:
        return c_j1(x)
    if x <= 0.0:
        return 0.0
    if which == 2:
        return sqrt(2.0 / (M_PI * x)) * sin(x)
    # J_{3/2}: series below 1e-3 avoids cancellation in sin x / x - cos x
    if x < 1e-3:
        x2 = x * x
        return sqrt(2.0 / (M_PI * x)) * (
            x2 / 3.0 - x2 * x2 / 30.0 + x2 * x2 * x2 / 840.0
        )
    return sqrt(2.0 / (M_PI * x)) * (sin(x) / x - cos(x))


cdef int _order_code(double order) except -1:
    if order == 0.0:
        return 0
    if order == 1.0:
        return 1
    if order == 0.5:
        return 2
    if order == 1.5:
        return 3
    raise ValueError(f"unsupported Bessel order {order}")


def bessel_j_values(double order, x):
    """Bessel J of the first kind for the supported orders 0, 1/2, 1, 3/2."""
    cdef int code = _order_code(order)
    arr = np.ascontiguousarray(x, dtype=np.float64)
    flat = arr.ravel()
    out = np.empty_like(flat)
    cdef const double[::1] xv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = bessel_eval(code, xv[i])
    return out.reshape(arr.shape)


def pair_radial_sum(const double[::1] r, const double[::1] w,
                    const double[::1] t, double order):
    """S[i] = sum_q w[q] * J_order(2 pi t[i] r[q]) with Kahan accumulation."""
    cdef int code = _order_code(order)
    if r.shape[0] != w.shape[0]:
        raise ValueError("r and w must have equal length")
    out = np.zeros(t.shape[0])
    cdef double[::1] out_v = out
    cdef Py_ssize_t i, q
    cdef double acc, comp, tt
    with nogil:
        for i in range(t.shape[0]):
            acc = 0.0
            comp = 0.0
            tt = TWO_PI * t[i]
            for q in range(r.shape[0]):
                kahan_add(&acc, &comp, w[q] * bessel_eval(code, tt * r[q]))
            out_v[i] = acc
    return out
