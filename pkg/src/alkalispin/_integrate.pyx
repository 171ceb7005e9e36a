# cython: language_level=3
"""Compiled integrator kernels for ``dx/dt = M x`` with 2x2 complex ``M``.

Same algorithm and return contract as ``_integrate_py``.
"""
import numpy as np

from libc.math cimport ceil, fabs, pow
from libc.complex cimport cabs

cdef int OK = 0
cdef int STEP_UNDERFLOW = 1
cdef int TOO_MANY_STEPS = 2

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0
cdef double EPS = 2.220446049250313e-16


cdef inline double dmax(double a, double b) nogil:
    return a if a > b else b


cdef inline double dmin(double a, double b) nogil:
    return a if a < b else b


def dp45(m, y0, t, double rtol, double atol, double h0, long max_steps):
    cdef double complex m00 = m[0, 0], m01 = m[0, 1], m10 = m[1, 0], m11 = m[1, 1]
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    out_arr = np.zeros((n, 2), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex f = y0[0], s = y0[1]
    cdef double complex yf, ys, nf, ns, ef, es
    cdef double complex k1f, k1s, k2f, k2s, k3f, k3s, k4f, k4s, k5f, k5s, k6f, k6s, k7f, k7s
    cdef double tc = tv[0], span = tv[n - 1] - tv[0], h = h0, target, remaining, hs
    cdef double err, factor, norm, tiny
    cdef bint clipped
    cdef long steps = 0
    cdef Py_ssize_t i
    cdef int status = OK

    out[0, 0] = f
    out[0, 1] = s
    if h <= 0.0:
        norm = dmax(dmax(cabs(m00), cabs(m01)), dmax(cabs(m10), cabs(m11)))
        h = 0.01 / norm if norm > 0.0 else span
        if h > span:
            h = span
    k1f = m00 * f + m01 * s
    k1s = m10 * f + m11 * s
    with nogil:
        for i in range(1, n):
            target = tv[i]
            while tc < target:
                remaining = target - tc
                clipped = h >= remaining
                hs = remaining if clipped else h
                tiny = 10.0 * EPS * dmax(fabs(tc), fabs(target))
                if hs <= tiny:
                    if remaining <= tiny:
                        tc = target
                        break
                    status = STEP_UNDERFLOW
                    break
                if steps >= max_steps:
                    status = TOO_MANY_STEPS
                    break

                yf = f + hs * A21 * k1f
                ys = s + hs * A21 * k1s
                k2f = m00 * yf + m01 * ys
                k2s = m10 * yf + m11 * ys
                yf = f + hs * (A31 * k1f + A32 * k2f)
                ys = s + hs * (A31 * k1s + A32 * k2s)
                k3f = m00 * yf + m01 * ys
                k3s = m10 * yf + m11 * ys
                yf = f + hs * (A41 * k1f + A42 * k2f + A43 * k3f)
                ys = s + hs * (A41 * k1s + A42 * k2s + A43 * k3s)
                k4f = m00 * yf + m01 * ys
                k4s = m10 * yf + m11 * ys
                yf = f + hs * (A51 * k1f + A52 * k2f + A53 * k3f + A54 * k4f)
                ys = s + hs * (A51 * k1s + A52 * k2s + A53 * k3s + A54 * k4s)
                k5f = m00 * yf + m01 * ys
                k5s = m10 * yf + m11 * ys
                yf = f + hs * (A61 * k1f + A62 * k2f + A63 * k3f + A64 * k4f + A65 * k5f)
                ys = s + hs * (A61 * k1s + A62 * k2s + A63 * k3s + A64 * k4s + A65 * k5s)
                k6f = m00 * yf + m01 * ys
                k6s = m10 * yf + m11 * ys
                nf = f + hs * (B1 * k1f + B3 * k3f + B4 * k4f + B5 * k5f + B6 * k6f)
                ns = s + hs * (B1 * k1s + B3 * k3s + B4 * k4s + B5 * k5s + B6 * k6s)
                k7f = m00 * nf + m01 * ns
                k7s = m10 * nf + m11 * ns
                ef = hs * (E1 * k1f + E3 * k3f + E4 * k4f + E5 * k5f + E6 * k6f + E7 * k7f)
                es = hs * (E1 * k1s + E3 * k3s + E4 * k4s + E5 * k5s + E6 * k6s + E7 * k7s)
                err = dmax(cabs(ef) / (atol + rtol * dmax(cabs(f), cabs(nf))),
                           cabs(es) / (atol + rtol * dmax(cabs(s), cabs(ns))))
                steps += 1
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = dmin(MAX_FACTOR, dmax(MIN_FACTOR, SAFETY * pow(err, -0.2)))
                if err <= 1.0:
                    tc = target if clipped else tc + hs
                    f = nf
                    s = ns
                    k1f = k7f
                    k1s = k7s
                    if not clipped or factor < 1.0:
                        h = hs * factor
                else:
                    h = hs * dmin(1.0, factor)
            if status != OK:
                break
            out[i, 0] = f
            out[i, 1] = s
    return out_arr, status, tc, steps


def rk4_fixed(m, y0, t, double h):
    cdef double complex m00 = m[0, 0], m01 = m[0, 1], m10 = m[1, 0], m11 = m[1, 1]
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    out_arr = np.zeros((n, 2), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex f = y0[0], s = y0[1]
    cdef double complex yf, ys, k1f, k1s, k2f, k2s, k3f, k3s, k4f, k4s
    cdef double dt, hs
    cdef long nsub, j
    cdef Py_ssize_t i

    out[0, 0] = f
    out[0, 1] = s
    with nogil:
        for i in range(1, n):
            dt = tv[i] - tv[i - 1]
            nsub = <long>ceil(dt / h - 1e-12)
            if nsub < 1:
                nsub = 1
            hs = dt / nsub
            for j in range(nsub):
                k1f = m00 * f + m01 * s
                k1s = m10 * f + m11 * s
                yf = f + 0.5 * hs * k1f
                ys = s + 0.5 * hs * k1s
                k2f = m00 * yf + m01 * ys
                k2s = m10 * yf + m11 * ys
                yf = f + 0.5 * hs * k2f
                ys = s + 0.5 * hs * k2s
                k3f = m00 * yf + m01 * ys
                k3s = m10 * yf + m11 * ys
                yf = f + hs * k3f
                ys = s + hs * k3s
                k4f = m00 * yf + m01 * ys
                k4s = m10 * yf + m11 * ys
                f = f + hs / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
                s = s + hs / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            out[i, 0] = f
            out[i, 1] = s
    return out_arr
