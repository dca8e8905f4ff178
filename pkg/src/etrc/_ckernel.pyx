# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-loop integration kernel.

Same algorithm and floating point operation order as ``_kernel_py.run_loop``.
Built with -ffp-contract=off so no fused multiply-adds change the rounding.
"""

import numpy as np
from libc.math cimport sqrt, NAN


cdef inline double _norm(double[::1] v, Py_ssize_t n) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t c
    for c in range(n):
        acc += v[c] * v[c]
    return sqrt(acc)


cdef inline double _drive(double[::1] xs, double[::1] xh, Py_ssize_t n, double mu) noexcept nogil:
    cdef double acc = 0.0
    cdef double d
    cdef Py_ssize_t c
    cdef double nxs = _norm(xs, n)
    for c in range(n):
        d = xh[c] - xs[c]
        acc += d * d
    return mu * nxs - sqrt(acc)


cdef inline void _deriv(double[:, ::1] a, double[::1] xv, double[::1] bu,
                        double[::1] out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t r, c
    cdef double acc
    for r in range(n):
        acc = 0.0
        for c in range(n):
            acc += a[r, c] * xv[c]
        out[r] = acc + bu[r]


cdef inline void _refresh(double[:, ::1] b, double[:, ::1] k, double[::1] xh,
                          double[::1] u, double[::1] bu, Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t r, j, c
    cdef double acc
    for j in range(m):
        acc = 0.0
        for c in range(n):
            acc += k[j, c] * xh[c]
        u[j] = acc
    for r in range(n):
        acc = 0.0
        for j in range(m):
            acc += b[r, j] * u[j]
        bu[r] = acc


def run_loop(double[:, :, ::1] a_half, b_in, k_in, x0_in, double dt, Py_ssize_t nsteps,
             int mode, double mu, double theta, double lam, double eta0, double period,
             double origin_tol, double diverge_limit,
             double[:, ::1] states, double[:, ::1] inputs, double[::1] err,
             double[::1] thr, double[::1] eta_out, signed char[::1] flags):
    cdef double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef double[:, ::1] k = np.ascontiguousarray(k_in, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t m = b.shape[1]
    cdef double[::1] x = np.array(x0_in, dtype=np.float64)
    cdef double[::1] xh = np.array(x0_in, dtype=np.float64)
    cdef double[::1] xs = np.zeros(n)
    cdef double[::1] k1 = np.zeros(n)
    cdef double[::1] k2 = np.zeros(n)
    cdef double[::1] k3 = np.zeros(n)
    cdef double[::1] k4 = np.zeros(n)
    cdef double[::1] u = np.zeros(m)
    cdef double[::1] bu = np.zeros(n)
    cdef double hdt = 0.5 * dt
    cdef double dt6 = dt / 6.0
    cdef double eta = eta0 if mode == 2 else 0.0
    cdef double last = 0.0
    cdef double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0
    cdef double e1, e2, e3, e4, t, nx, ne, acc, d, thr_i
    cdef bint fire, at_origin
    cdef Py_ssize_t i, r, c, j
    cdef Py_ssize_t done = nsteps

    with nogil:
        _refresh(b, k, xh, u, bu, n, m)
        nx = _norm(x, n)
        for r in range(n):
            states[0, r] = x[r]
        for j in range(m):
            inputs[0, j] = u[j]
        err[0] = 0.0
        if mode == 1:
            thr[0] = mu * nx
        elif mode == 2:
            thr[0] = eta / theta + mu * nx
        else:
            thr[0] = NAN
        eta_out[0] = eta if mode == 2 else NAN
        flags[0] = 1

        for i in range(nsteps):
            _deriv(a_half[2 * i], x, bu, k1, n)
            for r in range(n):
                xs[r] = x[r] + hdt * k1[r]
            if mode == 2:
                d1 = _drive(x, xh, n, mu)
                d2 = _drive(xs, xh, n, mu)
            _deriv(a_half[2 * i + 1], xs, bu, k2, n)
            for r in range(n):
                xs[r] = x[r] + hdt * k2[r]
            if mode == 2:
                d3 = _drive(xs, xh, n, mu)
            _deriv(a_half[2 * i + 1], xs, bu, k3, n)
            for r in range(n):
                xs[r] = x[r] + dt * k3[r]
            if mode == 2:
                d4 = _drive(xs, xh, n, mu)
            _deriv(a_half[2 * i + 2], xs, bu, k4, n)
            for r in range(n):
                x[r] = x[r] + dt6 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r])
            if mode == 2:
                e1 = -lam * eta + d1
                e2 = -lam * (eta + hdt * e1) + d2
                e3 = -lam * (eta + hdt * e2) + d3
                e4 = -lam * (eta + dt * e3) + d4
                eta = eta + dt6 * (e1 + 2.0 * e2 + 2.0 * e3 + e4)

            t = (i + 1) * dt
            nx = _norm(x, n)
            acc = 0.0
            for c in range(n):
                d = xh[c] - x[c]
                acc += d * d
            ne = sqrt(acc)
            if not nx <= diverge_limit:
                done = i
                break
            at_origin = nx < origin_tol and ne < origin_tol
            if mode == 1:
                fire = (not at_origin) and ne >= mu * nx
                thr_i = mu * nx
            elif mode == 2:
                fire = (not at_origin) and eta + theta * (mu * nx - ne) <= 0.0
                thr_i = eta / theta + mu * nx
            else:
                fire = t - last >= period - 1e-12
                thr_i = NAN
            if fire:
                for r in range(n):
                    xh[r] = x[r]
                _refresh(b, k, xh, u, bu, n, m)
                last = t
            for r in range(n):
                states[i + 1, r] = x[r]
            for j in range(m):
                inputs[i + 1, j] = u[j]
            err[i + 1] = ne
            thr[i + 1] = thr_i
            eta_out[i + 1] = eta if mode == 2 else NAN
            flags[i + 1] = 1 if fire else 0
    return done
