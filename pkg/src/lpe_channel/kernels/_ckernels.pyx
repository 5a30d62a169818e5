# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_pykernels`` for the contract)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _diff_rows(const double[:, ::1] f, double dy, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t ny = f.shape[1]
    cdef double h = 0.5 / dy
    cdef double g = 1.0 / dy
    for i in range(nx):
        out[i, 0] = (f[i, 1] - f[i, 0]) * g
        for j in range(1, ny - 1):
            out[i, j] = (f[i, j + 1] - f[i, j - 1]) * h
        out[i, ny - 1] = (f[i, ny - 1] - f[i, ny - 2]) * g


def sbp_diff_y(f, double dy, out=None):
    cdef cnp.ndarray arr = np.asarray(f)
    if arr.ndim != 2 or arr.dtype != np.float64:
        from . import _pykernels
        return _pykernels.sbp_diff_y(arr, dy, out)
    arr = np.ascontiguousarray(arr)
    if out is None:
        out = np.empty_like(arr)
    _diff_rows(arr, dy, out)
    return out


def mode_tendency(const double[:, ::1] u, const double[:, ::1] v, const double[:, ::1] psi,
                  const double[:, ::1] ux, const double[:, ::1] vx, const double[:, ::1] psix,
                  fu, fv, fpsi,
                  double adv, double f, double inv_lam, double n2_over_lam, double dy,
                  double[:, ::1] du, double[:, ::1] dv, double[:, ::1] dpsi):
    cdef Py_ssize_t i, j, jm, jp
    cdef Py_ssize_t nx = u.shape[0]
    cdef Py_ssize_t ny = u.shape[1]
    cdef double vy, py, scale
    cdef const double[:, ::1] Fu
    cdef const double[:, ::1] Fv
    cdef const double[:, ::1] Fp
    cdef bint forced = fu is not None
    if forced:
        Fu = np.ascontiguousarray(fu, dtype=np.float64)
        Fv = np.ascontiguousarray(fv, dtype=np.float64)
        Fp = np.ascontiguousarray(fpsi, dtype=np.float64)
    with nogil:
        for i in range(nx):
            for j in range(ny):
                if j == 0:
                    jm = 0
                    jp = 1
                    scale = 1.0 / dy
                elif j == ny - 1:
                    jm = ny - 2
                    jp = ny - 1
                    scale = 1.0 / dy
                else:
                    jm = j - 1
                    jp = j + 1
                    scale = 0.5 / dy
                vy = (v[i, jp] - v[i, jm]) * scale
                py = (psi[i, jp] - psi[i, jm]) * scale
                du[i, j] = f * v[i, j] + inv_lam * psix[i, j] - adv * ux[i, j]
                dv[i, j] = -f * u[i, j] + inv_lam * py - adv * vx[i, j]
                dpsi[i, j] = n2_over_lam * (ux[i, j] + vy) - adv * psix[i, j]
                if forced:
                    du[i, j] += Fu[i, j]
                    dv[i, j] += Fv[i, j]
                    dpsi[i, j] += Fp[i, j]
    return du, dv, dpsi


def inject_characteristic(double[:, :] v, double[:, :] psi, double nbuoy, bint swapped):
    cdef Py_ssize_t i
    cdef Py_ssize_t nx = v.shape[0]
    cdef Py_ssize_t last = v.shape[1] - 1
    cdef double inv_n = 1.0 / nbuoy
    cdef double a, b
    with nogil:
        for i in range(nx):
            if not swapped:
                a = v[i, 0] + psi[i, 0] * inv_n
                v[i, 0] = 0.5 * a
                psi[i, 0] = 0.5 * nbuoy * a
                b = v[i, last] - psi[i, last] * inv_n
                v[i, last] = 0.5 * b
                psi[i, last] = -0.5 * nbuoy * b
            else:
                a = v[i, 0] - psi[i, 0] * inv_n
                v[i, 0] = 0.5 * a
                psi[i, 0] = -0.5 * nbuoy * a
                b = v[i, last] + psi[i, last] * inv_n
                v[i, last] = 0.5 * b
                psi[i, last] = 0.5 * nbuoy * b


def solve_tridiag(lower, diag, upper, rhs):
    shape = np.broadcast(diag, rhs).shape
    if len(shape) != 2:
        from . import _pykernels
        return _pykernels.solve_tridiag(lower, diag, upper, rhs)
    cdef const double complex[:, ::1] a = np.ascontiguousarray(np.broadcast_to(lower, shape), dtype=np.complex128)
    cdef const double complex[:, ::1] b = np.ascontiguousarray(np.broadcast_to(diag, shape), dtype=np.complex128)
    cdef const double complex[:, ::1] c = np.ascontiguousarray(np.broadcast_to(upper, shape), dtype=np.complex128)
    cdef const double complex[:, ::1] d = np.ascontiguousarray(np.broadcast_to(rhs, shape), dtype=np.complex128)
    x_arr = np.empty(shape, dtype=np.complex128)
    cdef double complex[:, ::1] x = x_arr
    cdef double complex[::1] cp = np.empty(shape[1], dtype=np.complex128)
    cdef double complex[::1] dp = np.empty(shape[1], dtype=np.complex128)
    cdef Py_ssize_t m, i
    cdef Py_ssize_t nb = shape[0]
    cdef Py_ssize_t n = shape[1]
    cdef double complex denom
    with nogil:
        for m in range(nb):
            cp[0] = c[m, 0] / b[m, 0]
            dp[0] = d[m, 0] / b[m, 0]
            for i in range(1, n):
                denom = b[m, i] - a[m, i] * cp[i - 1]
                if i < n - 1:
                    cp[i] = c[m, i] / denom
                dp[i] = (d[m, i] - a[m, i] * dp[i - 1]) / denom
            x[m, n - 1] = dp[n - 1]
            for i in range(n - 2, -1, -1):
                x[m, i] = dp[i] - cp[i] * x[m, i + 1]
    return x_arr
