# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_kernels_py``.

Same signatures and return values; see that module for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, M_PI

cnp.import_array()

cdef double DEG = M_PI / 180.0


cdef inline void _place(double* a, double* b, double* c, double length,
                        double angle, double torsion, double* out) noexcept nogil:
    cdef double bcx = c[0] - b[0], bcy = c[1] - b[1], bcz = c[2] - b[2]
    cdef double inv = 1.0 / sqrt(bcx * bcx + bcy * bcy + bcz * bcz)
    bcx *= inv; bcy *= inv; bcz *= inv
    cdef double abx = b[0] - a[0], aby = b[1] - a[1], abz = b[2] - a[2]
    cdef double nx = aby * bcz - abz * bcy
    cdef double ny = abz * bcx - abx * bcz
    cdef double nz = abx * bcy - aby * bcx
    inv = 1.0 / sqrt(nx * nx + ny * ny + nz * nz)
    nx *= inv; ny *= inv; nz *= inv
    cdef double mx = ny * bcz - nz * bcy
    cdef double my = nz * bcx - nx * bcz
    cdef double mz = nx * bcy - ny * bcx
    cdef double sa = sin(angle * DEG)
    cdef double d0 = -length * cos(angle * DEG)
    cdef double d1 = length * sa * cos(torsion * DEG)
    cdef double d2 = length * sa * sin(torsion * DEG)
    out[0] = c[0] + bcx * d0 + mx * d1 + nx * d2
    out[1] = c[1] + bcy * d0 + my * d1 + ny * d2
    out[2] = c[2] + bcz * d0 + mz * d1 + nz * d2


def build_chain(phi, psi, geom, sc_len):
    cdef const double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef const double[::1] ps = np.ascontiguousarray(psi, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(geom, dtype=np.float64)
    cdef const double[::1] scl = np.ascontiguousarray(sc_len, dtype=np.float64)
    cdef Py_ssize_t n = ph.shape[0], i, b
    result = np.empty((7 * n, 3), dtype=np.float64)
    cdef double[:, ::1] out = result
    cdef double n_ca = g[0], ca_c = g[1], c_n = g[2], c_o = g[3], n_h = g[4], ca_ha = g[5]
    cdef double n_ca_c = g[6], ca_c_n = g[7], c_n_ca = g[8], ca_c_o = g[9], ca_n_h = g[10]
    cdef double c_ca_sc = g[11], n_c_ca_sc = g[12], c_ca_ha = g[13], n_c_ca_ha = g[14], omega = g[15]
    cdef double N[3]
    cdef double CA[3]
    cdef double C[3]
    cdef double Nn[3]
    cdef double CAn[3]
    cdef double Cn[3]
    cdef double t = (180.0 - n_ca_c) * DEG
    N[0] = 0.0; N[1] = 0.0; N[2] = 0.0
    CA[0] = n_ca; CA[1] = 0.0; CA[2] = 0.0
    C[0] = n_ca + ca_c * cos(t); C[1] = ca_c * sin(t); C[2] = 0.0
    with nogil:
        for i in range(n):
            if i > 0:
                _place(N, CA, C, c_n, ca_c_n, ps[i - 1], Nn)
                _place(CA, C, Nn, n_ca, c_n_ca, omega, CAn)
                _place(C, Nn, CAn, ca_c, n_ca_c, ph[i], Cn)
                N[0] = Nn[0]; N[1] = Nn[1]; N[2] = Nn[2]
                CA[0] = CAn[0]; CA[1] = CAn[1]; CA[2] = CAn[2]
                C[0] = Cn[0]; C[1] = Cn[1]; C[2] = Cn[2]
            b = 7 * i
            out[b, 0] = N[0]; out[b, 1] = N[1]; out[b, 2] = N[2]
            _place(C, CA, N, n_h, ca_n_h, ph[i] + 180.0, &out[b + 1, 0])
            out[b + 2, 0] = CA[0]; out[b + 2, 1] = CA[1]; out[b + 2, 2] = CA[2]
            _place(N, C, CA, ca_ha, c_ca_ha, n_c_ca_ha, &out[b + 3, 0])
            out[b + 4, 0] = C[0]; out[b + 4, 1] = C[1]; out[b + 4, 2] = C[2]
            _place(N, CA, C, c_o, ca_c_o, ps[i] + 180.0, &out[b + 5, 0])
            _place(N, C, CA, scl[i], c_ca_sc, n_c_ca_sc, &out[b + 6, 0])
    return result


def clash_pairs(pos, radii, excluded, double factor):
    cdef const double[:, ::1] x = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const cnp.uint8_t[:, ::1] ex = np.ascontiguousarray(excluded, dtype=np.uint8)
    cdef Py_ssize_t n = x.shape[0], i, j, k = 0
    cdef double dx, dy, dz, d2, lim
    # first pass counts, second fills; keeps output ordered by (i, j)
    for i in range(n):
        for j in range(i + 1, n):
            if ex[i, j]:
                continue
            dx = x[i, 0] - x[j, 0]; dy = x[i, 1] - x[j, 1]; dz = x[i, 2] - x[j, 2]
            lim = factor * (r[i] + r[j])
            if dx * dx + dy * dy + dz * dz < lim * lim:
                k += 1
    ii = np.empty(k, dtype=np.int64)
    jj = np.empty(k, dtype=np.int64)
    dd = np.empty(k, dtype=np.float64)
    cdef cnp.int64_t[::1] oi = ii
    cdef cnp.int64_t[::1] oj = jj
    cdef double[::1] od = dd
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if ex[i, j]:
                continue
            dx = x[i, 0] - x[j, 0]; dy = x[i, 1] - x[j, 1]; dz = x[i, 2] - x[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            lim = factor * (r[i] + r[j])
            if d2 < lim * lim:
                oi[k] = i; oj[k] = j; od[k] = sqrt(d2)
                k += 1
    return ii, jj, dd


cdef inline double _smootherstep(double x) noexcept nogil:
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


cdef inline double _smootherstep_deriv(double x) noexcept nogil:
    return 30.0 * x * x * (x - 1.0) * (x - 1.0)


def pair_terms(pos, radii, excluded, double factor, double k_clash, hb_o, hb_n,
               double k_hbond, double hb_range, double hb_width):
    cdef const double[:, ::1] x = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const cnp.uint8_t[:, ::1] ex = np.ascontiguousarray(excluded, dtype=np.uint8)
    cdef const cnp.int64_t[::1] ho = np.ascontiguousarray(hb_o, dtype=np.int64)
    cdef const cnp.int64_t[::1] hn = np.ascontiguousarray(hb_n, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], m = ho.shape[0], i, j, p, a
    grad_arr = np.zeros((n, 3), dtype=np.float64)
    cdef double[:, ::1] g = grad_arr
    cdef double e_clash = 0.0, e_hb = 0.0
    cdef double dx, dy, dz, d2, d, lim, ov, coef, lo, t
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                if ex[i, j]:
                    continue
                dx = x[i, 0] - x[j, 0]; dy = x[i, 1] - x[j, 1]; dz = x[i, 2] - x[j, 2]
                d2 = dx * dx + dy * dy + dz * dz
                lim = factor * (r[i] + r[j])
                if d2 < lim * lim:
                    d = sqrt(d2)
                    ov = lim - d
                    e_clash += k_clash * ov * ov
                    if d > 0.0:
                        coef = -2.0 * k_clash * ov / d
                        g[i, 0] += coef * dx; g[i, 1] += coef * dy; g[i, 2] += coef * dz
                        g[j, 0] -= coef * dx; g[j, 1] -= coef * dy; g[j, 2] -= coef * dz
        if k_hbond != 0.0:
            lo = hb_range - hb_width
            for p in range(m):
                i = ho[p]; j = hn[p]
                dx = x[i, 0] - x[j, 0]; dy = x[i, 1] - x[j, 1]; dz = x[i, 2] - x[j, 2]
                d = sqrt(dx * dx + dy * dy + dz * dz)
                if d >= hb_range:
                    continue
                if d <= lo:
                    e_hb -= k_hbond
                    continue
                t = (hb_range - d) / hb_width
                e_hb -= k_hbond * _smootherstep(t)
                coef = k_hbond * _smootherstep_deriv(t) / hb_width / d
                g[i, 0] += coef * dx; g[i, 1] += coef * dy; g[i, 2] += coef * dz
                g[j, 0] -= coef * dx; g[j, 1] -= coef * dy; g[j, 2] -= coef * dz
    return e_clash, e_hb, grad_arr
