# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element-sum kernel for the near-field diffraction model."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, M_PI, INFINITY

cnp.import_array()


cdef double _sum_points(const double[:, ::1] points, const double[:, ::1] elems,
                        const double[::1] w_re, const double[::1] w_im,
                        double k, double normal_z, bint leaning,
                        double[::1] out_re, double[::1] out_im) noexcept nogil:
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t n_el = elems.shape[0]
    cdef Py_ssize_t p, m
    cdef double dx, dy, dz, r, f, c, s, acc_re, acc_im, amp
    cdef double dmin = INFINITY
    for p in range(n_pts):
        acc_re = 0.0
        acc_im = 0.0
        for m in range(n_el):
            dx = points[p, 0] - elems[m, 0]
            dy = points[p, 1] - elems[m, 1]
            dz = points[p, 2] - elems[m, 2]
            r = sqrt(dx * dx + dy * dy + dz * dz)
            if r < dmin:
                dmin = r
            if leaning:
                f = 0.5 * (1.0 + normal_z * dz / r)
            else:
                f = 1.0
            amp = f / r
            c = cos(k * r) * amp
            s = sin(k * r) * amp
            acc_re += w_re[m] * c - w_im[m] * s
            acc_im += w_re[m] * s + w_im[m] * c
        out_re[p] = acc_re
        out_im[p] = acc_im
    return dmin


def near_field_sum(points, elems, weights, double wavelength, double normal_z, bint leaning):
    """Return (sum_m w_m F_m exp(j k r_m) / r_m for each point, min distance)."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] el = np.ascontiguousarray(elems, dtype=np.float64)
    w = np.asarray(weights, dtype=np.complex128)
    cdef const double[::1] w_re = np.ascontiguousarray(w.real)
    cdef const double[::1] w_im = np.ascontiguousarray(w.imag)
    out_re_arr = np.empty(pts.shape[0])
    out_im_arr = np.empty(pts.shape[0])
    cdef double[::1] out_re = out_re_arr
    cdef double[::1] out_im = out_im_arr
    cdef double k = 2.0 * M_PI / wavelength
    cdef double dmin
    with nogil:
        dmin = _sum_points(pts, el, w_re, w_im, k, normal_z, leaning, out_re, out_im)
    return out_re_arr + 1j * out_im_arr, dmin
