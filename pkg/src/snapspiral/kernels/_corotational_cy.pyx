# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled corotational element kernel.

Same contract as ``_corotational_py``: per-element internal force (m, 6),
consistent tangent (m, 6, 6) and strain energy (m,) for 2-D corotational
Euler-Bernoulli frame elements.
"""

import numpy as np

cimport cython
from libc.math cimport atan2, cos, sin, sqrt

BACKEND = "cython"


cdef inline double _wrap(double a) nogil:
    return atan2(sin(a), cos(a))


def batch_force_tangent(X, conn, EA, EI, L0, u):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef long long[:, ::1] cv = np.ascontiguousarray(conn, dtype=np.int64)
    cdef double[::1] EAv = np.ascontiguousarray(EA, dtype=np.float64)
    cdef double[::1] EIv = np.ascontiguousarray(EI, dtype=np.float64)
    cdef double[::1] L0v = np.ascontiguousarray(L0, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)

    cdef Py_ssize_t m = cv.shape[0]
    fel_np = np.empty((m, 6), dtype=np.float64)
    kel_np = np.empty((m, 6, 6), dtype=np.float64)
    cdef double[:, ::1] fel = fel_np
    cdef double[:, :, ::1] kel = kel_np

    cdef Py_ssize_t e, a, b
    cdef Py_ssize_t i, j
    cdef double x1x, x1y, x2x, x2y, dx, dy, L, c, s
    cdef double beta0, beta, alpha, th1, th2, ul
    cdef double N, M1, M2, Msum
    cdef double ea, ei, l0
    cdef double r[6]
    cdef double z[6]
    cdef double b1[6]
    cdef double b2[6]
    cdef double kuu, kth1, kth2, kcross
    cdef int bad = -1
    cdef double badL = 0.0

    with nogil:
        for e in range(m):
            i = cv[e, 0]
            j = cv[e, 1]
            x1x = Xv[i, 0] + uv[3 * i]
            x1y = Xv[i, 1] + uv[3 * i + 1]
            x2x = Xv[j, 0] + uv[3 * j]
            x2y = Xv[j, 1] + uv[3 * j + 1]
            dx = x2x - x1x
            dy = x2y - x1y
            L = sqrt(dx * dx + dy * dy)
            if L < 1e-9:
                bad = <int> e
                badL = L
                break
            c = dx / L
            s = dy / L
            l0 = L0v[e]
            ea = EAv[e]
            ei = EIv[e]

            beta0 = atan2(Xv[j, 1] - Xv[i, 1], Xv[j, 0] - Xv[i, 0])
            beta = atan2(dy, dx)
            alpha = beta - beta0
            th1 = _wrap(uv[3 * i + 2] - alpha)
            th2 = _wrap(uv[3 * j + 2] - alpha)
            ul = (L * L - l0 * l0) / (L + l0)

            N = ea * ul / l0
            M1 = (ei / l0) * (4.0 * th1 + 2.0 * th2)
            M2 = (ei / l0) * (2.0 * th1 + 4.0 * th2)
            Msum = M1 + M2

            r[0] = -c; r[1] = -s; r[2] = 0.0
            r[3] = c; r[4] = s; r[5] = 0.0
            z[0] = s; z[1] = -c; z[2] = 0.0
            z[3] = -s; z[4] = c; z[5] = 0.0
            for a in range(6):
                b1[a] = -z[a] / L
                b2[a] = b1[a]
            b1[2] += 1.0
            b2[5] += 1.0

            for a in range(6):
                fel[e, a] = N * r[a] + M1 * b1[a] + M2 * b2[a]

            kuu = ea / l0
            kth1 = 4.0 * ei / l0
            kth2 = kth1
            kcross = 2.0 * ei / l0
            for a in range(6):
                for b in range(6):
                    kel[e, a, b] = (
                        kuu * r[a] * r[b]
                        + kth1 * b1[a] * b1[b]
                        + kth2 * b2[a] * b2[b]
                        + kcross * (b1[a] * b2[b] + b2[a] * b1[b])
                        + (N / L) * z[a] * z[b]
                        + (Msum / (L * L)) * (r[a] * z[b] + z[a] * r[b])
                    )

    if bad >= 0:
        from ..errors import SingularElementError

        raise SingularElementError(
            f"element {bad} collapsed to length {badL:.3e} mm"
        )
    return fel_np, kel_np


def batch_energy(X, conn, EA, EI, L0, u):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef long long[:, ::1] cv = np.ascontiguousarray(conn, dtype=np.int64)
    cdef double[::1] EAv = np.ascontiguousarray(EA, dtype=np.float64)
    cdef double[::1] EIv = np.ascontiguousarray(EI, dtype=np.float64)
    cdef double[::1] L0v = np.ascontiguousarray(L0, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)

    cdef Py_ssize_t m = cv.shape[0]
    out_np = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_np

    cdef Py_ssize_t e, i, j
    cdef double dx, dy, L, beta0, beta, alpha, th1, th2, ul, l0
    cdef int bad = -1
    cdef double badL = 0.0

    with nogil:
        for e in range(m):
            i = cv[e, 0]
            j = cv[e, 1]
            dx = (Xv[j, 0] + uv[3 * j]) - (Xv[i, 0] + uv[3 * i])
            dy = (Xv[j, 1] + uv[3 * j + 1]) - (Xv[i, 1] + uv[3 * i + 1])
            L = sqrt(dx * dx + dy * dy)
            if L < 1e-9:
                bad = <int> e
                badL = L
                break
            l0 = L0v[e]
            beta0 = atan2(Xv[j, 1] - Xv[i, 1], Xv[j, 0] - Xv[i, 0])
            beta = atan2(dy, dx)
            alpha = beta - beta0
            th1 = _wrap(uv[3 * i + 2] - alpha)
            th2 = _wrap(uv[3 * j + 2] - alpha)
            ul = (L * L - l0 * l0) / (L + l0)
            out[e] = (EAv[e] * ul * ul / (2.0 * l0)
                      + (EIv[e] / l0) * 2.0 * (th1 * th1 + th1 * th2 + th2 * th2))

    if bad >= 0:
        from ..errors import SingularElementError

        raise SingularElementError(
            f"element {bad} collapsed to length {badL:.3e} mm"
        )
    return out_np
