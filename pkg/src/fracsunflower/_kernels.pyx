# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled predictor-corrector time loop."""

from libc.math cimport sin, fabs, isfinite


cdef inline double _rhs(double y, int mode, double sign) nogil:
    if mode == 0:
        return sign * sin(y)
    return sign * y


def run_scheme(double[::1] X, double[::1] FX, Py_ssize_t k, Py_ssize_t N,
               const double[::1] afirst, const double[::1] aint,
               const double[::1] bfirst, const double[::1] bint,
               const double[::1] drift,
               double c1, double c2, double cz,
               int mode, double sign, int sweeps, double cutoff, int exact=0):
    cdef Py_ssize_t n, j, s, top
    cdef double sa, sb, xp, xc, z, fd
    cdef double a0, a1, a2, a3, b0, b1, b2, b3
    cdef Py_ssize_t bad = -1
    with nogil:
        for n in range(N):
            # four independent partial sums so the adds pipeline
            a0 = a1 = a2 = a3 = 0.0
            b0 = b1 = b2 = b3 = 0.0
            j = 1
            top = n - 3
            while j <= top:
                a0 += aint[n - j] * X[k + j]
                a1 += aint[n - j - 1] * X[k + j + 1]
                a2 += aint[n - j - 2] * X[k + j + 2]
                a3 += aint[n - j - 3] * X[k + j + 3]
                b0 += bint[n - j] * FX[j]
                b1 += bint[n - j - 1] * FX[j + 1]
                b2 += bint[n - j - 2] * FX[j + 2]
                b3 += bint[n - j - 3] * FX[j + 3]
                j += 4
            while j <= n:
                a0 += aint[n - j] * X[k + j]
                b0 += bint[n - j] * FX[j]
                j += 1
            sa = afirst[n] * X[k] + ((a0 + a1) + (a2 + a3))
            sb = bfirst[n] * FX[0] + ((b0 + b1) + (b2 + b3))
            xp = drift[n + 1] - c1 * sa - c2 * sb
            fd = FX[n + 1]
            if exact:
                xc = (xp - c2 * fd) / (1.0 + c1)
            else:
                z = -cz * xp - c2 * fd
                xc = xp - c1 * (xp + z) - c2 * fd
                for s in range(1, sweeps):
                    z = -cz * xc - c2 * fd
                    xc = xp - c1 * (xc + z) - c2 * fd
            X[k + n + 1] = xc
            FX[k + n + 1] = _rhs(xc, mode, sign)
            if not isfinite(xc) or fabs(xc) > cutoff:
                bad = n + 1
                break
    return bad
