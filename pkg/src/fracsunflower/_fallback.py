"""Pure numpy implementation of the predictor-corrector time loop.

Same signature and arithmetic as the compiled ``_kernels.run_scheme``; used
when the extension is not built.  Summation order differs (BLAS dot), so the
two back ends agree to rounding, not bit for bit.
"""

import math

import numpy as np


def run_scheme(X, FX, k, N, afirst, aint, bfirst, bint, drift,
               c1, c2, cz, mode, sign, sweeps, cutoff, exact=0):
    ra = np.ascontiguousarray(aint[::-1])
    rb = np.ascontiguousarray(bint[::-1])
    m = len(aint)
    f = math.sin if mode == 0 else (lambda y: y)
    for n in range(N):
        sa = afirst[n] * X[k]
        sb = bfirst[n] * FX[0]
        if n:
            sa += np.dot(ra[m - n:], X[k + 1:k + n + 1])
            sb += np.dot(rb[m - n:], FX[1:n + 1])
        xp = drift[n + 1] - c1 * sa - c2 * sb
        fd = FX[n + 1]
        if exact:
            xc = (xp - c2 * fd) / (1.0 + c1)
        else:
            z = -cz * xp - c2 * fd
            xc = xp - c1 * (xp + z) - c2 * fd
            for _ in range(1, sweeps):
                z = -cz * xc - c2 * fd
                xc = xp - c1 * (xc + z) - c2 * fd
        X[k + n + 1] = xc
        FX[k + n + 1] = sign * f(xc)
        if not math.isfinite(xc) or abs(xc) > cutoff:
            return n + 1
    return -1
