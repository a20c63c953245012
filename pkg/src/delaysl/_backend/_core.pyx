# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled method-of-steps stepper.

One RK4 run between two breakpoints of the potential.  The loop is
sequential in the step index and therefore the hot spot of every
characteristic-function evaluation; everything else in the package is
vectorized numpy.
"""

NAME = "compiled"


def rk4_run(double complex[:, ::1] Y, double complex[:, ::1] Yp,
            const double complex[::1] lam, double h,
            Py_ssize_t j_start, Py_ssize_t n_steps, Py_ssize_t hist_off,
            const double complex[::1] qa, const double complex[::1] qb,
            const double complex[::1] qc):
    """Same contract as delaysl._backend.pure.rk4_run."""
    cdef Py_ssize_t nlam = lam.shape[0]
    cdef Py_ssize_t l, s, j
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef double complex lm, y, p, f1, f2, f4
    cdef double complex k1y, k1p, k2y, k2p, k3y, k3p, k4y, k4p
    for l in range(nlam):
        lm = lam[l]
        for s in range(n_steps):
            j = j_start + 2 * s
            y = Y[l, j]
            p = Yp[l, j]
            f1 = qa[s] * Y[l, j - hist_off]
            f2 = qb[s] * Y[l, j + 1 - hist_off]
            f4 = qc[s] * Y[l, j + 2 - hist_off]
            k1y = p
            k1p = f1 - lm * y
            k2y = p + half * k1p
            k2p = f2 - lm * (y + half * k1y)
            k3y = p + half * k2p
            k3p = f2 - lm * (y + half * k2y)
            k4y = p + h * k3p
            k4p = f4 - lm * (y + h * k3y)
            Y[l, j + 2] = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
            Yp[l, j + 2] = p + sixth * (k1p + 2.0 * (k2p + k3p) + k4p)
