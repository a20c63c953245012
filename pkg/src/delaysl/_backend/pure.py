"""Numpy fallback for the method-of-steps stepper.

Same contract as the compiled module: sequential in the step index,
vectorized across the spectral-parameter batch.
"""

from __future__ import annotations

NAME = "pure"


def rk4_run(Y, Yp, lam, h, j_start, n_steps, hist_off, qa, qb, qc):
    """March ``n_steps`` RK4 steps of size h, writing half-grid columns.

    Y, Yp: (n_lam, n_nodes) solution and derivative on the half-step grid.
    Step s starts at column ``j = j_start + 2 s`` and writes column j+2.
    The delayed argument lives ``hist_off`` columns back; qa/qb/qc hold
    the potential at the left/middle/right stage abscissae of each step.
    """
    half = 0.5 * h
    sixth = h / 6.0
    for s in range(n_steps):
        j = j_start + 2 * s
        y = Y[:, j]
        p = Yp[:, j]
        f1 = qa[s] * Y[:, j - hist_off]
        f2 = qb[s] * Y[:, j + 1 - hist_off]
        f4 = qc[s] * Y[:, j + 2 - hist_off]
        k1y = p
        k1p = f1 - lam * y
        k2y = p + half * k1p
        k2p = f2 - lam * (y + half * k1y)
        k3y = p + half * k2p
        k3p = f2 - lam * (y + half * k2y)
        k4y = p + h * k3p
        k4p = f4 - lam * (y + h * k3y)
        Y[:, j + 2] = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
        Yp[:, j + 2] = p + sixth * (k1p + 2.0 * (k2p + k3p) + k4p)
