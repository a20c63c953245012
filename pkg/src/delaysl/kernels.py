"""Entire trigonometric kernels of the spectral parameter.

``ckernel(lam, x) = cos(rho x)`` and ``skernel(lam, x) = sin(rho x)/rho``
with ``rho**2 = lam`` are entire in lam (only even powers of rho occur),
so the branch of the square root cannot matter.  Near lam = 0 both are
computed from their Maclaurin series in lam to avoid 0/0 noise.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = ["ckernel", "skernel", "kernel_dlambda"]

# switch to the series when |lam| * x^2 drops below this
SERIES_THRESHOLD = 1e-3
_SERIES_TERMS = 8

_FACT = np.array([float(math.factorial(k)) for k in range(2 * _SERIES_TERMS + 2)])


def _prep(lam, x):
    lam = np.asarray(lam, dtype=complex)
    x = np.asarray(x, dtype=float)
    shape = np.broadcast_shapes(lam.shape, x.shape)
    lam = np.broadcast_to(lam, shape).ravel()
    x = np.broadcast_to(x, shape).ravel()
    small = np.abs(lam) * x**2 < SERIES_THRESHOLD
    return lam, x, small, shape


def _ck_from_rho(rho, x):
    return np.cos(rho * x)


def _sk_from_rho(rho, x):
    z = rho * x
    out = np.empty(np.broadcast(rho, x).shape, dtype=complex)
    nz = rho != 0
    out[nz] = np.sin(z[nz]) / np.broadcast_to(rho, z.shape)[nz]
    out[~nz] = np.broadcast_to(x, z.shape)[~nz]
    return out


def _c_series(lam, x):
    # sum_k (-lam)^k x^(2k) / (2k)!
    acc = np.zeros(lam.shape, dtype=complex)
    t = -lam * x**2
    term = np.ones_like(acc)
    for k in range(_SERIES_TERMS):
        if k > 0:
            term = term * t / (2 * k * (2 * k - 1))
        acc += term
    return acc


def _s_series(lam, x):
    # x * sum_k (-lam x^2)^k / (2k+1)!
    acc = np.zeros(lam.shape, dtype=complex)
    t = -lam * x**2
    term = np.ones_like(acc)
    for k in range(_SERIES_TERMS):
        if k > 0:
            term = term * t / (2 * k * (2 * k + 1))
        acc += term
    return acc * x


def _ds_series(lam, x):
    # d/dlam of the skernel series: sum_{k>=1} k (-1)^k lam^(k-1) x^(2k+1)/(2k+1)!
    acc = np.zeros(lam.shape, dtype=complex)
    for k in range(1, _SERIES_TERMS):
        acc += k * (-1) ** k * lam ** (k - 1) * x ** (2 * k + 1) / _FACT[2 * k + 1]
    return acc


def ckernel(lam, x):
    """cos(rho x) as an entire function of lam = rho**2."""
    lam, x, small, shape = _prep(lam, x)
    out = np.empty(lam.shape, dtype=complex)
    if np.any(~small):
        rho = np.sqrt(lam[~small])
        out[~small] = _ck_from_rho(rho, x[~small])
    if np.any(small):
        out[small] = _c_series(lam[small], x[small])
    return out.reshape(shape)[()]


def skernel(lam, x):
    """sin(rho x)/rho as an entire function of lam = rho**2."""
    lam, x, small, shape = _prep(lam, x)
    out = np.empty(lam.shape, dtype=complex)
    if np.any(~small):
        rho = np.sqrt(lam[~small])
        out[~small] = _sk_from_rho(rho, x[~small])
    if np.any(small):
        out[small] = _s_series(lam[small], x[small])
    return out.reshape(shape)[()]


def kernel_dlambda(lam, x, kind: str):
    """lam-derivative of a kernel: kind "c" or "s".

    d/dlam cos(rho x) = -(x/2) skernel(lam, x) everywhere;
    d/dlam [sin(rho x)/rho] = (x ckernel - skernel)/(2 lam), with the
    series value -x^3/6 + O(lam) taking over near lam = 0.
    """
    if kind == "c":
        return -0.5 * np.asarray(x) * skernel(lam, x)
    if kind != "s":
        raise DomainError(f"kind must be 'c' or 's', got {kind!r}")
    lam, x, small, shape = _prep(lam, x)
    out = np.empty(lam.shape, dtype=complex)
    if np.any(~small):
        lb, xb = lam[~small], x[~small]
        out[~small] = (xb * ckernel(lb, xb) - skernel(lb, xb)) / (2.0 * lb)
    if np.any(small):
        out[small] = _ds_series(lam[small], x[small])
    return out.reshape(shape)[()]
