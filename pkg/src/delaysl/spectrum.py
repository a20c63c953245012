"""Spectra as certified root sets of characteristic functions.

A spectrum here is the ordered list of the first n_max zeros of an
entire function, each polished by Newton iteration and the whole set
certified by an argument-principle count around a rectangle: if the
winding number does not match the number of roots found, a fallback
search either closes the gap or the computation refuses to report.
The characteristic function only enters through an evaluation callable
accepting arrays of complex points, so the closed-form and the
direct-integration routes plug in interchangeably.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContourError,
    DomainError,
    IncompleteSpectrumError,
    PreconditionError,
    RefinementError,
)

__all__ = [
    "SpectrumEntry",
    "Spectrum",
    "initial_guesses",
    "refine_root",
    "count_roots",
    "compute_spectrum",
    "compare",
]

_TWO_PI = 2.0 * np.pi
_RE_TIE = 1e-7


@dataclass(frozen=True)
class SpectrumEntry:
    """One eigenvalue: 1-based index, location, and |Delta| there."""

    n: int
    lam: complex
    residual: float


@dataclass(frozen=True)
class Spectrum:
    """Certified root list inside Re <= window, |Im| <= im_window.

    Entries are ordered by (Re, Im) with real parts compared to a small
    relative tolerance: the two members of a conjugate pair agree in Re
    only to rounding, and an exact lexicographic sort would order such a
    pair differently from run to run.
    """

    entries: tuple
    window: float
    im_window: float
    certified_count: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != self.certified_count:
            raise DomainError(
                f"{len(self.entries)} entries but certified count {self.certified_count}"
            )
        for k, entry in enumerate(self.entries):
            if entry.n != k + 1:
                raise DomainError("entry indices must run 1, 2, ...")
            if entry.residual > 1e-8 * (1.0 + abs(entry.lam)):
                raise DomainError(
                    f"entry {entry.n} residual {entry.residual:.3e} too large"
                )
        keys = [(e.lam.real, e.lam.imag) for e in self.entries]
        for (r0, i0), (r1, i1) in zip(keys, keys[1:]):
            tie = _RE_TIE * (1.0 + abs(r0))
            if r1 < r0 - tie or (r1 - r0 <= tie and i1 < i0):
                raise DomainError("entries must be sorted by (Re, Im)")

    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=complex)

    def to_csv(self) -> str:
        lines = ["n,re_lambda,im_lambda,residual"]
        for e in self.entries:
            lines.append(
                f"{e.n},{e.lam.real:.17g},{e.lam.imag:.17g},{e.residual:.17g}"
            )
        return "\n".join(lines) + "\n"


def initial_guesses(nu: int, j: int, count: int):
    """Leading-order eigenvalue locations for the (nu, j) problem.

    The characteristic function is dominated by sin(rho pi)/rho when
    j = nu and by cos(rho pi) otherwise, so the seeds are n^2 and
    (n - 1/2)^2.
    """
    if nu not in (0, 1) or j not in (0, 1):
        raise PreconditionError("nu and j must each be 0 or 1")
    if count < 1:
        raise PreconditionError(f"need count >= 1, got {count}")
    if nu == j:
        return [complex(n * n) for n in range(1, count + 1)]
    return [complex((n - 0.5) ** 2) for n in range(1, count + 1)]


def _refine_many(delta, guesses, tol, max_iter: int = 50):
    """Newton-polish a batch of guesses through batched evaluations.

    Returns (roots, converged) with one slot per guess.  The derivative
    is a central difference with step 1e-6 * (1 + |guess|); a guess has
    converged when both |Delta| and the last Newton step are below
    tol * (1 + |lambda|).
    """
    lam = np.asarray(guesses, dtype=complex).copy()
    m = lam.size
    h = 1e-6 * (1.0 + np.abs(lam))
    last_step = np.zeros(m)
    done = np.zeros(m, dtype=bool)
    dead = np.zeros(m, dtype=bool)
    for _ in range(max_iter):
        live = ~(done | dead)
        if not live.any():
            break
        zl = lam[live]
        hl = h[live]
        vals = np.asarray(delta(np.concatenate([zl, zl + hl, zl - hl])), dtype=complex)
        k = zl.size
        f, fp, fm = vals[:k], vals[k : 2 * k], vals[2 * k :]
        scale = tol * (1.0 + np.abs(zl))
        ok = (np.abs(f) <= scale) & (last_step[live] <= scale)
        deriv = (fp - fm) / (2.0 * hl)
        flat = (deriv == 0.0) & ~ok
        step = np.where(ok | flat, 0.0, f / np.where(deriv == 0.0, 1.0, deriv))
        lam[live] = zl - step
        last_step[live] = np.abs(step)
        idx = np.flatnonzero(live)
        done[idx[ok]] = True
        dead[idx[flat]] = True
    return lam, done


def refine_root(delta, lam0: complex, tol: float = 1e-10) -> complex:
    """Polish one root by Newton iteration with difference derivatives.

    Converged means |Delta(lam)| <= tol * (1 + |lam|) and the final
    step at most the same bound, within 50 iterations; otherwise a
    refinement error carries the last iterate for inspection.
    """
    lam0 = complex(lam0)
    if not np.isfinite(lam0.real) or not np.isfinite(lam0.imag):
        raise DomainError(f"starting point must be finite, got {lam0}")
    roots, ok = _refine_many(delta, [lam0], tol)
    lam = complex(roots[0])
    if not ok[0]:
        raise RefinementError(
            f"no convergence from {lam0} after 50 iterations",
            last=lam,
            last_value=complex(np.asarray(delta(np.array([lam])), dtype=complex)[0]),
        )
    return lam


class _ContourTooClose(Exception):
    """Internal: a contour sample sits within root tolerance of zero."""


def _eval_contour(delta, z):
    v = np.asarray(delta(z), dtype=complex)
    if np.any(np.abs(v) <= 1e-8 * (1.0 + np.abs(z))):
        raise _ContourTooClose
    return v


def _winding(delta, lo: complex, hi: complex, budget: int = 20000) -> int:
    corners = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
    pieces = []
    for c0, c1 in zip(corners, corners[1:] + corners[:1]):
        count = 129 if c0.imag == c1.imag else 33
        pieces.append(c0 + (c1 - c0) * np.linspace(0.0, 1.0, count)[:-1])
    z = np.concatenate(pieces + [np.array([lo])])
    v = _eval_contour(delta, z)
    while True:
        dphi = np.angle(v[1:] / v[:-1])
        bad = np.flatnonzero(np.abs(dphi) >= 0.5 * np.pi)
        if bad.size == 0:
            break
        if z.size + bad.size > budget:
            raise ContourError("contour sampling budget exhausted")
        mids = 0.5 * (z[bad] + z[bad + 1])
        mv = _eval_contour(delta, mids)
        z = np.insert(z, bad + 1, mids)
        v = np.insert(v, bad + 1, mv)
    total = float(np.sum(np.angle(v[1:] / v[:-1])))
    turns = total / _TWO_PI
    k = int(np.rint(turns))
    if abs(turns - k) > 0.25:
        raise ContourError(f"accumulated phase {turns:.3f} turns is not an integer")
    return k


def count_roots(delta, rectangle) -> int:
    """Roots (with multiplicity) inside a rectangle, by winding number.

    ``rectangle`` is a (lower-left, upper-right) pair of complex
    corners.  Contour samples too close to a zero of Delta force a 1%
    dilation about the center, up to five times, after which a contour
    error is raised.  The phase is accumulated over an adaptively
    refined sampling where every increment stays below pi/2.
    """
    lo, hi = complex(rectangle[0]), complex(rectangle[1])
    if not (hi.real > lo.real and hi.imag > lo.imag):
        raise DomainError("rectangle corners must be ordered lower-left, upper-right")
    center = 0.5 * (lo + hi)
    for _ in range(6):
        try:
            return _winding(delta, lo, hi)
        except _ContourTooClose:
            lo = center + (lo - center) * 1.01
            hi = center + (hi - center) * 1.01
    raise ContourError("a root stayed on the contour through five dilations")


def _root_order(roots):
    """(Re, Im) order with real parts compared to a relative tolerance.

    Roots whose real parts agree to within the tolerance form one group
    ordered by imaginary part, so a conjugate pair keeps a stable order
    no matter which member's Re came out a few ulps smaller.
    """
    roots = sorted(roots, key=lambda lam: lam.real)
    out = []
    i = 0
    while i < len(roots):
        k = i + 1
        while (
            k < len(roots)
            and roots[k].real - roots[k - 1].real <= _RE_TIE * (1.0 + abs(roots[k].real))
        ):
            k += 1
        out.extend(sorted(roots[i:k], key=lambda lam: lam.imag))
        i = k
    return out


def _dedupe(roots):
    """Cluster near-identical roots; returns (representatives, sizes)."""
    reps = []
    sizes = []
    for lam in roots:
        for i, rep in enumerate(reps):
            if abs(lam - rep) < 1e-6 * (1.0 + abs(rep)):
                sizes[i] += 1
                break
        else:
            reps.append(lam)
            sizes.append(1)
    return reps, sizes


def _dips(mag: np.ndarray) -> np.ndarray:
    """Indices of interior local minima of a sampled magnitude."""
    return np.flatnonzero((mag[1:-1] <= mag[:-2]) & (mag[1:-1] <= mag[2:])) + 1


def _secondary_candidates(delta, re_lo, re_hi, im_window):
    """Fallback starting points: a real sweep plus a coarse complex mesh.

    The real axis contributes midpoints of sign changes of Re Delta and
    local minima of |Delta|; each mesh row contributes its |Delta| dips.
    Off-axis rows matter because Newton from a real seed of a function
    real on the real axis can never leave the axis, and these problems
    are not self-adjoint, so conjugate root pairs do occur.  Evaluating
    first and polishing only the dips keeps the fallback much cheaper
    than polishing the whole mesh.
    """
    cands = []
    xs = np.linspace(re_lo, re_hi, 513)
    vals = np.asarray(delta(xs.astype(complex)), dtype=complex)
    flips = np.flatnonzero(np.signbit(vals.real[:-1]) != np.signbit(vals.real[1:]))
    cands.extend(complex(0.5 * (xs[i] + xs[i + 1])) for i in flips)
    cands.extend(complex(xs[i]) for i in _dips(np.abs(vals)))
    for frac in (0.05, 0.15, 0.3, 0.6):
        for sign in (1.0, -1.0):
            zs = np.linspace(re_lo, re_hi, 129) + 1j * (sign * frac * im_window)
            mag = np.abs(np.asarray(delta(zs), dtype=complex))
            cands.extend(complex(zs[i]) for i in _dips(mag))
    return cands


def compute_spectrum(
    delta,
    nu: int,
    j: int,
    n_max: int,
    tol: float = 1e-10,
    im_window: float = 10.0,
) -> Spectrum:
    """The first n_max eigenvalues, winding-certified.

    Refines every initial guess, deduplicates, then counts roots inside
    the rectangle [left margin, midpoint beyond guess n_max] x
    [-im_window, im_window].  A count exceeding the roots in hand
    triggers a secondary search (sign changes of Re Delta on the real
    axis, then a coarse complex mesh); a persistent mismatch raises an
    incompleteness error rather than returning a spectrum with holes.
    """
    if n_max < 1:
        raise PreconditionError(f"need n_max >= 1, got {n_max}")
    guesses = initial_guesses(nu, j, n_max + 1)
    above = guesses[n_max].real
    last = guesses[n_max - 1].real
    first = guesses[0].real
    second = guesses[1].real if n_max > 1 else above
    re_hi = 0.5 * (last + above)
    # The margin below the first seed is a fixed number, not a fraction
    # of the first gap: the low eigenvalues shift by an amount of order
    # one (set by the potential's mean) that does not scale with the
    # seed spacing.
    re_lo = first - max(1.5 * (second - first), 5.0)

    roots, ok = _refine_many(delta, guesses[:n_max], tol)
    polished = [complex(r) for r, good in zip(roots, ok) if good]

    # Certify against the window, extending its floor if a root sits
    # close to it: a root hugging the boundary suggests the true lowest
    # eigenvalue may lie below.
    for _ in range(3):
        kept = [
            r
            for r in polished
            if re_lo < r.real < re_hi and abs(r.imag) < im_window
        ]
        reps, sizes = _dedupe(kept)
        rect = (complex(re_lo, -im_window), complex(re_hi, im_window))
        certified = count_roots(delta, rect)
        if certified > len(reps):
            seeds = _secondary_candidates(delta, re_lo, re_hi, im_window)
            found, good = _refine_many(delta, seeds, tol, max_iter=24)
            for r, g in zip(found, good):
                r = complex(r)
                if not (g and re_lo < r.real < re_hi and abs(r.imag) < im_window):
                    continue
                if all(abs(r - rep) >= 1e-6 * (1.0 + abs(rep)) for rep in reps):
                    reps.append(r)
                    sizes.append(1)
                    polished.append(r)
        if reps and min(r.real for r in reps) < re_lo + 1.0:
            re_lo -= 5.0
            continue
        break

    listed = list(reps)
    multi = [rep for rep, s in zip(reps, sizes) if s > 1]
    if multi and certified == len(listed) + len(multi):
        # guesses that collapsed onto one point mark double roots
        listed.extend(multi)
    if certified != len(listed):
        raise IncompleteSpectrumError(
            f"winding count {certified} vs {len(listed)} located roots in "
            f"[{re_lo:.3f}, {re_hi:.3f}] x [-{im_window}, {im_window}]i"
        )

    listed = _root_order(listed)
    resid = np.abs(np.asarray(delta(np.array(listed, dtype=complex)), dtype=complex))
    entries = tuple(
        SpectrumEntry(n=k + 1, lam=lam, residual=float(r))
        for k, (lam, r) in enumerate(zip(listed, resid))
    )
    return Spectrum(
        entries=entries,
        window=re_hi,
        im_window=im_window,
        certified_count=certified,
    )


def compare(s1: Spectrum, s2: Spectrum) -> float:
    """Largest relative gap between two spectra, matched by sort order."""
    if len(s1.entries) != len(s2.entries):
        raise PreconditionError(
            f"entry counts differ: {len(s1.entries)} vs {len(s2.entries)}"
        )
    worst = 0.0
    for e1, e2 in zip(s1.entries, s2.entries):
        worst = max(worst, abs(e1.lam - e2.lam) / (1.0 + abs(e1.lam)))
    return worst
