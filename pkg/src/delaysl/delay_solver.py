"""Initial value solvers for -y'' + q(x) y(x - a) = lam y on (0, pi).

Two independent routes to the same solution:

* ``solve_direct``: method of steps with classical RK4.  The potential is
  zero below the delay, so the solution on [0, a] is a trigonometric
  kernel; past that the delayed argument always refers to already
  computed history.  The march stores values on a half-step grid so that
  every RK4 stage abscissa of the delayed term lands on a stored node,
  and it restarts at every breakpoint of q so that no step integrates
  across a jump.

* ``series_term`` / ``series_sum``: the solution as a finite sum of
  iterated integrals (the k-th term vanishes below k*a, so only a few
  terms survive on (0, pi)).  Each iterate reduces to two running
  integrals against the trigonometric kernels, which keeps the cost
  linear in the grid size.

Closed forms for the first and second iterates (``y1_closed``,
``y2_closed`` and their derivatives) are provided for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._backend import get_backend
from .errors import DomainError, PreconditionError
from .gridfn import (
    Interval,
    PiecewiseFunction,
    SampledSegment,
    cumulative,
    integrate,
    piecewise_quad,
    sample_function,
    simpson_rule,
)

__all__ = [
    "DelaySetup",
    "SolutionTrace",
    "grid_breakpoints",
    "solve_direct",
    "endpoint_values",
    "series_term",
    "series_sum",
    "y1_closed",
    "y1_closed_prime",
    "y2_closed",
    "y2_closed_prime",
    "p_kernel",
    "p_function",
]

PI = math.pi

# target cap for the RK4 step of the auto-sized march
_MAX_STEP = PI / 4096.0


@dataclass(frozen=True)
class DelaySetup:
    """Problem geometry: delay a, index nu, and grid resolution knobs.

    ``nu`` selects which member of the boundary-value pair the setup
    describes; initial-value routines take their own initial type where
    it differs.  ``segment_nodes`` is the per-segment sample count of all
    constructed traces; ``steps_per_delay`` forces the RK4 step count per
    delay length (0 picks the smallest compatible count with step below
    pi/4096).
    """

    a: float
    nu: int
    segment_nodes: int = 513
    steps_per_delay: int = 0

    def __post_init__(self):
        if not 0.0 < self.a < PI:
            raise DomainError(f"delay must lie in (0, pi), got {self.a}")
        if self.nu not in (0, 1):
            raise DomainError(f"nu must be 0 or 1, got {self.nu}")
        n = self.segment_nodes
        if n < 3 or n % 2 == 0:
            raise DomainError(f"segment_nodes must be odd and >= 3, got {n}")
        if self.steps_per_delay < 0:
            raise DomainError("steps_per_delay must be >= 0")

    @property
    def levels(self) -> int:
        """N with pi/(N+1) <= a < pi/N; the series has terms 0..N."""
        n = math.ceil(PI / self.a - 1e-12) - 1
        return max(n, 1)

    @property
    def steps(self) -> int:
        """Resolved RK4 steps per delay length: even, trace-compatible."""
        unit = self.segment_nodes - 1  # even
        want = self.steps_per_delay
        if want == 0:
            want = int(math.ceil(self.a / _MAX_STEP - 1e-12))
        return unit * int(math.ceil(want / unit - 1e-12))


@dataclass(frozen=True)
class SolutionTrace:
    """Solution and derivative on (0, pi) plus exact endpoint values."""

    y: PiecewiseFunction
    yprime: PiecewiseFunction
    y_end: complex
    yp_end: complex
    lam: complex
    setup: DelaySetup


def grid_breakpoints(a: float, lo: float, hi: float) -> np.ndarray:
    """Multiples of a/2 inside [lo, hi], with lo and hi themselves included.

    Every module builds its grids through this function so that shared
    breakpoints are bit-identical.
    """
    if not hi > lo:
        raise DomainError("empty range")
    half = 0.5 * a
    tol = 1e-9 * max(1.0, hi)
    pts = [lo]
    k = int(math.floor(lo / half)) + 1
    while k * half < hi - tol:
        if k * half > lo + tol:
            pts.append(k * half)
        k += 1
    pts.append(hi)
    return np.array(pts)


# ---------------------------------------------------------------------------
# the march


def _kernel_trace(nu: int, lam, x):
    """Kernel pair on [0, a]: (cos, -lam sin/rho) for nu=0, (sin/rho, cos) for nu=1."""
    lam = np.asarray(lam, dtype=complex)[:, None]
    x = np.asarray(x, dtype=float)[None, :]
    if nu == 0:
        y = kernels.ckernel(lam, x)
        yp = -lam * kernels.skernel(lam, x)
    else:
        y = kernels.skernel(lam, x)
        yp = kernels.ckernel(lam, x)
    return y, yp


def _check_support(q: PiecewiseFunction, a: float) -> None:
    probe = np.linspace(0.0, a, 257)[:-1]
    scale = max(1.0, float(np.max(np.abs(q.all_samples()))))
    if float(np.max(np.abs(q.values(probe)))) > 1e-12 * scale:
        raise PreconditionError("potential must vanish on (0, a)")


def _lagrange4(xi: float) -> np.ndarray:
    return np.array(
        [
            -(xi - 1.0) * (xi - 2.0) * (xi - 3.0) / 6.0,
            xi * (xi - 2.0) * (xi - 3.0) / 2.0,
            -xi * (xi - 1.0) * (xi - 3.0) / 2.0,
            xi * (xi - 1.0) * (xi - 2.0) / 6.0,
        ]
    )


class _March:
    """One method-of-steps integration for a batch of spectral points."""

    def __init__(self, q: PiecewiseFunction, setup: DelaySetup, init_nu: int, lam):
        if q.lo > 1e-12 or q.hi < PI - 1e-12:
            raise PreconditionError("potential must be sampled on all of (0, pi)")
        _check_support(q, setup.a)
        self.setup = setup
        self.q = q
        self.lam = np.asarray(lam, dtype=complex).ravel()
        a = setup.a
        m = setup.steps
        self.m = m
        self.h = a / m
        self.dx = 0.5 * self.h
        self.n_full = int(math.floor(PI / self.h + 1e-9))
        self.rem = PI - self.n_full * self.h
        if self.rem < 1e-9 * self.h:
            self.rem = 0.0
        n_nodes = 2 * self.n_full + 1
        self.x_half = self.dx * np.arange(n_nodes)
        nlam = self.lam.shape[0]
        self.Y = np.empty((nlam, n_nodes), dtype=complex)
        self.Yp = np.empty((nlam, n_nodes), dtype=complex)

        # potential on the half grid; left limits kept separately so no
        # stage ever reads the wrong side of a jump
        self.q_right = q.values(self.x_half)
        self.q_left = self.q_right.copy()
        for b, seg in zip(q.breakpoints(), q.segments[:-1]):
            i = int(round(b / self.dx))
            if 0 <= i < n_nodes and abs(i * self.dx - b) <= 1e-9 * max(1.0, b):
                self.q_left[i] = seg.samples[-1]

        self._run(init_nu)

    def _run_bounds(self) -> list[int]:
        """h-node indices of the run boundaries: a, q breakpoints, grid end."""
        idx = {self.m, self.n_full}
        for b in self.q.breakpoints():
            i = int(round(b / self.h))
            if self.m < i < self.n_full:
                idx.add(i)
        return sorted(idx)

    def _hist(self, x: float) -> np.ndarray:
        """History value at an off-grid point by one-sided-safe cubic interpolation."""
        u = x / self.dx
        c = int(math.floor(u))
        lo_b, hi_b = 0, self.Y.shape[1] - 1
        for b in self._piece_idx:
            if b <= c:
                lo_b = b
            if b >= c + 1:
                hi_b = b
                break
        if hi_b - lo_b >= 3:
            s = min(max(c - 1, lo_b), hi_b - 3)
        else:
            s = min(max(c - 1, 0), self.Y.shape[1] - 4)
        w = _lagrange4(u - s)
        return self.Y[:, s : s + 4] @ w

    def _half_step(self, x0: float, step: float, j_from: int, write_to: int | None):
        """One RK4 step of arbitrary size with interpolated history.

        Returns (y, yp) at x0 + step; writes them into column ``write_to``
        when given.  ``j_from`` is the half-grid column of x0.
        """
        a = self.setup.a
        lam = self.lam
        y = self.Y[:, j_from]
        p = self.Yp[:, j_from]
        xs = (x0, x0 + 0.5 * step, x0 + step)
        qv = self.q.values(np.array(xs))
        if j_from < len(self.q_right):
            qv[0] = self.q_right[j_from]
        hist = []
        for k, xk in enumerate(xs):
            t = xk - a
            u = t / self.dx
            i = int(round(u))
            if abs(u - i) < 1e-9 and i >= 0:
                hist.append(self.Y[:, i])
            elif t < 0.0:
                hist.append(np.zeros_like(y))
            else:
                hist.append(self._hist(t))
        f1 = qv[0] * hist[0]
        f2 = qv[1] * hist[1]
        f4 = qv[2] * hist[2]
        half = 0.5 * step
        k1y = p
        k1p = f1 - lam * y
        k2y = p + half * k1p
        k2p = f2 - lam * (y + half * k1y)
        k3y = p + half * k2p
        k3p = f2 - lam * (y + half * k2y)
        k4y = p + step * k3p
        k4p = f4 - lam * (y + step * k3y)
        ynew = y + (step / 6.0) * (k1y + 2.0 * (k2y + k3y) + k4y)
        pnew = p + (step / 6.0) * (k1p + 2.0 * (k2p + k3p) + k4p)
        if write_to is not None:
            self.Y[:, write_to] = ynew
            self.Yp[:, write_to] = pnew
        return ynew, pnew

    def _run(self, init_nu: int) -> None:
        m = self.m
        core = get_backend()
        # exact kernel fill on [0, a], both parities
        kz = 2 * m + 1
        self.Y[:, :kz], self.Yp[:, :kz] = _kernel_trace(init_nu, self.lam, self.x_half[:kz])
        bounds = self._run_bounds()
        self._piece_idx = [0] + [2 * b for b in bounds]
        for n_a, n_b in zip(bounds[:-1], bounds[1:]):
            steps = n_b - n_a
            # full-grid pass
            qa = self.q_right[2 * n_a : 2 * n_b : 2].copy()
            qb = self.q_right[2 * n_a + 1 : 2 * n_b : 2].copy()
            qc = self.q_left[2 * n_a + 2 : 2 * n_b + 2 : 2].copy()
            core.rk4_run(self.Y, self.Yp, self.lam, self.h, 2 * n_a, steps, 2 * m, qa, qb, qc)
            # launch the half-offset pass with one half step, then march it
            self._half_step(n_a * self.h, 0.5 * self.h, 2 * n_a, 2 * n_a + 1)
            if steps >= 2:
                qa = self.q_right[2 * n_a + 1 : 2 * n_b - 1 : 2].copy()
                qb = self.q_right[2 * n_a + 2 : 2 * n_b - 1 : 2].copy()
                qc = self.q_right[2 * n_a + 3 : 2 * n_b : 2].copy()
                core.rk4_run(
                    self.Y, self.Yp, self.lam, self.h, 2 * n_a + 1, steps - 1, 2 * m, qa, qb, qc
                )
        if self.rem > 0.0:
            self.y_end, self.yp_end = self._half_step(
                self.n_full * self.h, self.rem, 2 * self.n_full, None
            )
        else:
            self.y_end = self.Y[:, -1].copy()
            self.yp_end = self.Yp[:, -1].copy()

    def sample_at(self, x: float, row: np.ndarray) -> np.ndarray:
        """Interpolate one stored row (a single lam) at arbitrary x."""
        u = x / self.dx
        i = int(round(u))
        if abs(u - i) < 1e-9 and 0 <= i < row.shape[0]:
            return row[i]
        c = int(math.floor(u))
        s = min(max(c - 1, 0), row.shape[0] - 4)
        return row[s : s + 4] @ _lagrange4(u - s)

    def traces(self, batch_index: int) -> tuple[PiecewiseFunction, PiecewiseFunction]:
        setup = self.setup
        nseg = setup.segment_nodes
        bps = grid_breakpoints(setup.a, 0.0, PI)
        stride = setup.steps // (nseg - 1)
        rowy = self.Y[batch_index]
        rowp = self.Yp[batch_index]
        segs_y, segs_p = [], []
        half_len = 0.5 * setup.a
        for b0, b1 in zip(bps[:-1], bps[1:]):
            iv = Interval(float(b0), float(b1))
            i0 = int(round(b0 / self.dx))
            aligned = (
                abs(i0 * self.dx - b0) <= 1e-9
                and abs((b1 - b0) - half_len) <= 1e-9
                and i0 + stride * (nseg - 1) < rowy.shape[0] + 1
            )
            if aligned:
                sl = slice(i0, i0 + stride * (nseg - 1) + 1, stride)
                segs_y.append(SampledSegment(iv, rowy[sl]))
                segs_p.append(SampledSegment(iv, rowp[sl]))
            else:
                xs = np.linspace(iv.lo, iv.hi, nseg)
                vy = np.array([self.sample_at(x, rowy) for x in xs[:-1]])
                vp = np.array([self.sample_at(x, rowp) for x in xs[:-1]])
                if abs(iv.hi - PI) <= 1e-12:
                    vy = np.append(vy, self.y_end[batch_index])
                    vp = np.append(vp, self.yp_end[batch_index])
                else:
                    vy = np.append(vy, self.sample_at(iv.hi, rowy))
                    vp = np.append(vp, self.sample_at(iv.hi, rowp))
                segs_y.append(SampledSegment(iv, vy))
                segs_p.append(SampledSegment(iv, vp))
        return PiecewiseFunction(segs_y), PiecewiseFunction(segs_p)


def solve_direct(q: PiecewiseFunction, setup: DelaySetup, lam: complex) -> SolutionTrace:
    """Integrate the initial value problem with initial type setup.nu.

    nu = 0 starts from (y, y') = (1, 0); nu = 1 from (0, 1).
    """
    march = _March(q, setup, setup.nu, [lam])
    y, yp = march.traces(0)
    return SolutionTrace(
        y, yp, complex(march.y_end[0]), complex(march.yp_end[0]), complex(lam), setup
    )


def endpoint_values(q: PiecewiseFunction, setup: DelaySetup, init_nu: int, lam):
    """Batched (y(pi), y'(pi)) for an array of spectral points."""
    lam = np.asarray(lam, dtype=complex)
    march = _March(q, setup, init_nu, lam.ravel())
    return march.y_end.reshape(lam.shape), march.yp_end.reshape(lam.shape)


# ---------------------------------------------------------------------------
# successive approximation terms


def _standard_zero(setup: DelaySetup) -> PiecewiseFunction:
    bps = grid_breakpoints(setup.a, 0.0, PI)
    return sample_function(lambda x: np.zeros_like(x, dtype=complex), bps, setup.segment_nodes)


def _resample_sided(q: PiecewiseFunction, structure: PiecewiseFunction) -> PiecewiseFunction:
    """Resample q on another function's grid keeping one-sided endpoint values."""
    segs = []
    for seg in structure.segments:
        x = seg.nodes()
        vals = q.values(x)
        # the right endpoint of a segment belongs to this segment's side
        owner = None
        for qs in q.segments:
            if qs.interval.lo < x[-1] <= qs.interval.hi + 1e-12:
                owner = qs
        if owner is not None:
            vals[-1] = owner.values(np.array([x[-1]]))[0]
        segs.append(SampledSegment(seg.interval, vals))
    return PiecewiseFunction(segs)


def _trace_from_parts(setup, lam, y_fn, yp_fn) -> SolutionTrace:
    return SolutionTrace(
        y_fn, yp_fn, complex(y_fn.values(PI)), complex(yp_fn.values(PI)), complex(lam), setup
    )


def series_term(q: PiecewiseFunction, setup: DelaySetup, k: int, lam: complex) -> SolutionTrace:
    """k-th term of the successive-approximation series, as a trace.

    Term 0 is the trigonometric kernel; term k vanishes on [0, k a] and
    is identically zero on (0, pi) for k > levels.
    """
    if k < 0:
        raise DomainError("term index must be >= 0")
    term = None
    for j in range(k + 1):
        term = _next_series_term(q, setup, j, lam, term)
    return term


def series_sum(
    q: PiecewiseFunction, setup: DelaySetup, lam: complex, n_terms: int | None = None
) -> SolutionTrace:
    """Sum of the series through term ``n_terms`` (default: all that survive)."""
    if n_terms is None:
        n_terms = setup.levels
    total = None
    term = None
    for j in range(n_terms + 1):
        term = _next_series_term(q, setup, j, lam, term)
        if total is None:
            total = term
        else:
            total = SolutionTrace(
                total.y + term.y,
                total.yprime + term.yprime,
                total.y_end + term.y_end,
                total.yp_end + term.yp_end,
                complex(lam),
                setup,
            )
    return total


def _next_series_term(q, setup, k, lam, prev: SolutionTrace | None) -> SolutionTrace:
    a = setup.a
    if k == 0:
        zero = _standard_zero(setup)
        segs_y, segs_p = [], []
        for seg in zero.segments:
            x = seg.nodes()
            y, yp = _kernel_trace(setup.nu, [lam], x)
            segs_y.append(SampledSegment(seg.interval, y[0]))
            segs_p.append(SampledSegment(seg.interval, yp[0]))
        return _trace_from_parts(setup, lam, PiecewiseFunction(segs_y), PiecewiseFunction(segs_p))
    if k * a >= PI - 1e-12:
        z = _standard_zero(setup)
        return _trace_from_parts(setup, lam, z, z)

    # g(t) = q(t) * y_{k-1}(t - a), zero below k a by support of the previous term
    structure = _standard_zero(setup)
    qs = _resample_sided(q, structure)
    gc_segs, gs_segs = [], []
    for seg, qseg in zip(structure.segments, qs.segments):
        x = seg.nodes()
        g = np.zeros(x.shape, dtype=complex)
        live = x >= a - 1e-12
        if np.any(live):
            shifted = np.clip(x[live] - a, 0.0, PI)
            g[live] = qseg.samples[live] * prev.y.values(shifted)
        gc_segs.append(SampledSegment(seg.interval, g * kernels.ckernel(lam, x)))
        gs_segs.append(SampledSegment(seg.interval, g * kernels.skernel(lam, x)))
    anchor = min(k * a, PI)
    pc = cumulative(PiecewiseFunction(gc_segs), anchor)
    ps = cumulative(PiecewiseFunction(gs_segs), anchor)

    segs_y, segs_p = [], []
    for seg_pc, seg_ps in zip(pc.segments, ps.segments):
        x = seg_pc.nodes()
        c = kernels.ckernel(lam, x)
        s = kernels.skernel(lam, x)
        live = x >= anchor - 1e-12
        y = np.where(live, s * seg_pc.samples - c * seg_ps.samples, 0.0)
        yp = np.where(live, c * seg_pc.samples + lam * s * seg_ps.samples, 0.0)
        segs_y.append(SampledSegment(seg_pc.interval, y))
        segs_p.append(SampledSegment(seg_pc.interval, yp))
    return _trace_from_parts(setup, lam, PiecewiseFunction(segs_y), PiecewiseFunction(segs_p))


# ---------------------------------------------------------------------------
# closed forms for the first two terms


def _first_term_parts(q, setup, lam):
    """Running integrals of q(t) ckernel(lam, 2t) and q(t) skernel(lam, 2t) from a."""
    structure = _standard_zero(setup)
    qs = _resample_sided(q, structure)
    c_segs, s_segs = [], []
    for seg, qseg in zip(structure.segments, qs.segments):
        x = seg.nodes()
        c_segs.append(SampledSegment(seg.interval, qseg.samples * kernels.ckernel(lam, 2.0 * x)))
        s_segs.append(SampledSegment(seg.interval, qseg.samples * kernels.skernel(lam, 2.0 * x)))
    a = setup.a
    return (
        cumulative(PiecewiseFunction(c_segs), a),
        cumulative(PiecewiseFunction(s_segs), a),
        cumulative(qs, a),
    )


def y1_closed(q: PiecewiseFunction, setup: DelaySetup, lam: complex) -> SolutionTrace:
    """First series term in closed form (trace on the standard grid).

    For nu = 1 the formula carries a removable 1/lam; near lam = 0 the
    quadrature recursion is used instead.
    """
    nu = setup.nu
    if nu == 1 and abs(lam) < 1e-3:
        return series_term(q, setup, 1, lam)
    a = setup.a
    qc, qms, om = _first_term_parts(q, setup, lam)
    segs_y, segs_p = [], []
    for seg_c, seg_s, seg_o in zip(qc.segments, qms.segments, om.segments):
        x = seg_c.nodes()
        live = x >= a - 1e-12
        ca = kernels.ckernel(lam, x + a)
        sa = kernels.skernel(lam, x + a)
        if nu == 0:
            # integral of q(t) S(x - 2t + a): S(x+a) qC - C(x+a) qS
            intval = sa * seg_c.samples - ca * seg_s.samples
            bnd = 0.5 * seg_o.samples * kernels.skernel(lam, x - a)
            y = bnd + 0.5 * intval
        else:
            intval = ca * seg_c.samples + lam * sa * seg_s.samples
            bnd = -0.5 / lam * seg_o.samples * kernels.ckernel(lam, x - a)
            y = bnd + 0.5 / lam * intval
        segs_y.append(SampledSegment(seg_c.interval, np.where(live, y, 0.0)))
    yfn = PiecewiseFunction(segs_y)
    pfn = y1_closed_prime(q, setup, lam)
    return _trace_from_parts(setup, lam, yfn, pfn)


def y1_closed_prime(q: PiecewiseFunction, setup: DelaySetup, lam: complex) -> PiecewiseFunction:
    """x-derivative of the first series term, in closed form (no 1/lam)."""
    nu = setup.nu
    a = setup.a
    qc, qs, om = _first_term_parts(q, setup, lam)
    segs = []
    sign = -1.0 if nu else 1.0
    for seg_c, seg_s, seg_o in zip(qc.segments, qs.segments, om.segments):
        x = seg_c.nodes()
        live = x >= a - 1e-12
        ca = kernels.ckernel(lam, x + a)
        sa = kernels.skernel(lam, x + a)
        if nu == 0:
            intval = ca * seg_c.samples + lam * sa * seg_s.samples
            bnd = 0.5 * seg_o.samples * kernels.ckernel(lam, x - a)
        else:
            intval = sa * seg_c.samples - ca * seg_s.samples
            bnd = 0.5 * seg_o.samples * kernels.skernel(lam, x - a)
        segs.append(SampledSegment(seg_c.interval, np.where(live, bnd + sign * 0.5 * intval, 0.0)))
    return PiecewiseFunction(segs)


# ---------------------------------------------------------------------------
# second term: pointwise closed form through the triangle kernel


def _omega(q: PiecewiseFunction, a: float) -> PiecewiseFunction:
    return cumulative(q, a)


def _kinks(q, shifts, reflects, lo: float, hi: float) -> np.ndarray:
    """Images of q's breakpoints under t = b + s and t = r - b, clipped to (lo, hi)."""
    pts = [lo, hi]
    for b in q.breakpoints():
        for s in shifts:
            if lo + 1e-12 < b + s < hi - 1e-12:
                pts.append(b + s)
        for r in reflects:
            if lo + 1e-12 < r - b < hi - 1e-12:
                pts.append(r - b)
    pts = np.unique(np.array(pts))
    return pts[np.append(np.diff(pts) > 1e-9, True)]


def _p_values(q, setup, om, x: float, ts: np.ndarray) -> np.ndarray:
    """Triangle kernel values P(x, t) for one x and many t.

    Each t costs one kink-aware quadrature; callers that need P densely
    should go through ``p_function`` and interpolate.
    """
    a = setup.a
    sign = -1.0 if setup.nu else 1.0
    omx = om.values(x)
    out = (omx - om.values(ts + 0.5 * a)) * om.values(ts - 0.5 * a)
    step = a / 2048.0
    for i, t in enumerate(ts):
        hi = x - t + 0.5 * a
        if hi <= a + 1e-14:
            continue
        xs, ws, qv = piecewise_quad(q, _kinks(q, [0.0, 0.5 * a - t], [], a, hi), step)
        vals = qv * (omx - om.values(xs + (t - 0.5 * a)))
        out[i] = out[i] + sign * np.dot(ws, vals)
    return out


def p_kernel(q: PiecewiseFunction, setup: DelaySetup, x: float, t: float) -> complex:
    """Triangle kernel of the second series term, at one (x, t).

    Defined for 3a/2 <= t <= x - a/2 with x <= pi; identically zero on
    the upper edge t = x - a/2.
    """
    a = setup.a
    if not (1.5 * a - 1e-12 <= t <= x - 0.5 * a + 1e-12) or x > PI + 1e-12:
        raise DomainError(f"(x, t) = ({x}, {t}) outside the kernel triangle")
    om = _omega(q, a)
    return complex(_p_values(q, setup, om, x, np.array([t]))[0])


def p_function(q: PiecewiseFunction, setup: DelaySetup, x: float) -> PiecewiseFunction | None:
    """P(x, .) sampled as a function of t on [3a/2, x - a/2].

    Returns None when the range is empty (x <= 2a).  Building this once
    per x and passing it to ``y2_closed`` amortizes the kernel quadratures
    over many spectral points.
    """
    a = setup.a
    lo, hi = 1.5 * a, x - 0.5 * a
    if hi <= lo + 1e-9:
        return None
    om = _omega(q, a)
    pieces = _kinks(q, [0.5 * a, -0.5 * a], [x + 0.5 * a], lo, hi)
    segs = []
    for plo, phi in zip(pieces[:-1], pieces[1:]):
        iv = Interval(float(plo), float(phi))
        ts = np.linspace(iv.lo, iv.hi, 1025)
        segs.append(SampledSegment(iv, _p_values(q, setup, om, x, ts)))
    return PiecewiseFunction(segs)


def _second_term_quad(setup, lam, x, pfn, kernel_kind: str) -> complex:
    """Integral of P(x, t) K(lam, x - 2t + a) dt over the kernel triangle."""
    rho = math.sqrt(abs(lam))
    # resolve both the kernel oscillation (frequency 2 rho in t) and the
    # kernel-free variation already captured by the sampled P
    step = min(setup.a / 1024.0, 0.0126 / (25.0 + 2.0 * rho))
    bps = np.concatenate([[pfn.lo], pfn.breakpoints(), [pfn.hi]])
    ts, ws = simpson_rule(bps, step)
    pv = pfn.values(ts)
    if kernel_kind == "s":
        kv = kernels.skernel(lam, x - 2.0 * ts + setup.a)
    else:
        kv = kernels.ckernel(lam, x - 2.0 * ts + setup.a)
    return complex(np.dot(ws, pv * kv))


def y2_closed(
    q: PiecewiseFunction,
    setup: DelaySetup,
    lam: complex,
    x: float,
    pfn: PiecewiseFunction | None = None,
) -> complex:
    """Second series term at one point, 2a <= x <= pi.

    nu = 1 near lam = 0 falls back to the quadrature recursion (the
    closed form carries a removable 1/lam there).  ``pfn`` may supply a
    precomputed ``p_function(q, setup, x)``.
    """
    nu = setup.nu
    a = setup.a
    if not 2.0 * a - 1e-12 <= x <= PI + 1e-12:
        raise DomainError(f"x = {x} outside [2a, pi]")
    if nu == 1 and abs(lam) < 1e-3:
        return complex(series_term(q, setup, 2, lam).y.values(min(x, PI)))
    if pfn is None:
        pfn = p_function(q, setup, x)
    if pfn is None:
        return 0.0 + 0.0j
    if nu == 0:
        return complex(0.5 * _second_term_quad(setup, lam, x, pfn, "s"))
    return complex(0.5 / lam * _second_term_quad(setup, lam, x, pfn, "c"))


def y2_closed_prime(
    q: PiecewiseFunction,
    setup: DelaySetup,
    lam: complex,
    x: float,
    pfn: PiecewiseFunction | None = None,
) -> complex:
    """x-derivative of the second series term at one point (no 1/lam)."""
    nu = setup.nu
    a = setup.a
    if not 2.0 * a - 1e-12 <= x <= PI + 1e-12:
        raise DomainError(f"x = {x} outside [2a, pi]")
    if pfn is None:
        pfn = p_function(q, setup, x)
    if pfn is None:
        return 0.0 + 0.0j
    sign = -1.0 if nu else 1.0
    kind = "c" if nu == 0 else "s"
    return complex(sign * 0.5 * _second_term_quad(setup, lam, x, pfn, kind))
