"""Piecewise sampled functions on uniform grids.

Everything downstream (potentials, solution traces, weight functions)
lives on the same substrate: a function is a list of abutting segments,
each sampled on a uniform grid that includes both endpoints.  Values at
interior breakpoints are intentionally double-stored, one sample per
side, so jump discontinuities survive serialization and evaluation
picks a well-defined one-sided value.

Conventions:

* segment sample counts are odd and at least 3;
* evaluation at an interior breakpoint returns the right segment's value;
* evaluation between nodes is 4-point (cubic) Lagrange interpolation and
  never reaches across a breakpoint; a minimal 3-node segment carries
  the single quadratic through its samples instead;
* integration is a composite interpolatory rule, exact for the cubic
  interpolant on every cell, so splitting a range at an arbitrary point
  changes the result only by float reassociation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridMismatchError

__all__ = [
    "Interval",
    "SampledSegment",
    "PiecewiseFunction",
    "integrate",
    "cumulative",
    "sample_function",
    "simpson_rule",
    "piecewise_quad",
    "assemble_segments",
    "write_csv",
    "read_csv",
]

_NODE_SNAP = 1e-9  # in units of one grid spacing


def _cell_matrices():
    """Monomial conversion and quadrature tables for the three stencil types.

    A cell [x_j, x_j+1] borrows a 4-node stencil starting ``base`` nodes
    to its left (base = 0 first cell, 1 interior, 2 last cell).  In cell
    coordinates xi in [0, 1] the stencil nodes sit at xi = -base ... 3-base.
    """
    inv = {}
    full = {}
    for base in (0, 1, 2):
        pts = np.arange(4, dtype=float) - base
        v = np.vander(pts, 4, increasing=True)
        vinv = np.linalg.inv(v)
        inv[base] = vinv
        full[base] = np.array([1.0, 0.5, 1.0 / 3.0, 0.25]) @ vinv
    return inv, full


_VINV, _FULL_W = _cell_matrices()

# A 3-node segment cannot host a 4-point stencil; it carries one
# quadratic through all three samples instead (exact for constants and
# the degenerate filler segments that use this size).
_VINV3 = np.linalg.inv(np.vander(np.arange(3, dtype=float), 3, increasing=True))


def _partial_weights3(xa, xb):
    powa = np.array([xa, xa**2 / 2.0, xa**3 / 3.0])
    powb = np.array([xb, xb**2 / 2.0, xb**3 / 3.0])
    return (powb - powa) @ _VINV3


def _partial_weights(base, xa, xb):
    """Stencil weights for the exact integral of the cell cubic over [xa, xb]."""
    powa = np.array([xa, xa**2 / 2.0, xa**3 / 3.0, xa**4 / 4.0])
    powb = np.array([xb, xb**2 / 2.0, xb**3 / 3.0, xb**4 / 4.0])
    return (powb - powa) @ _VINV[base]


def _stencil(cell, count):
    """(start index, stencil type) for a cell index on a count-node grid."""
    if cell <= 0:
        return 0, 0
    if cell >= count - 2:
        return count - 4, 2
    return cell - 1, 1


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with positive length."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise DomainError("interval endpoints must be finite")
        if not self.hi > self.lo:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x, *, slack=0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack


class SampledSegment:
    """One uniform-grid segment: odd sample count >= 3, endpoints included."""

    __slots__ = ("interval", "samples", "spacing")

    def __init__(self, interval: Interval, samples):
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 1:
            raise DomainError("segment samples must be one-dimensional")
        n = samples.shape[0]
        if n < 3 or n % 2 == 0:
            raise DomainError(f"segment sample count must be odd and >= 3, got {n}")
        self.interval = interval
        self.samples = samples
        self.samples.flags.writeable = False
        self.spacing = interval.length / (n - 1)

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    def nodes(self) -> np.ndarray:
        return self.interval.lo + self.spacing * np.arange(self.count)

    def values(self, x) -> np.ndarray:
        """Cubic Lagrange interpolation; exact at nodes, one segment only."""
        x = np.asarray(x, dtype=float)
        n = self.count
        u = (x - self.interval.lo) / self.spacing
        if n == 3:
            out = (
                self.samples[0] * ((u - 1.0) * (u - 2.0) / 2.0)
                + self.samples[1] * (-u * (u - 2.0))
                + self.samples[2] * (u * (u - 1.0) / 2.0)
            )
        else:
            cell = np.clip(np.floor(u).astype(int), 0, n - 2)
            j0 = np.clip(cell - 1, 0, n - 4)
            xi = u - j0
            out = (
                self.samples[j0] * (-(xi - 1.0) * (xi - 2.0) * (xi - 3.0) / 6.0)
                + self.samples[j0 + 1] * (xi * (xi - 2.0) * (xi - 3.0) / 2.0)
                + self.samples[j0 + 2] * (-xi * (xi - 1.0) * (xi - 3.0) / 2.0)
                + self.samples[j0 + 3] * (xi * (xi - 1.0) * (xi - 2.0) / 6.0)
            )
        # snap to stored samples where x falls on a node
        k = np.rint(u).astype(int)
        on_node = (np.abs(u - k) <= _NODE_SNAP * (1.0 + np.abs(u))) & (k >= 0) & (k < n)
        if np.any(on_node):
            out = np.where(on_node, self.samples[np.clip(k, 0, n - 1)], out)
        return out

    def integrate_range(self, u, v) -> complex:
        """Exact integral of the per-cell cubic interpolant over [u, v]."""
        lo = self.interval.lo
        h = self.spacing
        n = self.count
        ua = (u - lo) / h
        ub = (v - lo) / h
        if n == 3:
            return complex(np.dot(_partial_weights3(ua, ub), self.samples)) * h
        ca = min(max(int(np.floor(ua)), 0), n - 2)
        kb = int(np.floor(ub))
        if ub - kb <= _NODE_SNAP:
            kb -= 1  # v sits on a node: the cell above it contributes nothing
        cb = min(max(kb, ca), n - 2)
        total = 0.0 + 0.0j
        w = np.zeros(n)
        for cell in (ca, cb) if cb > ca else (ca,):
            st, base = _stencil(cell, n)
            xa = max(ua - cell, 0.0) if cell == ca else 0.0
            xb = min(ub - cell, 1.0) if cell == cb else 1.0
            w[st : st + 4] += _partial_weights(base, xa, xb)
        # full interior cells
        first = ca + 1
        last = cb - 1
        if last >= first:
            cells = np.arange(first, last + 1)
            inner = cells[(cells >= 1) & (cells <= n - 3)]
            for off, cw in zip(range(4), _FULL_W[1]):
                np.add.at(w, inner - 1 + off, cw)
            for cell in cells[(cells < 1) | (cells > n - 3)]:
                st, base = _stencil(cell, n)
                w[st : st + 4] += _FULL_W[base]
        total += np.dot(w, self.samples)
        return total * h

    def cell_integrals(self) -> np.ndarray:
        """Integral of the interpolant over each of the count-1 cells."""
        s = self.samples
        n = self.count
        if n == 3:
            return (
                np.array([_partial_weights3(0.0, 1.0) @ s, _partial_weights3(1.0, 2.0) @ s])
                * self.spacing
            )
        out = np.empty(n - 1, dtype=complex)
        out[0] = _FULL_W[0] @ s[:4]
        out[-1] = _FULL_W[2] @ s[-4:]
        if n > 3:
            w = _FULL_W[1]
            out[1:-1] = w[0] * s[:-3] + w[1] * s[1:-2] + w[2] * s[2:-1] + w[3] * s[3:]
        return out * self.spacing


class PiecewiseFunction:
    """Ordered, abutting sampled segments forming one function."""

    __slots__ = ("segments", "_bounds")

    def __init__(self, segments):
        segments = tuple(segments)
        if not segments:
            raise DomainError("need at least one segment")
        for left, right in zip(segments, segments[1:]):
            if abs(left.interval.hi - right.interval.lo) > 1e-12 * (
                1.0 + abs(left.interval.hi)
            ):
                raise DomainError(
                    f"segments not contiguous at {left.interval.hi} vs {right.interval.lo}"
                )
        self.segments = segments
        self._bounds = np.array([s.interval.lo for s in segments] + [segments[-1].interval.hi])

    @property
    def lo(self) -> float:
        return self.segments[0].interval.lo

    @property
    def hi(self) -> float:
        return self.segments[-1].interval.hi

    def breakpoints(self) -> np.ndarray:
        """Interior segment boundaries."""
        return self._bounds[1:-1].copy()

    def values(self, x) -> np.ndarray:
        """Evaluate at an array of points; breakpoints use the right segment."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x).astype(float)
        slack = 1e-12 * (1.0 + max(abs(self.lo), abs(self.hi)))
        if np.any(xf < self.lo - slack) or np.any(xf > self.hi + slack):
            bad = xf[(xf < self.lo - slack) | (xf > self.hi + slack)][0]
            raise DomainError(f"{bad} outside [{self.lo}, {self.hi}]")
        idx = np.searchsorted(self._bounds, xf, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        out = np.empty(xf.shape, dtype=complex)
        for k, seg in enumerate(self.segments):
            sel = idx == k
            if np.any(sel):
                out[sel] = seg.values(xf[sel])
        return out[0] if scalar else out

    def __call__(self, x):
        return self.values(x)

    def eval(self, x):
        return self.values(x)

    def nodes(self) -> np.ndarray:
        """All sample abscissae, segment by segment (breakpoints duplicated)."""
        return np.concatenate([s.nodes() for s in self.segments])

    def all_samples(self) -> np.ndarray:
        return np.concatenate([s.samples for s in self.segments])

    def same_structure(self, other: "PiecewiseFunction") -> bool:
        if len(self.segments) != len(other.segments):
            return False
        for a, b in zip(self.segments, other.segments):
            if a.count != b.count:
                return False
            if abs(a.interval.lo - b.interval.lo) > 1e-12 or abs(
                a.interval.hi - b.interval.hi
            ) > 1e-12:
                return False
        return True

    def _zip(self, other, op):
        if not isinstance(other, PiecewiseFunction):
            raise GridMismatchError("expected a PiecewiseFunction")
        if not self.same_structure(other):
            raise GridMismatchError("segment structures differ")
        return PiecewiseFunction(
            SampledSegment(a.interval, op(a.samples, b.samples))
            for a, b in zip(self.segments, other.segments)
        )

    def __add__(self, other):
        return self._zip(other, np.add)

    def __sub__(self, other):
        return self._zip(other, np.subtract)

    def __mul__(self, factor):
        if isinstance(factor, PiecewiseFunction):
            return self._zip(factor, np.multiply)
        return PiecewiseFunction(
            SampledSegment(s.interval, s.samples * factor) for s in self.segments
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def shift_values(self, offset: float) -> "PiecewiseFunction":
        """Add a constant to every sample."""
        return PiecewiseFunction(
            SampledSegment(s.interval, s.samples + offset) for s in self.segments
        )

    def map_samples(self, fn) -> "PiecewiseFunction":
        return PiecewiseFunction(
            SampledSegment(s.interval, fn(s.samples, s.nodes())) for s in self.segments
        )


def integrate(f: PiecewiseFunction, lo: float, hi: float) -> complex:
    """Integral of f over [lo, hi] (sign-flipped when hi < lo).

    Cells are integrated exactly against their cubic interpolant, so the
    rule is 4th-order accurate, linear in f to rounding, and additive
    under splitting at arbitrary interior points.
    """
    if hi < lo:
        return -integrate(f, hi, lo)
    slack = 1e-12 * (1.0 + max(abs(f.lo), abs(f.hi)))
    if lo < f.lo - slack or hi > f.hi + slack:
        raise DomainError(f"range [{lo}, {hi}] outside [{f.lo}, {f.hi}]")
    if hi == lo:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for seg in f.segments:
        u = max(lo, seg.interval.lo)
        v = min(hi, seg.interval.hi)
        if v - u > 0.0:
            total += seg.integrate_range(u, v)
    return total


def cumulative(f: PiecewiseFunction, anchor: float) -> PiecewiseFunction:
    """Antiderivative of f vanishing at ``anchor``, on f's own grid.

    Node values accumulate the exact per-cell integrals, so evaluating the
    result at any node reproduces ``integrate(f, anchor, node)`` to
    rounding; between nodes it interpolates (O(h^4)).
    """
    segs = []
    carry = 0.0 + 0.0j
    for seg in f.segments:
        vals = np.empty(seg.count, dtype=complex)
        vals[0] = carry
        vals[1:] = carry + np.cumsum(seg.cell_integrals())
        carry = vals[-1]
        segs.append(SampledSegment(seg.interval, vals))
    g = PiecewiseFunction(segs)
    base = g.values(anchor)
    return g.shift_values(-base)


def sample_function(fn, breakpoints, count: int) -> PiecewiseFunction:
    """Sample a callable on each [b_k, b_k+1] with ``count`` nodes per segment.

    ``fn`` must accept an ndarray of abscissae.  One-sided values at the
    breakpoints are whatever ``fn`` returns there; pass a callable with
    the intended one-sided convention if the function jumps.
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    if breakpoints.ndim != 1 or breakpoints.size < 2:
        raise DomainError("need at least two breakpoints")
    segs = []
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        iv = Interval(float(lo), float(hi))
        x = np.linspace(iv.lo, iv.hi, count)
        segs.append(SampledSegment(iv, np.asarray(fn(x), dtype=complex)))
    return PiecewiseFunction(segs)


def simpson_rule(breakpoints, spacing_hint: float, min_nodes: int = 9):
    """Composite-Simpson nodes/weights over abutting pieces.

    Each piece [b_k, b_k+1] gets an odd node count matching the supplied
    spacing hint (at least ``min_nodes``).  Returns (x, w) suitable for
    integrating any product of functions smooth inside each piece.
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    xs = []
    ws = []
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        length = hi - lo
        if length <= 0.0:
            continue
        n = max(min_nodes, int(np.ceil(length / spacing_hint)) + 1)
        if n % 2 == 0:
            n += 1
        x = np.linspace(lo, hi, n)
        h = length / (n - 1)
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        xs.append(x)
        ws.append(w * (h / 3.0))
    if not xs:
        raise DomainError("empty quadrature range")
    return np.concatenate(xs), np.concatenate(ws)


def piecewise_quad(fn: PiecewiseFunction, breakpoints, spacing_hint: float, min_nodes: int = 9):
    """Composite-Simpson plan with side-correct values of ``fn``.

    Returns (x, w, v).  Pieces must not straddle fn's own breakpoints;
    each piece is evaluated through the single segment containing it, so
    nodes landing on a jump take the value from the piece's own side
    (plain ``values`` would always pick the right-hand segment).
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    xs, ws, vs = [], [], []
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        if hi - lo <= 0.0:
            continue
        x, w = simpson_rule([lo, hi], spacing_hint, min_nodes)
        mid = 0.5 * (lo + hi)
        k = int(np.searchsorted(fn._bounds, mid, side="right")) - 1
        k = min(max(k, 0), len(fn.segments) - 1)
        seg = fn.segments[k]
        if not (seg.interval.lo - 1e-9 <= lo and hi <= seg.interval.hi + 1e-9):
            raise GridMismatchError(
                f"piece [{lo}, {hi}] straddles a breakpoint of the integrand"
            )
        xs.append(x)
        ws.append(w)
        vs.append(seg.values(x))
    if not xs:
        raise DomainError("empty quadrature range")
    return np.concatenate(xs), np.concatenate(ws), np.concatenate(vs)


def assemble_segments(x, v) -> PiecewiseFunction:
    """Rebuild a PiecewiseFunction from a node list with duplicated breakpoints."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=complex)
    if x.shape != v.shape or x.size < 3:
        raise DomainError("need matching x/value arrays with at least three rows")
    segs = []
    start = 0
    for k in range(1, x.size):
        if x[k] == x[k - 1]:
            segs.append(SampledSegment(Interval(x[start], x[k - 1]), v[start:k].copy()))
            start = k
    segs.append(SampledSegment(Interval(x[start], x[-1]), v[start:].copy()))
    return PiecewiseFunction(segs)


def write_csv(f: PiecewiseFunction, path) -> None:
    """Serialize as ``x,re,im`` rows, breakpoint nodes duplicated (left, right)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,re,im\n")
        for seg in f.segments:
            for x, v in zip(seg.nodes(), seg.samples):
                fh.write(f"{x:.17g},{v.real:.17g},{v.imag:.17g}\n")


def read_csv(path) -> PiecewiseFunction:
    """Inverse of write_csv; duplicated abscissae mark segment boundaries."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "x,re,im":
            raise DomainError(f"unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            sx, sre, sim = line.split(",")
            rows.append((float(sx), complex(float(sre), float(sim))))
    if len(rows) < 3:
        raise DomainError("too few rows")
    return assemble_segments([r[0] for r in rows], [r[1] for r in rows])
