"""Weight construction and the two routes to the characteristic functions."""

import numpy as np
import pytest

from delaysl import (
    CharData,
    DelaySetup,
    DomainError,
    FredholmOperator,
    GridMismatchError,
    PreconditionError,
    apply,
    build_member,
    build_w,
    ckernel,
    cumulative,
    delta_closed,
    delta_direct,
    grid_breakpoints,
    integrate,
    q_correction,
    reference_pair,
    sample_function,
    series_sum,
    skernel,
)

A = np.pi / 4


def _bump(x):
    inside = (x > A) & (x < 3 * A)
    return np.where(inside, np.sin(np.pi * (x - A) / (2 * A)) ** 2, 0.0)


def _grid_q(fn, nodes=129, lo=0.0, hi=np.pi):
    return sample_function(fn, grid_breakpoints(A, lo, hi), nodes)


def _setup(nu, nodes=129, steps=0):
    return DelaySetup(a=A, nu=nu, segment_nodes=nodes, steps_per_delay=steps)


def _zero_data(nu, j):
    w = sample_function(lambda x: np.zeros_like(x), grid_breakpoints(A, A, 3 * A), 65)
    return CharData(_setup(nu), nu, j, 0.0, w)


def _correction_oracle(q, nu, x, n=4000):
    """Midpoint-rule rebuild of the correction using only tested pieces."""
    tail = cumulative(q, A)

    def seg_sum(lo, hi):
        pts = [lo] + [b for b in q.breakpoints() if lo < b < hi] + [hi]
        total = 0.0j
        for u, v in zip(pts[:-1], pts[1:]):
            t = np.linspace(u, v, n + 1)
            mid = 0.5 * (t[:-1] + t[1:])
            total += (v - u) / n * np.sum(q(mid) * (tail(3 * A) - tail(x + mid - A / 2)))
        return total

    first = integrate(q, x + A / 2, 3 * A) * integrate(q, A, x - A / 2)
    return first - (-1.0) ** nu * seg_sum(A, 7 * A / 2 - x)


def test_correction_matches_midpoint_oracle():
    q = _grid_q(_bump)
    for nu in (0, 1):
        setup = _setup(nu)
        for x in (1.3, 1.6, 1.9):
            want = _correction_oracle(q, nu, x)
            have = q_correction(q, setup, x)
            assert abs(have - want) < 1e-6 * (1 + abs(want))


def test_correction_of_family_member_near_upper_edge():
    h, e = reference_pair(A)
    member = build_member(h, -1.0, e, nu=1, alpha=1.0, a=A)
    q, setup = member.q, _setup(1)
    x = 5 * A / 2 - 0.01
    # the ranges collapse near the edge, so a coarse double sum is enough
    t = np.linspace(A, 7 * A / 2 - x, 101)
    tm = 0.5 * (t[:-1] + t[1:])
    inner = np.empty(tm.size, dtype=complex)
    for i, ti in enumerate(tm):
        s = np.linspace(x + ti - A / 2, 3 * A, 101)
        sm = 0.5 * (s[:-1] + s[1:])
        inner[i] = (s[1] - s[0]) * np.sum(q(sm))
    second = (t[1] - t[0]) * np.sum(q(tm) * inner)
    first = integrate(q, x + A / 2, 3 * A) * integrate(q, A, x - A / 2)
    want = first + second  # nu = 1 flips the sign of the double term
    have = q_correction(q, setup, x)
    assert abs(have - want) < 1e-6 * (1 + abs(want))
    # the correction vanishes at the edge itself, keeping w continuous
    assert abs(q_correction(q, setup, 5 * A / 2 - 1e-7)) < 1e-5


def test_correction_reduces_to_the_integral_operator():
    def top(x):
        inside = (x > 5 * A / 2) & (x < 3 * A)
        return np.where(inside, np.sin(np.pi * (x - 5 * A / 2) / (A / 2)) ** 2, 0.0)

    def mid(x):
        inside = (x > 3 * A / 2) & (x < 2 * A)
        return np.where(inside, np.cos(np.pi * (x - 3 * A / 2) / (A / 2)) + 1.0, 0.0)

    q = _grid_q(lambda x: top(x) + mid(x))
    op = FredholmOperator(A, sample_function(top, [5 * A / 2, 3 * A], 129))
    image = apply(op, sample_function(mid, [3 * A / 2, 2 * A], 129))
    xs = np.linspace(3 * A / 2 + 0.01, 2 * A - 0.01, 9)
    for nu in (0, 1):
        setup = _setup(nu)
        sign = -((-1.0) ** nu)
        for x in xs:
            assert abs(q_correction(q, setup, x) - sign * image(x)) < 1e-7


def test_correction_domain_checks():
    q = _grid_q(_bump)
    setup = _setup(0)
    with pytest.raises(PreconditionError):
        q_correction(q, setup, 1.1)  # outside (3a/2, 5a/2)
    sprawling = _grid_q(lambda x: np.where(x > A, 1.0, 0.0))
    with pytest.raises(PreconditionError):
        q_correction(sprawling, setup, 1.6)  # nonzero past 3a


def test_build_w_trivial_and_omega():
    qz = _grid_q(lambda x: np.zeros_like(x))
    d0, d1 = build_w(qz, _setup(0))
    assert d0.omega == 0.0
    assert np.max(np.abs(d0.w.all_samples())) == 0.0
    assert d0.j == 0 and d1.j == 1
    q = _grid_q(_bump)
    d0, _ = build_w(q, _setup(0))
    assert abs(integrate(d0.w, A, 3 * A) - d0.omega) < 1e-9
    assert abs(d0.omega - integrate(q, A, np.pi)) < 1e-12


def test_build_w_keeps_q_outside_the_correction_window():
    q = _grid_q(_bump)
    d0, _ = build_w(q, _setup(1))
    for x in np.linspace(A + 0.01, 3 * A / 2 - 0.01, 7):
        assert abs(d0.w(x) - q(x)) < 1e-12
    for x in np.linspace(5 * A / 2 + 0.01, 3 * A - 0.01, 7):
        assert abs(d0.w(x) - q(x)) < 1e-12
    # near-continuity across the upper edge of the window
    assert abs(d0.w(5 * A / 2 - 1e-6) - d0.w(5 * A / 2 + 1e-6)) < 1e-5


def test_build_w_validates_grid_and_support():
    coarse = sample_function(_bump, [0.0, A, 2 * A, 3 * A, np.pi], 65)
    with pytest.raises(GridMismatchError):
        build_w(coarse, _setup(0))
    sprawling = _grid_q(lambda x: np.where(x > A, 1.0, 0.0))
    with pytest.raises(PreconditionError):
        build_w(sprawling, _setup(0))


def test_chardata_gates():
    w = sample_function(lambda x: np.zeros_like(x), grid_breakpoints(A, A, 3 * A), 9)
    with pytest.raises(DomainError):
        CharData(DelaySetup(a=1.1, nu=0), 0, 0, 0.0, sample_function(
            lambda x: np.zeros_like(x), grid_breakpoints(1.1, 1.1, 3.3), 9))
    with pytest.raises(DomainError):
        CharData(_setup(0), 0, 2, 0.0, w)
    with pytest.raises(DomainError):
        CharData(_setup(0), 0, 0, 0.3, w)  # omega must equal the integral of w
    CharData(_setup(1), 1, 0, 0.3, w)  # but it is free data for nu = 1
    short = sample_function(lambda x: np.zeros_like(x), [A, 2 * A, 3 * A], 9)
    with pytest.raises(DomainError):
        CharData(_setup(0), 0, 0, 0.0, short)


def test_trivial_characteristic_functions():
    lam = np.array([-9.0, 0.0, 2.0, 25.0, 3.0 + 4.0j])
    want = {
        (0, 0): skernel(lam, np.pi),
        (0, 1): ckernel(lam, np.pi),
        (1, 0): ckernel(lam, np.pi),
        (1, 1): -lam * skernel(lam, np.pi),
    }
    for (nu, j), vals in want.items():
        have = delta_closed(_zero_data(nu, j), lam)
        assert np.max(np.abs(have - vals)) < 1e-12


def test_stable_and_literal_diagonal_forms_agree():
    q = _grid_q(_bump)
    data, _ = build_w(q, _setup(0))
    mags = np.logspace(0.0, np.log10(400.0), 25)
    lam = np.concatenate([mags, -mags[:8], mags[:8] + 2.0j])
    stable = delta_closed(data, lam)
    literal = delta_closed(data, lam, literal=True)
    assert np.max(np.abs(stable - literal) / (1.0 + np.abs(stable))) < 1e-9


def test_literal_form_guards():
    q = _grid_q(_bump)
    data0, _ = build_w(q, _setup(0))
    with pytest.raises(DomainError):
        delta_closed(data0, 1e-9, literal=True)
    _, data11 = build_w(q, _setup(1))
    with pytest.raises(DomainError):
        delta_closed(data11, 10.0, literal=True)


def test_continuity_through_zero():
    q = _grid_q(_bump)
    for nu in (0, 1):
        for data in build_w(q, _setup(nu)):
            probe = delta_closed(data, np.array([-1e-6, 0.0, 1e-6]))
            assert abs(probe[0] + probe[2] - 2.0 * probe[1]) < 1e-8


def test_conjugation_symmetry():
    q = _grid_q(_bump)
    for nu in (0, 1):
        for data in build_w(q, _setup(nu)):
            for lam in (3.0 + 4.0j, -2.0 + 0.7j, 150.0 - 5.0j):
                left = delta_closed(data, np.conj(lam))
                right = np.conj(delta_closed(data, lam))
                assert abs(left - right) < 1e-12 * (1 + abs(left))


def test_batch_matches_scalar_evaluation():
    q = _grid_q(_bump)
    data, _ = build_w(q, _setup(1))
    lam = np.array([-5.0, 1.0, 42.0, 3.0 + 2.0j])
    batch = delta_closed(data, lam)
    for k, l in enumerate(lam):
        one = delta_closed(data, l)
        assert abs(batch[k] - one) < 1e-9 * (1 + abs(one))


def test_json_round_trip():
    q = _grid_q(_bump)
    data, _ = build_w(q, _setup(1))
    copy = CharData.from_json(data.to_json())
    assert copy.nu == data.nu and copy.j == data.j
    assert abs(copy.omega - data.omega) < 1e-15
    assert copy.setup.a == pytest.approx(data.setup.a, abs=1e-15)
    lam = np.array([2.0, 60.0, 1.0 + 1.0j])
    gap = np.abs(delta_closed(copy, lam) - delta_closed(data, lam))
    assert np.max(gap) < 1e-12


def test_direct_route_trivial_case():
    qz = _grid_q(lambda x: np.zeros_like(x))
    lam = np.array([1.0, 9.5, 80.0])
    have = delta_direct(qz, _setup(0), 0, lam)
    assert np.max(np.abs(have - skernel(lam, np.pi))) < 1e-9


def test_direct_route_matches_closed_forms():
    q = _grid_q(_bump)
    lam = np.array([-15.0, 0.0, 3.0, 120.0, 390.0, 8.0 + 5.0j])
    for nu in (0, 1):
        setup = _setup(nu, nodes=129, steps=512)
        datas = build_w(q, setup)
        for j, data in enumerate(datas):
            closed = delta_closed(data, lam)
            direct = delta_direct(q, setup, j, lam)
            gap = np.abs(closed - direct) / (1.0 + np.abs(closed))
            assert np.max(gap) < 1e-6


def test_direct_route_pads_short_grids():
    full = _grid_q(_bump)
    short = sample_function(_bump, grid_breakpoints(A, 0.0, 3 * A), 129)
    lam = np.array([4.0, 33.0])
    setup = _setup(0, nodes=129, steps=256)
    a = delta_direct(full, setup, 0, lam)
    b = delta_direct(short, setup, 0, lam)
    assert np.max(np.abs(a - b)) < 1e-12


def test_direct_route_validation():
    q = _grid_q(_bump)
    with pytest.raises(DomainError):
        delta_direct(q, _setup(0), 2, 5.0)
    loose = _grid_q(np.cos)
    with pytest.raises(PreconditionError):
        delta_direct(loose, _setup(0), 0, 5.0)


def test_direct_route_in_the_single_level_regime():
    # for a > pi/2 only one series correction survives, any tail support
    a = 1.7
    grid = grid_breakpoints(a, 0.0, np.pi)

    def tail(x):
        return np.where(x > a, np.sin(3.0 * (x - a)), 0.0)

    q = sample_function(tail, grid, 129)
    lam = np.array([2.0, 37.0, -6.0])
    for nu in (0, 1):
        setup = DelaySetup(a=a, nu=nu, segment_nodes=129, steps_per_delay=1024)
        flipped = DelaySetup(a=a, nu=1 - nu, segment_nodes=129, steps_per_delay=1024)
        for j in (0, 1):
            direct = delta_direct(q, setup, j, lam)
            for k, l in enumerate(lam):
                summed = series_sum(q, flipped, l)
                want = summed.yp_end if j else summed.y_end
                assert abs(direct[k] - want) < 1e-7 * (1 + abs(want))
