"""Integral operator, its discretizations, and the analytic witness pair."""

import numpy as np
import pytest

from delaysl import (
    DomainError,
    EigenPair,
    FredholmOperator,
    NoEigenvaluesError,
    PreconditionError,
    apply,
    apply_discrete,
    eigenpairs,
    integrate,
    nystrom,
    project,
    reference_pair,
    sample_function,
    zero_mean,
)

A = np.pi / 4


def _witness():
    h, e = reference_pair(A)
    return FredholmOperator(A, h), h, e


def test_operator_validation():
    h, _ = reference_pair(A)
    with pytest.raises(PreconditionError):
        FredholmOperator(1.2, h)
    wrong_span = sample_function(np.cos, [2 * A, 3 * A], 65)
    with pytest.raises(PreconditionError):
        FredholmOperator(A, wrong_span)
    complex_h = sample_function(lambda x: 1j * np.ones_like(x), [5 * A / 2, 3 * A], 65)
    with pytest.raises(PreconditionError):
        FredholmOperator(A, complex_h)


def test_tail_integral_shape():
    op, h, _ = _witness()
    total = integrate(h, 5 * A / 2, 3 * A)
    assert abs(op.kernel_values(3 * A)) < 1e-12
    assert abs(op.kernel_values(3.2 * A)) == 0.0
    for s in (3 * A / 2 + 0.05, 2 * A, 5 * A / 2 - 0.01):
        assert abs(op.kernel_values(s) - total) < 1e-12
    lo = op.kernel_values(5 * A / 2 - 1e-8)
    hi = op.kernel_values(5 * A / 2 + 1e-8)
    assert abs(lo - hi) < 1e-5  # continuous where the density starts


def test_witness_values():
    _, h, e = _witness()
    assert e(3 * A / 2) == pytest.approx(2.0, abs=1e-12)
    assert e(7 * A / 4) == pytest.approx(-1.0, abs=1e-12)
    assert abs(integrate(e, 3 * A / 2, 2 * A)) < 1e-10
    assert h(3 * A) == pytest.approx(6.0 * np.pi**2 / A**2, abs=1e-9)
    with pytest.raises(PreconditionError):
        reference_pair(1.2)


def test_witness_is_an_eigenpair_of_minus_one():
    op, _, e = _witness()
    image = apply(op, e)
    gap = np.max(np.abs(image(e.nodes()) + e.all_samples()))
    assert gap < 1e-6 * np.max(np.abs(e.all_samples()))


def test_negated_density_flips_the_eigenvalue():
    _, h, e = _witness()
    op = FredholmOperator(A, (-1.0) * h)
    image = apply(op, e)
    gap = np.max(np.abs(image(e.nodes()) - e.all_samples()))
    assert gap < 1e-6 * np.max(np.abs(e.all_samples()))


def test_apply_validates_the_argument_span():
    op, _, _ = _witness()
    f = sample_function(np.sin, [0.0, 1.0], 65)
    with pytest.raises(PreconditionError):
        apply(op, f)


def test_mode_matrix_is_exactly_symmetric():
    op, _, _ = _witness()
    M, x, w = nystrom(op, 32)
    assert np.array_equal(M, M.T)
    assert M.shape == (32, 32)
    assert x.size == 32 and w.size == 32
    assert w.sum() == pytest.approx(A / 2, abs=1e-13)
    with pytest.raises(PreconditionError):
        nystrom(op, 8)


def test_mode_matrix_reproduces_the_witness():
    op, _, e = _witness()
    M, _, _ = nystrom(op, 48)
    c = project(op, e, 48)
    assert np.max(np.abs(M @ c + c)) < 1e-9 * np.max(np.abs(c))


def test_discrete_apply_matches_direct_quadrature():
    op, _, e = _witness()
    direct = apply(op, e)
    discrete = apply_discrete(op, e, 64)
    gap = np.max(np.abs(direct.all_samples() - discrete.all_samples()))
    assert gap < 1e-8


def test_eigenpairs_find_the_witness():
    op, _, e = _witness()
    pairs = eigenpairs(op, 64, count=8)
    assert all(p.residual <= 1e-6 for p in pairs)
    assert abs(pairs[0].eta) >= abs(pairs[-1].eta)
    best = min(pairs, key=lambda p: abs(p.eta + 1.0))
    assert abs(best.eta + 1.0) < 1e-6
    want = e(best.e.nodes()) / 2.0  # sup-normalized witness, positive lead
    assert np.max(np.abs(best.e.all_samples() - want)) < 1e-5


def test_eigenpairs_are_deterministic():
    op, _, _ = _witness()
    first = eigenpairs(op, 32, count=4)
    second = eigenpairs(op, 32, count=4)
    for p, q in zip(first, second):
        assert p.eta == q.eta
        assert np.array_equal(p.e.all_samples(), q.e.all_samples())


def test_eigenpair_gates():
    _, _, e = _witness()
    with pytest.raises(DomainError):
        EigenPair(0.0, e, 0.0)
    with pytest.raises(DomainError):
        EigenPair(-1.0, e, 1e-3)


def test_zero_density_has_no_eigenvalues():
    flat = sample_function(lambda x: np.zeros_like(x), [5 * A / 2, 3 * A], 65)
    op = FredholmOperator(A, flat)
    with pytest.raises(NoEigenvaluesError):
        eigenpairs(op, 16)


def test_eigenvalue_squares_sum_to_the_kernel_mass():
    op, _, _ = _witness()
    M, _, _ = nystrom(op, 256)
    have = float(np.sum(np.linalg.eigvalsh(M) ** 2))
    n = 400
    edges = np.linspace(3 * A / 2, 2 * A, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    cell = edges[1] - edges[0]
    kk = op.kernel_values((mid[:, None] + mid[None, :] - A / 2).ravel()).reshape(n, n)
    want = float(np.sum(np.abs(kk) ** 2)) * cell * cell
    assert abs(have - want) < 0.01 * want


def test_zero_mean_classification():
    _, _, e = _witness()
    assert zero_mean(e)
    const = sample_function(lambda x: np.ones_like(x), [3 * A / 2, 2 * A], 65)
    assert not zero_mean(const)
    assert not zero_mean(e.shift_values(0.1))
