import math

import numpy as np
import pytest

from cncompact.errors import InapplicableFormulaError, SingularSystemError
from cncompact.scheme import TridiagToeplitz, assemble_X, coefficients
from cncompact.toeplitz import (
    ToeplitzInverse,
    full_inverse,
    inverse_entry,
    p_log_table,
    p_poly,
    p_poly_sum,
    solve_toeplitz,
    solve_tridiagonal,
)


@pytest.mark.parametrize("x", [0.3, 1.3, 5.0, 5.0 / math.sqrt(3.75)])
def test_p_poly_forms_agree(x: float) -> None:
    for n in range(0, 12):
        assert p_poly(n, x) == pytest.approx(p_poly_sum(n, x), rel=1e-10, abs=1e-12)


def test_p_poly_is_second_kind_chebyshev() -> None:
    theta = 0.7
    for n in range(8):
        assert p_poly(n, math.cos(theta)) == pytest.approx(math.sin((n + 1) * theta) / math.sin(theta), abs=1e-12)


def test_p_poly_rejects_negative_order() -> None:
    with pytest.raises(ValueError):
        p_poly(-1, 1.0)


@pytest.mark.parametrize("x", [0.0, 0.3, -0.8, 5.2])
def test_log_table_matches_recurrence(x: float) -> None:
    logs, signs = p_log_table(14, x)
    for k in range(15):
        value = p_poly(k, x)
        if abs(value) < 1e-14:
            assert signs[k] == 0.0 or abs(signs[k] * math.exp(logs[k])) < 1e-12
        else:
            assert signs[k] * math.exp(logs[k]) == pytest.approx(value, rel=1e-10)


def test_log_table_survives_overflow() -> None:
    logs, signs = p_log_table(2000, 5.0)
    assert math.isfinite(logs[-1]) and logs[-1] > 700
    assert signs[-1] == 1.0


def test_inverse_reference_entries() -> None:
    X = assemble_X(coefficients(1.0, 0.5, 0.1), 3)
    inv = ToeplitzInverse(X)
    assert inv.entry(1, 1) == pytest.approx(0.1211356467, rel=1e-9)
    assert inv.entry(2, 1) == pytest.approx(-0.015141955836, rel=1e-9)
    assert inv.entry(1, 2) == pytest.approx(-0.0090851735, rel=1e-9)
    assert inv.entry(0, 1) == 0.0 and inv.entry(1, 3) == 0.0
    np.testing.assert_allclose(inv.column(1), [0.1211356467, -0.015141955836], rtol=1e-9)
    assert inverse_entry(X, 2, 2) == pytest.approx(inv.entry(1, 1), rel=1e-14)


def test_closed_form_equals_solved_inverse() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 201))
        c, dz, dv = rng.uniform(0.05, 5.0), rng.uniform(0.01, 1.0), 10 ** rng.uniform(-6, -1)
        X = assemble_X(coefficients(c, dz, dv), n + 1)
        closed = ToeplitzInverse(X).dense()
        dense = X.to_dense()
        reference = np.linalg.solve(dense, np.eye(n))
        scale = np.max(np.abs(reference))
        np.testing.assert_allclose(closed, reference, rtol=1e-9, atol=1e-9 * scale)
        residual = dense @ closed - np.eye(n)
        assert np.max(np.sum(np.abs(residual), axis=1)) < 1e-9


@pytest.mark.parametrize("sub, diag, sup, n", [(0.3, 1.1, 0.7, 9), (2.0, -5.0, 0.5, 16), (1.0, 2.0, 1.0, 40)])
def test_inverse_is_centro_symmetric(sub: float, diag: float, sup: float, n: int) -> None:
    T = TridiagToeplitz(sub=sub, diag=diag, sup=sup, n=n)
    inv = ToeplitzInverse(T)
    dense = inv.dense()
    np.testing.assert_allclose(dense, dense[::-1, ::-1], rtol=1e-12, atol=1e-15 * np.max(np.abs(dense)))
    for q, qp in ((1, 1), (2, 5), (n, 1), (3, n - 1)):
        assert inv.entry(q, qp) == pytest.approx(inv.entry(n + 1 - q, n + 1 - qp), rel=1e-12)
    solved = np.linalg.inv(T.to_dense())
    np.testing.assert_allclose(solved, solved[::-1, ::-1], rtol=1e-9, atol=1e-12 * np.max(np.abs(solved)))


def test_log_form_matches_direct_form() -> None:
    X = assemble_X(coefficients(0.625, 1 / 16, 1e-3), 101)
    inv = ToeplitzInverse(X)
    assert inv.use_logs
    reference = np.linalg.solve(X.to_dense(), np.eye(X.n))
    np.testing.assert_allclose(inv.dense(), reference, rtol=1e-9, atol=1e-12 * np.max(np.abs(reference)))
    assert inv.entry(37, 80) == pytest.approx(reference[36, 79], rel=1e-9)


def test_scalar_inverse() -> None:
    inv = ToeplitzInverse(TridiagToeplitz(sub=1.0, diag=4.0, sup=1.0, n=1))
    assert inv.entry(1, 1) == pytest.approx(0.25)
    assert inv.dense().shape == (1, 1)


def test_opposite_sign_off_diagonals_are_inapplicable() -> None:
    with pytest.raises(InapplicableFormulaError) as info:
        ToeplitzInverse(TridiagToeplitz(sub=-1.0, diag=4.0, sup=1.0, n=3))
    assert isinstance(info.value, RuntimeError)
    assert not isinstance(info.value, ValueError)


def test_vanishing_denominator_is_singular() -> None:
    # p_2(1/2) = 0
    with pytest.raises(SingularSystemError):
        ToeplitzInverse(TridiagToeplitz(sub=1.0, diag=1.0, sup=1.0, n=2))


def test_full_inverse_limit() -> None:
    X = assemble_X(coefficients(1.0, 0.1, 0.01), 21)
    assert full_inverse(X).shape == (20, 20)
    with pytest.raises(ValueError):
        full_inverse(X, limit=10)


def test_solve_tridiagonal_dominant_system() -> None:
    rng = np.random.default_rng(5)
    n = 40
    sub, sup = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    diag = 3.0 + rng.uniform(0, 1, n)
    rhs = rng.standard_normal(n)
    dense = np.diag(diag) + np.diag(sub[1:], -1) + np.diag(sup[:-1], 1)
    np.testing.assert_allclose(solve_tridiagonal(sub, diag, sup, rhs), np.linalg.solve(dense, rhs), rtol=1e-12)


def test_solve_tridiagonal_several_columns() -> None:
    X = assemble_X(coefficients(0.625, 1 / 32, 1e-2), 32)
    rhs = np.random.default_rng(9).standard_normal((X.n, 3))
    np.testing.assert_allclose(solve_toeplitz(X, rhs), np.linalg.solve(X.to_dense(), rhs), rtol=1e-11)


def test_solve_tridiagonal_needs_pivoting() -> None:
    sub = np.array([0.0, 1.0, 1.0])
    diag = np.array([0.0, 1.0, 2.0])
    sup = np.array([1.0, 3.0, 0.0])
    rhs = np.array([1.0, 2.0, 3.0])
    dense = np.array([[0.0, 1.0, 0.0], [1.0, 1.0, 3.0], [0.0, 1.0, 2.0]])
    np.testing.assert_allclose(solve_tridiagonal(sub, diag, sup, rhs), np.linalg.solve(dense, rhs), rtol=1e-12)


def test_solve_tridiagonal_singular_and_scalar() -> None:
    with pytest.raises(SingularSystemError):
        solve_tridiagonal([0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(SingularSystemError):
        solve_tridiagonal([0.0], [0.0], [0.0], [1.0])
    np.testing.assert_allclose(solve_tridiagonal([0.0], [4.0], [0.0], [2.0]), [0.5])


def test_solve_tridiagonal_shape_mismatch() -> None:
    with pytest.raises(ValueError):
        solve_tridiagonal([0.0, 1.0], [2.0, 2.0], [1.0], [1.0, 1.0])
