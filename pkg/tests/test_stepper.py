import math

import numpy as np
import pytest

from cncompact.problem import build_grid, canonical_from_c, exact_solution, manufactured_problem
from cncompact.scheme import coefficients
from cncompact.spectral import amplification_matrix
from cncompact.stepper import (
    CrankNicolsonStepper,
    convergence_study,
    error_norms,
    integrate,
    observed_orders,
    stability_probe,
    step,
)


def _constant(value: float):
    return lambda _: value


def test_constant_state_is_preserved() -> None:
    canon = canonical_from_c(0.625, 0.0, 1.0, 1.0, _constant(1.0), _constant(1.0), _constant(1.0))
    result = integrate(canon, build_grid(canon, 16, 50))
    np.testing.assert_allclose(result.final, np.ones(15), atol=1e-12)
    assert len(result.max_norms) == 51


def test_zero_data_stays_zero() -> None:
    canon = canonical_from_c(1.0, 0.0, 1.0, 1.0, _constant(0.0), _constant(0.0), _constant(0.0))
    result = integrate(canon, build_grid(canon, 8, 10), record_trajectory=True)
    assert np.all(result.final == 0.0)
    assert result.trajectory.shape == (11, 9)
    assert np.all(result.trajectory == 0.0)


def test_scalar_step() -> None:
    co = coefficients(1.0, 0.5, 0.1)
    nxt = step(np.array([1.0]), co, np.zeros(1))
    assert nxt[0] == pytest.approx((co.c2 - co.y2) / (co.c2 + co.y2), rel=1e-14)
    assert nxt[0] == pytest.approx(0.3422818792, rel=1e-9)


def test_step_rejects_shape_mismatch() -> None:
    stepper = CrankNicolsonStepper(coefficients(1.0, 0.25, 0.01), 4)
    with pytest.raises(ValueError):
        stepper.step(np.zeros(3), np.zeros(2))


def test_trajectory_carries_boundary_values() -> None:
    canon = manufactured_problem(1.0, k=0.5)
    result = integrate(canon, build_grid(canon, 8, 16), record_trajectory=True)
    levels = result.grid.time_levels()
    np.testing.assert_allclose(result.trajectory[:, 0], [canon.g1(v) for v in levels])
    np.testing.assert_allclose(result.trajectory[:, -1], [canon.g2(v) for v in levels])
    np.testing.assert_allclose(result.trajectory[-1, 1:-1], result.final)


def test_exponential_steady_state() -> None:
    canon = manufactured_problem(1.0, k=1.0)
    grid = build_grid(canon, 32, 32)
    result = integrate(canon, grid)
    np.testing.assert_allclose(result.final, np.exp(grid.interior_nodes()), rtol=1e-8)


def test_refinement_reduces_error() -> None:
    canon = manufactured_problem(0.625, k=0.5, z_left=0.0, z_right=2.5, horizon_T=2.0)
    errors = []
    for N, M in ((80, 200), (160, 400)):
        grid = build_grid(canon, N, M)
        exact = exact_solution(0.625, 0.5, 2.0, grid.interior_nodes())
        errors.append(error_norms(integrate(canon, grid).final, exact, grid.dz)[0])
    assert errors[1] < errors[0]
    assert errors[0] == pytest.approx(5.13538e-08, rel=1e-3)
    assert errors[1] == pytest.approx(1.28192e-08, rel=1e-3)


def test_spatial_order_is_four() -> None:
    table = convergence_study(manufactured_problem(1.0, k=0.5), 0.5, refinement="spatial", levels=3)
    assert [row.step for row in table.rows] == [1 / 8, 1 / 16, 1 / 32]
    assert table.rows[0].error_max == pytest.approx(4.304763e-08, rel=1e-3)
    assert table.reliable
    for order in table.orders:
        assert 3.7 <= order <= 4.3


def test_temporal_order_is_two() -> None:
    table = convergence_study(manufactured_problem(1.0, k=0.5), 0.5, refinement="temporal", levels=3)
    assert [row.step for row in table.rows] == [0.25, 0.125, 0.0625]
    assert table.rows[0].error_max == pytest.approx(1.049517e-05, rel=1e-3)
    for order in table.orders:
        assert 1.8 <= order <= 2.2
    assert table.rows[0].order_max is None


def test_constant_oracle_orders_are_unreliable() -> None:
    table = convergence_study(
        manufactured_problem(1.0, k=0.0), 0.0, refinement="temporal", levels=3, fine_N=8
    )
    assert table.orders == [None, None]
    assert not table.reliable


def test_convergence_study_arguments() -> None:
    canon = manufactured_problem(1.0)
    with pytest.raises(ValueError):
        convergence_study(canon, 0.5, levels=2)
    with pytest.raises(ValueError):
        convergence_study(canon, 0.5, refinement="diagonal")


def test_observed_orders() -> None:
    orders = observed_orders([1e-2, 1e-2 / 16, 1e-2 / 256])
    assert orders == [pytest.approx(4.0), pytest.approx(4.0)]
    assert observed_orders([1e-3, 1e-20]) == [None]
    assert observed_orders([0.0, 0.0]) == [None]


def test_error_norms() -> None:
    e_max, e_l2 = error_norms(np.array([1.0, 2.0]), np.array([1.0, 1.0]), 0.25)
    assert e_max == 1.0
    assert e_l2 == pytest.approx(0.5)


def test_probe_scalar_growth() -> None:
    probe = stability_probe(coefficients(1.0, 0.5, 0.1), 2, steps=5, initial=np.array([1.0]))
    assert probe.max_step_growth == pytest.approx(0.3422818792, rel=1e-9)
    assert probe.tail_step_growth == pytest.approx(0.3422818792, rel=1e-9)
    assert probe.overall_growth == pytest.approx(0.3422818792 ** 5, rel=1e-8)
    assert probe.steps == 5


@pytest.mark.parametrize("dz", [1 / 8, 1 / 16, 1 / 32])
@pytest.mark.parametrize("dv", [1e-1, 1e-2, 1e-3])
def test_probe_does_not_grow(dz: float, dv: float) -> None:
    N = int(round(1 / dz))
    probe = stability_probe(coefficients(0.625, dz, dv), N, steps=1000, seed=3)
    assert probe.overall_growth <= 1.0 + 1e-8
    assert probe.steps == 1000


def test_probe_follows_dominant_mode() -> None:
    co = coefficients(1.0, 0.5, 0.1)
    vals, vecs = np.linalg.eig(amplification_matrix(co, 3))
    top = int(np.argmax(np.abs(vals)))
    assert abs(vals[top].imag) < 1e-12
    probe = stability_probe(co, 3, steps=40, initial=vecs[:, top].real)
    assert probe.tail_step_growth == pytest.approx(abs(vals[top]), rel=1e-6)
    assert probe.tail_step_growth == pytest.approx(0.6257865999, rel=1e-8)
    assert probe.overall_growth == pytest.approx(math.pow(abs(vals[top]), 40), rel=1e-6)


def test_probe_zero_initial_and_bad_steps() -> None:
    co = coefficients(1.0, 0.25, 0.01)
    assert stability_probe(co, 4, initial=np.zeros(3)).overall_growth == 0.0
    with pytest.raises(ValueError):
        stability_probe(co, 4, steps=0)
