import math

import numpy as np
import pytest

from cncompact.problem import (
    CanonicalProblem,
    PdeProblem,
    build_grid,
    canonical_on_x,
    canonicalize,
    exact_solution,
    manufactured_problem,
    sample,
)


def _pde(alpha1: float = 0.25, alpha2: float = 0.1, **kwargs) -> PdeProblem:
    params = dict(
        alpha1=alpha1,
        alpha2=alpha2,
        x_left=0.0,
        x_right=1.0,
        horizon_T=2.0,
        f=lambda x: math.sin(x) + 1.0,
        g1=lambda v: 1.0 + v,
        g2=lambda v: math.sin(1.0) + 1.0 + 2.0 * v,
    )
    params.update(kwargs)
    return PdeProblem(**params)


def test_canonicalize_maps_coefficient_and_interval() -> None:
    canon = canonicalize(_pde())
    assert canon.c == pytest.approx(0.625)
    assert canon.z_left == pytest.approx(0.0)
    assert canon.z_right == pytest.approx(2.5)
    # u = (alpha2/alpha1) psi and x = (alpha2/alpha1) z
    assert canon.f(1.25) == pytest.approx(0.4 * (math.sin(0.5) + 1.0))
    assert canon.g2(0.5) == pytest.approx(0.4 * (math.sin(1.0) + 2.0))


def test_canonicalize_negative_alpha1_swaps_sides() -> None:
    pde = _pde(alpha1=-0.25)
    canon = canonicalize(pde)
    assert canon.c == pytest.approx(0.625)
    assert canon.z_left == pytest.approx(-2.5)
    assert canon.z_right == pytest.approx(0.0)
    assert canon.g1(0.3) == pytest.approx(-0.4 * pde.g2(0.3))
    assert canon.g2(0.3) == pytest.approx(-0.4 * pde.g1(0.3))


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.7])
@pytest.mark.parametrize("alpha1", [0.25, -0.4])
def test_canonicalize_is_scale_consistent(lam: float, alpha1: float) -> None:
    def problem(width: float) -> PdeProblem:
        return _pde(
            alpha1=alpha1,
            x_left=0.5 * width,
            x_right=width,
            f=lambda x: 1.0,
            g1=lambda v: 1.0,
            g2=lambda v: 1.0,
        )

    base, scaled = canonicalize(problem(1.0)), canonicalize(problem(lam))
    assert scaled.c == base.c
    assert scaled.z_left == pytest.approx(lam * base.z_left, rel=1e-14)
    assert scaled.z_right == pytest.approx(lam * base.z_right, rel=1e-14)
    assert scaled.length == pytest.approx(lam * base.length, rel=1e-14)


def test_canonical_on_x_keeps_interval() -> None:
    canon = canonical_on_x(_pde())
    assert canon.c == pytest.approx(0.625)
    assert (canon.z_left, canon.z_right) == (0.0, 1.0)


def test_alpha1_zero_is_rejected() -> None:
    with pytest.raises(ValueError):
        canonicalize(_pde(alpha1=0.0))


@pytest.mark.parametrize("alpha2", [0.0, -0.1])
def test_nonpositive_alpha2_is_rejected(alpha2: float) -> None:
    with pytest.raises(ValueError):
        _pde(alpha2=alpha2)


def test_incompatible_boundary_data_is_rejected() -> None:
    with pytest.raises(ValueError):
        _pde(g1=lambda v: 5.0)


def test_build_grid_spacing() -> None:
    canon = canonicalize(_pde())
    grid = build_grid(canon, 20, 400)
    assert grid.dz == pytest.approx(1 / 8)
    assert grid.dv == pytest.approx(0.005)
    assert grid.interior_size == 19
    assert len(grid.nodes()) == 21
    assert grid.nodes()[-1] == pytest.approx(2.5)
    assert len(grid.time_levels()) == 401


@pytest.mark.parametrize("N, M", [(1, 10), (4, 0)])
def test_build_grid_rejects_small_sizes(N: int, M: int) -> None:
    with pytest.raises(ValueError):
        build_grid(manufactured_problem(1.0), N, M)


def test_build_grid_rejects_coarse_step() -> None:
    canon = manufactured_problem(1.0, z_left=0.0, z_right=5.0)
    with pytest.raises(ValueError):
        build_grid(canon, 2, 10)


def test_exact_solution_value() -> None:
    assert exact_solution(1.0, 0.5, 1.0, 0.0) == pytest.approx(0.7788007831, rel=1e-9)


def test_exact_solution_satisfies_equation() -> None:
    c, k, v, z = 0.8, 0.7, 0.3, 0.4
    u = exact_solution(c, k, v, z)
    u_v = c * (k * k - k) * u
    u_z = k * u
    u_zz = k * k * u
    assert u_v + c * u_z - c * u_zz == pytest.approx(0.0, abs=1e-14)


def test_manufactured_problem_traces() -> None:
    canon = manufactured_problem(0.625, k=0.5, z_left=0.0, z_right=2.5, horizon_T=2.0)
    assert isinstance(canon, CanonicalProblem)
    assert canon.g2(1.0) == pytest.approx(float(exact_solution(0.625, 0.5, 1.0, 2.5)))
    points = np.linspace(0.0, 2.5, 6)
    np.testing.assert_allclose(sample(canon.f, points), exact_solution(0.625, 0.5, 0.0, points))
