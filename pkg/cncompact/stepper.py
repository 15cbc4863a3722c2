"""Time integration of (X+Y) U^{m+1} = (X-Y) U^m + F^m and empirical order/stability checks."""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cncompact.problem import CanonicalProblem, Grid, build_grid, exact_solution, sample
from cncompact.scheme import SchemeCoefficients, assemble_X, assemble_Y, boundary_vector, coefficients
from cncompact.toeplitz import solve_tridiagonal

logger = logging.getLogger(__name__)

ROUNDOFF_FACTOR = 100.0
DEFAULT_SPATIAL_BASE_N = 8
DEFAULT_SPATIAL_B = 1.0
DEFAULT_TEMPORAL_N = 256
DEFAULT_TEMPORAL_BASE_M = 4
DEFAULT_PROBE_STEPS = 1000


@dataclass
class SolveResult:
    final: np.ndarray
    grid: Grid
    max_norms: List[float] = field(default_factory=list)
    trajectory: Optional[np.ndarray] = None
    wall_time: float = 0.0


@dataclass(frozen=True)
class ConvergenceRow:
    step: float
    error_max: float
    error_l2: float
    order_max: Optional[float]
    order_l2: Optional[float]


@dataclass
class ConvergenceTable:
    refinement: str
    rows: List[ConvergenceRow] = field(default_factory=list)

    @property
    def orders(self) -> List[Optional[float]]:
        return [row.order_max for row in self.rows[1:]]

    @property
    def reliable(self) -> bool:
        return all(order is not None for order in self.orders)


@dataclass(frozen=True)
class ProbeResult:
    overall_growth: float
    max_step_growth: float
    tail_step_growth: float
    steps: int


class CrankNicolsonStepper:
    """Holds the bands of X+Y and the operator X-Y for repeated steps of one grid."""

    def __init__(self, coeffs: SchemeCoefficients, N: int) -> None:
        X, Y = assemble_X(coeffs, N), assemble_Y(coeffs, N)
        self.coeffs = coeffs
        self.N = N
        self.lhs_bands = (X + Y).bands()
        self.rhs_op = X - Y

    def step(self, U: np.ndarray, F: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.shape != (self.N - 1,) or np.shape(F) != (self.N - 1,):
            raise ValueError(f"状态向量维度不一致: U={U.shape}, F={np.shape(F)}, 期望 {self.N - 1}")
        sub, diag, sup = self.lhs_bands
        return solve_tridiagonal(sub, diag, sup, self.rhs_op.matvec(U) + F)


def step(U: np.ndarray, coeffs: SchemeCoefficients, F: np.ndarray) -> np.ndarray:
    """One time level; the order N-1 is taken from U."""
    return CrankNicolsonStepper(coeffs, len(U) + 1).step(U, F)


def integrate(
    canon: CanonicalProblem,
    grid: Grid,
    record_trajectory: bool = False,
    record_norms: bool = True,
) -> SolveResult:
    started = time.perf_counter()
    coeffs = coefficients(canon.c, grid.dz, grid.dv)
    stepper = CrankNicolsonStepper(coeffs, grid.N)
    U = sample(canon.f, grid.interior_nodes())

    levels = grid.time_levels()
    trajectory = None
    if record_trajectory:
        trajectory = np.empty((grid.M + 1, grid.N + 1))
        trajectory[0] = _with_boundary(U, canon, levels[0])

    norms = [float(np.max(np.abs(U)))] if record_norms else []
    for m in range(grid.M):
        F = boundary_vector(coeffs, canon.g1, canon.g2, m, grid.dv, grid.N)
        U = stepper.step(U, F)
        if record_norms:
            norms.append(float(np.max(np.abs(U))))
        if trajectory is not None:
            trajectory[m + 1] = _with_boundary(U, canon, levels[m + 1])

    elapsed = time.perf_counter() - started
    logger.debug("[solve] N=%s M=%s c=%s elapsed=%.3fs", grid.N, grid.M, canon.c, elapsed)
    return SolveResult(final=U, grid=grid, max_norms=norms, trajectory=trajectory, wall_time=elapsed)


def _with_boundary(U: np.ndarray, canon: CanonicalProblem, v: float) -> np.ndarray:
    return np.concatenate(([float(canon.g1(v))], U, [float(canon.g2(v))]))


def error_norms(U: np.ndarray, exact: np.ndarray, dz: float) -> Tuple[float, float]:
    """(max, l2) errors over interior nodes; the l2 norm carries the sqrt(dz) weight."""
    diff = np.asarray(U, dtype=float) - np.asarray(exact, dtype=float)
    return float(np.max(np.abs(diff))), float(math.sqrt(dz) * np.linalg.norm(diff))


def observed_orders(errors: Sequence[float], scale: float = 1.0) -> List[Optional[float]]:
    """log2(e_coarse / e_fine) per halving; None once either error sits at the roundoff floor."""
    floor = ROUNDOFF_FACTOR * np.finfo(float).eps * max(scale, 1.0)
    orders: List[Optional[float]] = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse <= floor or fine <= floor:
            orders.append(None)
        else:
            orders.append(math.log2(coarse / fine))
    return orders


def _error_at_horizon(canon: CanonicalProblem, k: float, N: int, M: int) -> Tuple[Grid, float, float, float]:
    grid = build_grid(canon, N, M)
    result = integrate(canon, grid, record_norms=False)
    exact = exact_solution(canon.c, k, canon.horizon_T, grid.interior_nodes())
    e_max, e_l2 = error_norms(result.final, exact, grid.dz)
    return grid, e_max, e_l2, float(np.max(np.abs(exact)))


def convergence_study(
    canon: CanonicalProblem,
    k: float,
    refinement: str = "spatial",
    levels: int = 4,
    base_N: int = DEFAULT_SPATIAL_BASE_N,
    b: float = DEFAULT_SPATIAL_B,
    fine_N: int = DEFAULT_TEMPORAL_N,
    base_M: int = DEFAULT_TEMPORAL_BASE_M,
) -> ConvergenceTable:
    """Errors at the horizon against exact_solution(canon.c, k) under halving.

    canon must carry the traces of that exact solution (see
    manufactured_problem). Spatial refinement halves dz with dv = b dz^2
    rounded to a whole number of steps; temporal refinement halves dv on a
    fixed grid of fine_N cells.
    """
    if levels < 3:
        raise ValueError(f"收敛性研究至少需要 3 层，收到 levels={levels}")
    if refinement not in ("spatial", "temporal"):
        raise ValueError(f"未知的加密方式: {refinement}")

    runs = []
    for level in range(levels):
        if refinement == "spatial":
            N = base_N * 2 ** level
            dz = canon.length / N
            M = max(1, int(round(canon.horizon_T / (b * dz * dz))))
        else:
            N = fine_N
            M = base_M * 2 ** level
        grid, e_max, e_l2, scale = _error_at_horizon(canon, k, N, M)
        runs.append((grid.dz if refinement == "spatial" else grid.dv, e_max, e_l2, scale))
        logger.info("[convergence] refinement=%s N=%s M=%s error_max=%.6e", refinement, N, M, e_max)

    scale = max(r[3] for r in runs)
    orders_max = [None] + observed_orders([r[1] for r in runs], scale)
    orders_l2 = [None] + observed_orders([r[2] for r in runs], scale)
    table = ConvergenceTable(refinement=refinement)
    for (h, e_max, e_l2, _), o_max, o_l2 in zip(runs, orders_max, orders_l2):
        table.rows.append(ConvergenceRow(step=h, error_max=e_max, error_l2=e_l2, order_max=o_max, order_l2=o_l2))
    if not table.reliable:
        logger.warning("[convergence] errors reached the roundoff floor, orders unreliable")
    return table


def stability_probe(
    coeffs: SchemeCoefficients,
    N: int,
    steps: int = DEFAULT_PROBE_STEPS,
    seed: int = 0,
    initial: Optional[np.ndarray] = None,
    tail: int = 100,
) -> ProbeResult:
    """Max-norm growth of the homogeneous recurrence from bounded random data."""
    if steps < 1:
        raise ValueError(f"steps 至少为 1，收到 {steps}")
    stepper = CrankNicolsonStepper(coeffs, N)
    if initial is None:
        U = np.random.default_rng(seed).uniform(-1.0, 1.0, N - 1)
    else:
        U = np.asarray(initial, dtype=float).copy()
    zero = np.zeros(N - 1)

    start = float(np.max(np.abs(U)))
    if start == 0.0:
        return ProbeResult(overall_growth=0.0, max_step_growth=0.0, tail_step_growth=0.0, steps=steps)

    ratios = []
    current = start
    for _ in range(steps):
        U = stepper.step(U, zero)
        nxt = float(np.max(np.abs(U)))
        if current == 0.0:
            ratios.append(0.0)
        else:
            ratios.append(nxt / current)
        current = nxt

    tail_ratios = ratios[-min(tail, len(ratios)):]
    return ProbeResult(
        overall_growth=current / start,
        max_step_growth=max(ratios),
        tail_step_growth=float(np.mean(tail_ratios)),
        steps=steps,
    )
