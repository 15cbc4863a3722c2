"""Continuous problem, canonical transformation, grid and the exact-solution oracle."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SpaceFunction = Callable[[float], float]
TimeFunction = Callable[[float], float]

COMPAT_TOL = 1e-12
SPAN_TOL = 1e-12
DEFAULT_ORACLE_K = 0.5


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class PdeProblem:
    """psi_v + alpha1 psi_x - alpha2 psi_xx = 0 on (x_left, x_right) x (0, T]."""

    alpha1: float
    alpha2: float
    x_left: float
    x_right: float
    horizon_T: float
    f: SpaceFunction = field(repr=False)
    g1: TimeFunction = field(repr=False)
    g2: TimeFunction = field(repr=False)

    def __post_init__(self) -> None:
        if not self.alpha2 > 0:
            raise ValueError(f"alpha2 必须为正（不是扩散问题）: alpha2={self.alpha2}")
        if not self.x_left < self.x_right:
            raise ValueError(f"区间无效: x_left={self.x_left} >= x_right={self.x_right}")
        if not self.horizon_T > 0:
            raise ValueError(f"时间上限必须为正: T={self.horizon_T}")
        check_compatibility(self.f, self.g1, self.g2, self.x_left, self.x_right)


@dataclass(frozen=True)
class CanonicalProblem:
    """u_v + c u_z - c u_zz = 0 on (z_left, z_right) x (0, T]."""

    c: float
    z_left: float
    z_right: float
    horizon_T: float
    f: SpaceFunction = field(repr=False)
    g1: TimeFunction = field(repr=False)
    g2: TimeFunction = field(repr=False)

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValueError(f"系数 c 必须为正: c={self.c}")
        if not self.z_left < self.z_right:
            raise ValueError(f"区间无效: z_left={self.z_left} >= z_right={self.z_right}")
        if not self.horizon_T > 0:
            raise ValueError(f"时间上限必须为正: T={self.horizon_T}")
        check_compatibility(self.f, self.g1, self.g2, self.z_left, self.z_right)

    @property
    def length(self) -> float:
        return self.z_right - self.z_left


@dataclass(frozen=True)
class Grid:
    N: int
    M: int
    z_left: float
    z_right: float
    horizon_T: float

    @property
    def dz(self) -> float:
        return (self.z_right - self.z_left) / self.N

    @property
    def dv(self) -> float:
        return self.horizon_T / self.M

    @property
    def interior_size(self) -> int:
        return self.N - 1

    def nodes(self) -> np.ndarray:
        return self.z_left + np.arange(self.N + 1) * self.dz

    def interior_nodes(self) -> np.ndarray:
        return self.nodes()[1:-1]

    def time_levels(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dv


def check_compatibility(
    f: SpaceFunction, g1: TimeFunction, g2: TimeFunction, left: float, right: float
) -> None:
    if not _close(float(g1(0.0)), float(f(left)), COMPAT_TOL):
        raise ValueError(f"相容性条件不满足: g1(0)={g1(0.0)} != f(left)={f(left)}")
    if not _close(float(g2(0.0)), float(f(right)), COMPAT_TOL):
        raise ValueError(f"相容性条件不满足: g2(0)={g2(0.0)} != f(right)={f(right)}")


def canonicalize(pde: PdeProblem) -> CanonicalProblem:
    """Apply u = (alpha2/alpha1) psi, z = (alpha1/alpha2) x.

    A negative alpha1 flips the interval; endpoints are reordered so that
    z_left < z_right and the boundary functions swap sides with them.
    """
    if pde.alpha1 == 0:
        raise ValueError("alpha1 = 0 时变换无定义（纯扩散情形不在范围内）")

    scale_x = pde.alpha2 / pde.alpha1  # x = scale_x * z
    scale_u = pde.alpha2 / pde.alpha1  # u = scale_u * psi
    c = pde.alpha1 ** 2 / pde.alpha2

    z_a = pde.x_left / scale_x
    z_b = pde.x_right / scale_x
    g_a, g_b = pde.g1, pde.g2
    if z_a > z_b:
        z_a, z_b = z_b, z_a
        g_a, g_b = g_b, g_a

    f, g_left, g_right = pde.f, g_a, g_b
    return CanonicalProblem(
        c=c,
        z_left=z_a,
        z_right=z_b,
        horizon_T=pde.horizon_T,
        f=lambda z: scale_u * f(scale_x * z),
        g1=lambda v: scale_u * g_left(v),
        g2=lambda v: scale_u * g_right(v),
    )


def canonical_on_x(pde: PdeProblem) -> CanonicalProblem:
    """Canonical coefficient c = alpha1^2/alpha2 kept on the original x-interval."""
    if pde.alpha1 == 0:
        raise ValueError("alpha1 = 0 时变换无定义（纯扩散情形不在范围内）")
    return CanonicalProblem(
        c=pde.alpha1 ** 2 / pde.alpha2,
        z_left=pde.x_left,
        z_right=pde.x_right,
        horizon_T=pde.horizon_T,
        f=pde.f,
        g1=pde.g1,
        g2=pde.g2,
    )


def canonical_from_c(
    c: float,
    z_left: float,
    z_right: float,
    horizon_T: float,
    f: SpaceFunction,
    g1: TimeFunction,
    g2: TimeFunction,
) -> CanonicalProblem:
    return CanonicalProblem(c=c, z_left=z_left, z_right=z_right, horizon_T=horizon_T, f=f, g1=g1, g2=g2)


def build_grid(canon: CanonicalProblem, N: int, M: int) -> Grid:
    if N < 2:
        raise ValueError(f"N 至少为 2（需要内部节点），收到 N={N}")
    if M < 1:
        raise ValueError(f"M 至少为 1，收到 M={M}")
    grid = Grid(N=N, M=M, z_left=canon.z_left, z_right=canon.z_right, horizon_T=canon.horizon_T)
    if not grid.dz < 2:
        raise ValueError(f"空间步长必须满足 0 < dz < 2，当前 dz={grid.dz}")
    span = grid.z_left + N * grid.dz
    if not _close(span, grid.z_right, SPAN_TOL):
        raise ValueError(f"网格未能精确覆盖区间: {span} != {grid.z_right}")
    return grid


def exact_solution(c: float, k: float, v: float | np.ndarray, z: float | np.ndarray):
    """u(v, z) = exp(k z + c (k^2 - k) v), an exact solution of the canonical equation."""
    return np.exp(k * np.asarray(z) + c * (k * k - k) * np.asarray(v))


def manufactured_problem(
    c: float,
    k: float = DEFAULT_ORACLE_K,
    z_left: float = 0.0,
    z_right: float = 1.0,
    horizon_T: float = 1.0,
) -> CanonicalProblem:
    return CanonicalProblem(
        c=c,
        z_left=z_left,
        z_right=z_right,
        horizon_T=horizon_T,
        f=lambda z: float(exact_solution(c, k, 0.0, z)),
        g1=lambda v: float(exact_solution(c, k, v, z_left)),
        g2=lambda v: float(exact_solution(c, k, v, z_right)),
    )


def sample(fn: Callable[[float], float], points: np.ndarray) -> np.ndarray:
    """Evaluate a pointwise callable at each grid point."""
    return np.array([float(fn(float(p))) for p in points], dtype=float)
