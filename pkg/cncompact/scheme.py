"""Stencil constants, the X and Y Toeplitz operators and the boundary forcing.

The fully discrete system at every interior node q is

    (c1 + y1) U[q-1]' + (c2 + y2) U[q]' + (c3 + y3) U[q+1]'
        = (c1 - y1) U[q-1] + (c2 - y2) U[q] + (c3 - y3) U[q+1]

with ' marking time level m+1, i.e. (X+Y) U' = (X-Y) U + F.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

TimeFunction = Callable[[float], float]


@dataclass(frozen=True)
class SchemeCoefficients:
    c: float
    dz: float
    dv: float
    c1: float
    c2: float
    c3: float
    y1: float
    y2: float
    y3: float

    @property
    def b(self) -> float:
        return self.dv / self.dz ** 2


@dataclass(frozen=True)
class TridiagToeplitz:
    """Constant-diagonal tridiagonal matrix of order n, stored as three scalars."""

    sub: float
    diag: float
    sup: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"矩阵阶数至少为 1，收到 n={self.n}")

    def bands(self):
        """Return (sub, diag, sup) as full-length vectors for solve_tridiagonal."""
        n = self.n
        return np.full(n, self.sub), np.full(n, self.diag), np.full(n, self.sup)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.diag * x
        out[1:] += self.sub * x[:-1]
        out[:-1] += self.sup * x[1:]
        return out

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        return self.transpose().matvec(x)

    def transpose(self) -> "TridiagToeplitz":
        return TridiagToeplitz(sub=self.sup, diag=self.diag, sup=self.sub, n=self.n)

    def to_dense(self) -> np.ndarray:
        n = self.n
        out = np.diag(np.full(n, self.diag))
        if n > 1:
            out += np.diag(np.full(n - 1, self.sub), -1)
            out += np.diag(np.full(n - 1, self.sup), 1)
        return out

    def __add__(self, other: "TridiagToeplitz") -> "TridiagToeplitz":
        self._check_order(other)
        return TridiagToeplitz(self.sub + other.sub, self.diag + other.diag, self.sup + other.sup, self.n)

    def __sub__(self, other: "TridiagToeplitz") -> "TridiagToeplitz":
        self._check_order(other)
        return TridiagToeplitz(self.sub - other.sub, self.diag - other.diag, self.sup - other.sup, self.n)

    def _check_order(self, other: "TridiagToeplitz") -> None:
        if other.n != self.n:
            raise ValueError(f"矩阵阶数不一致: {self.n} != {other.n}")

    def row_sums(self) -> np.ndarray:
        return self.matvec(np.ones(self.n))

    def norm_inf(self) -> float:
        if self.n == 1:
            return abs(self.diag)
        if self.n == 2:
            return max(abs(self.diag) + abs(self.sup), abs(self.sub) + abs(self.diag))
        return abs(self.sub) + abs(self.diag) + abs(self.sup)

    def norm_1(self) -> float:
        return self.transpose().norm_inf()


def _check_steps(c: float, dz: float, dv: float) -> None:
    if not c > 0:
        raise ValueError(f"系数 c 必须为正: c={c}")
    if not dz > 0 or not dv > 0:
        raise ValueError(f"步长必须为正: dz={dz}, dv={dv}")
    if not dz < 2:
        raise ValueError(f"违反前提 0 < dz < 2: dz={dz}")


def coefficients(c: float, dz: float, dv: float) -> SchemeCoefficients:
    _check_steps(c, dz, dv)
    b = dv / dz ** 2
    k = c / (2.0 * dv)
    return SchemeCoefficients(
        c=c,
        dz=dz,
        dv=dv,
        c1=(2.0 + dz) / (24.0 * dv),
        c2=5.0 / (6.0 * dv),
        c3=(2.0 - dz) / (24.0 * dv),
        y1=-k * ((1.0 + dz / 2.0) * b + dv / 12.0),
        y2=k * (2.0 * b + dv / 6.0),
        y3=-k * ((1.0 - dz / 2.0) * b + dv / 12.0),
    )


def fraction_form(c: float, dz: float, dv: float):
    """y1, y2, y3 as they appear in the rearranged nodal equation, before b is introduced."""
    _check_steps(c, dz, dv)
    diffusive = (c + c * dz ** 2 / 12.0) / dz ** 2
    return (
        -c / (4.0 * dz) - diffusive / 2.0,
        diffusive,
        c / (4.0 * dz) - diffusive / 2.0,
    )


def _interior(N: int) -> int:
    if N < 2:
        raise ValueError(f"N 至少为 2（需要内部节点），收到 N={N}")
    return N - 1


def assemble_X(coeffs: SchemeCoefficients, N: int) -> TridiagToeplitz:
    return TridiagToeplitz(sub=coeffs.c1, diag=coeffs.c2, sup=coeffs.c3, n=_interior(N))


def assemble_Y(coeffs: SchemeCoefficients, N: int) -> TridiagToeplitz:
    return TridiagToeplitz(sub=coeffs.y1, diag=coeffs.y2, sup=coeffs.y3, n=_interior(N))


def boundary_vector(
    coeffs: SchemeCoefficients,
    g1: TimeFunction,
    g2: TimeFunction,
    m: int,
    dv: float,
    N: int,
) -> np.ndarray:
    n = _interior(N)
    v_now, v_next = m * dv, (m + 1) * dv
    F = np.zeros(n)
    F[0] += (coeffs.c1 - coeffs.y1) * g1(v_now) - (coeffs.c1 + coeffs.y1) * g1(v_next)
    F[-1] += (coeffs.c3 - coeffs.y3) * g2(v_now) - (coeffs.c3 + coeffs.y3) * g2(v_next)
    return F


def local_residual(
    coeffs: SchemeCoefficients,
    u: Callable[[float, np.ndarray], np.ndarray],
    nodes: np.ndarray,
    m: int,
) -> np.ndarray:
    """(X+Y) u^{m+1} - (X-Y) u^m - F^m at the interior nodes for an exact solution u(v, z)."""
    N = len(nodes) - 1
    X, Y = assemble_X(coeffs, N), assemble_Y(coeffs, N)
    dv = coeffs.dv
    z_in = nodes[1:-1]
    now = np.asarray(u(m * dv, z_in), dtype=float)
    nxt = np.asarray(u((m + 1) * dv, z_in), dtype=float)
    F = boundary_vector(
        coeffs,
        lambda v: float(u(v, nodes[0])),
        lambda v: float(u(v, nodes[-1])),
        m,
        dv,
        N,
    )
    return (X + Y).matvec(nxt) - (X - Y).matvec(now) - F


def mass_symbol_ratio(dz: float) -> float:
    """c2 / (2 sqrt(c1 c3)) = 10 / sqrt(4 - dz^2); independent of dv."""
    return 10.0 / math.sqrt(4.0 - dz * dz)
