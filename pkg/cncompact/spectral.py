import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from cncompact.errors import EigenSolverError, SingularSystemError
from cncompact.scheme import SchemeCoefficients, assemble_X, assemble_Y, coefficients, mass_symbol_ratio
from cncompact.toeplitz import DEFAULT_FULL_INVERSE_LIMIT, p_poly, solve_toeplitz, toeplitz_inverse

logger = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 4096
DEFAULT_EIG_TOL = 1e-10
DEFAULT_EIG_CHECK_LIMIT = 1024
CONTAINMENT_SLACK = 1e-9


@dataclass(frozen=True)
class GerschgorinDisk:
    center: float
    radius: float
    row: int

    @property
    def margin(self) -> float:
        return self.center - self.radius

    def contains(self, z: complex, slack: float = CONTAINMENT_SLACK) -> bool:
        return abs(z - self.center) <= self.radius + slack * max(1.0, abs(self.center) + self.radius)


@dataclass(frozen=True)
class AmplificationSpectrum:
    values: np.ndarray
    min_real_part: float
    spectral_radius_H: float
    stable: bool


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    min_real_part: float
    disks: List[GerschgorinDisk]
    gerschgorin_lower_bound: float
    amplification_eigs: np.ndarray
    spectral_radius_H: float
    stable: bool
    eig_residual: float
    edge_disks_contain: bool


def assemble_W(
    coeffs: SchemeCoefficients,
    N: int,
    method: str = "auto",
    full_inverse_limit: int = DEFAULT_FULL_INVERSE_LIMIT,
) -> np.ndarray:
    """Dense W = X^-1 Y.

    method="closed" multiplies the closed-form inverse of X by Y column by
    column, method="solve" runs one multi-column tridiagonal solve
    X W = Y; "auto" picks closed form up to full_inverse_limit.
    """
    X, Y = assemble_X(coeffs, N), assemble_Y(coeffs, N)
    n = X.n
    if method == "auto":
        method = "closed" if n <= full_inverse_limit else "solve"

    if method == "solve":
        return solve_toeplitz(X, Y.to_dense())
    if method != "closed":
        raise ValueError(f"未知的 W 组装方式: {method}")

    xinv = toeplitz_inverse(X).dense()
    # column j of Y holds y3 at row j-1, y2 at row j, y1 at row j+1
    W = Y.diag * xinv
    W[:, 1:] += Y.sup * xinv[:, :-1]
    W[:, :-1] += Y.sub * xinv[:, 1:]
    return W


def gerschgorin(B: np.ndarray) -> List[GerschgorinDisk]:
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"需要方阵，收到形状 {B.shape}")
    centers = np.real(np.diag(B))
    radii = np.sum(np.abs(B), axis=1) - np.abs(np.diag(B))
    return [
        GerschgorinDisk(center=float(a), radius=float(max(r, 0.0)), row=i + 1)
        for i, (a, r) in enumerate(zip(centers, radii))
    ]


def gerschgorin_lower_bound(disks: Sequence[GerschgorinDisk]) -> float:
    """min(center - radius): a certified lower bound on every real part for real B."""
    return min(d.margin for d in disks)


def in_disk_union(disks: Sequence[GerschgorinDisk], eigs, slack: float = CONTAINMENT_SLACK) -> bool:
    return all(any(d.contains(complex(z), slack) for d in disks) for z in eigs)


def edge_disk_containment(disks: Sequence[GerschgorinDisk], eigs, slack: float = CONTAINMENT_SLACK) -> bool:
    """Whether the first-row and last-row disks alone already hold every eigenvalue."""
    return in_disk_union([disks[0], disks[-1]], eigs, slack)


def prop1_margins(coeffs: SchemeCoefficients) -> Tuple[float, float]:
    """(a1 - r1, a2 - r2) for N = 3 through the closed-form entries of X^-1."""
    dz, dv = coeffs.dz, coeffs.dv
    if not dz < 2:
        raise ValueError(f"违反前提 0 < dz < 2: dz={dz}")
    y1, y2, y3 = coeffs.y1, coeffs.y2, coeffs.y3
    prefactor = 24.0 * dv / math.sqrt(4.0 - dz * dz)
    x = mass_symbol_ratio(dz)
    p1, p2 = p_poly(1, x), p_poly(2, x)
    geom = math.sqrt((2.0 + dz) / (2.0 - dz))

    first = prefactor * (y2 * p1 / p2 - y1 / (geom * p2) + y3 * p1 / p2 - y2 / (geom * p2))
    second = prefactor * (y2 * p1 / p2 - geom * y3 / p2 - geom * y2 / p2 + y1 * p1 / p2)
    return first, second


def eigen_decomposition(
    B: np.ndarray, dense_cap: int = DEFAULT_DENSE_CAP
) -> Tuple[np.ndarray, float]:
    """Eigenvalues and the worst relative residual ||B v - rho v|| / ||B||.

    ||B||_F / sqrt(n) stands in for ||B||_2 (it never exceeds it), so the
    reported residual is an upper estimate of the true relative backward error.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if n > dense_cap:
        raise ValueError(f"矩阵阶数 {n} 超过稠密上限 {dense_cap}")
    try:
        eigs, vecs = scipy.linalg.eig(B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"特征值迭代未收敛: {exc}", partial=[]) from exc

    scale = np.linalg.norm(B, "fro") / math.sqrt(n)
    if scale == 0.0:
        return eigs, 0.0
    residual = np.linalg.norm(B @ vecs - vecs * eigs, axis=0)
    return eigs, float(np.max(residual) / scale)


def _check_residual(eigs: np.ndarray, residual: float, tol: float) -> None:
    if residual > tol:
        raise EigenSolverError(
            f"特征值残差 {residual:.3e} 超过容差 {tol:.1e}（n={len(eigs)}）", partial=eigs
        )


def eigenvalues(
    B: np.ndarray,
    tol: float = DEFAULT_EIG_TOL,
    dense_cap: int = DEFAULT_DENSE_CAP,
    check_residual: bool = True,
) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if not check_residual:
        if B.shape[0] > dense_cap:
            raise ValueError(f"矩阵阶数 {B.shape[0]} 超过稠密上限 {dense_cap}")
        try:
            return scipy.linalg.eigvals(B)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigenSolverError(f"特征值迭代未收敛: {exc}", partial=[]) from exc

    eigs, residual = eigen_decomposition(B, dense_cap=dense_cap)
    _check_residual(eigs, residual, tol)
    return eigs


def amplification_spectrum(eigs) -> AmplificationSpectrum:
    """Map rho -> (1 - rho) / (1 + rho); stable iff every Re rho > 0 strictly."""
    eigs = np.asarray(eigs, dtype=complex)
    if np.any(eigs == -1.0):
        raise SingularSystemError("存在特征值 rho = -1，放大矩阵奇异")
    values = (1.0 - eigs) / (1.0 + eigs)
    min_real = float(np.min(eigs.real))
    return AmplificationSpectrum(
        values=values,
        min_real_part=min_real,
        spectral_radius_H=float(np.max(np.abs(values))),
        stable=min_real > 0.0,
    )


def amplification_matrix(coeffs: SchemeCoefficients, N: int) -> np.ndarray:
    """Dense H = (X+Y)^-1 (X-Y); for small N only."""
    X, Y = assemble_X(coeffs, N), assemble_Y(coeffs, N)
    return solve_toeplitz(X + Y, (X - Y).to_dense())


def spectral_report(
    coeffs: SchemeCoefficients,
    N: int,
    tol: float = DEFAULT_EIG_TOL,
    dense_cap: int = DEFAULT_DENSE_CAP,
    full_inverse_limit: int = DEFAULT_FULL_INVERSE_LIMIT,
    check_residual: bool = True,
) -> SpectralReport:
    if N - 1 > dense_cap:
        raise ValueError(f"矩阵阶数 {N - 1} 超过稠密上限 {dense_cap}")
    W = assemble_W(coeffs, N, full_inverse_limit=full_inverse_limit)
    disks = gerschgorin(W)
    if check_residual:
        eigs, residual = eigen_decomposition(W, dense_cap=dense_cap)
        _check_residual(eigs, residual, tol)
    else:
        eigs, residual = eigenvalues(W, dense_cap=dense_cap, check_residual=False), math.nan
    if not in_disk_union(disks, eigs):
        logger.warning("[eig] N=%s eigenvalue outside Gerschgorin union beyond slack", N)
    amp = amplification_spectrum(eigs)
    return SpectralReport(
        eigenvalues=eigs,
        min_real_part=amp.min_real_part,
        disks=disks,
        gerschgorin_lower_bound=gerschgorin_lower_bound(disks),
        amplification_eigs=amp.values,
        spectral_radius_H=amp.spectral_radius_H,
        stable=amp.stable,
        eig_residual=residual,
        edge_disks_contain=edge_disk_containment(disks, eigs),
    )


def stability_certificate(
    coeffs: SchemeCoefficients,
    N: int,
    eig_check_limit: int = DEFAULT_EIG_CHECK_LIMIT,
    dense_cap: int = DEFAULT_DENSE_CAP,
    full_inverse_limit: int = DEFAULT_FULL_INVERSE_LIMIT,
) -> Tuple[bool, str]:
    """Whether min Re rho(W) > 0 is established, and how.

    Only the eigensolver can refute the hypothesis: (False, "eigensolver")
    means min Re rho <= 0 was found. A Gerschgorin bound that is not
    positive proves nothing, so that case is (False, "unverified").
    """
    n = N - 1
    if n <= eig_check_limit and n <= dense_cap:
        eigs = eigenvalues(assemble_W(coeffs, N, full_inverse_limit=full_inverse_limit),
                           dense_cap=dense_cap, check_residual=False)
        return bool(np.min(eigs.real) > 0.0), "eigensolver"
    if n <= dense_cap:
        W = assemble_W(coeffs, N, full_inverse_limit=full_inverse_limit)
        lower = gerschgorin_lower_bound(gerschgorin(W))
        if lower > 0.0:
            return True, "gerschgorin"
        logger.debug("[eig] N=%s gerschgorin lower bound %.3e does not certify", N, lower)
    return False, "unverified"


def prop1_refinement(c: float, b: float, levels: Sequence[int]) -> List[Tuple[float, float, float, float]]:
    """(dz, dv, first, second) N=3 margins along dz = 2^-j, dv = b dz^2."""
    rows = []
    for j in levels:
        dz = 2.0 ** (-j)
        dv = b * dz * dz
        first, second = prop1_margins(coefficients(c, dz, dv))
        rows.append((dz, dv, first, second))
    return rows
