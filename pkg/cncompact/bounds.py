"""Norm bounds for W = X^-1 Y, measured spectral norms and the condition-number check.

Everything that touches W here is matrix-free: X and X+Y are factored once
as sparse tridiagonal LU and every product with W, W^T, (I+W)^-1 is a
tridiagonal multiply followed by a factored solve.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator

from cncompact.errors import ConvergenceError, SingularSystemError
from cncompact.scheme import SchemeCoefficients, TridiagToeplitz, assemble_X, assemble_Y
from cncompact.spectral import (
    DEFAULT_DENSE_CAP,
    DEFAULT_EIG_CHECK_LIMIT,
    stability_certificate,
)
from cncompact.toeplitz import DEFAULT_FULL_INVERSE_LIMIT

logger = logging.getLogger(__name__)

Apply = Callable[[np.ndarray], np.ndarray]

XINV_FACTOR = math.sqrt(12.0 / 5.0)
DEFAULT_POWER_TOL = 1e-12
DEFAULT_POWER_MAX_ITER = 20000
DEFAULT_POWER_SEEDS = (1, 2, 3)
DEFAULT_LANCZOS_TOL = 1e-10
DEFAULT_DENSE_NORM_LIMIT = 512
NORM_METHODS = ("auto", "power", "lanczos", "dense")


@dataclass(frozen=True)
class ZMatrix:
    """Symmetric pentadiagonal Z = X X^T, stored by diagonals."""

    diag: np.ndarray
    off1: np.ndarray
    off2: np.ndarray

    @property
    def n(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        out = np.diag(self.diag)
        if self.n > 1:
            out += np.diag(self.off1, 1) + np.diag(self.off1, -1)
        if self.n > 2:
            out += np.diag(self.off2, 2) + np.diag(self.off2, -2)
        return out


@dataclass(frozen=True)
class NormBounds:
    xinv_bound: float
    y_bound: float
    w_bound: float
    cond_bound: float


@dataclass(frozen=True)
class NormEstimate:
    value: float
    method: str
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MatrixFreeOperator:
    n: int
    apply: Apply
    apply_transpose: Apply

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.apply(np.eye(self.n)), dtype=float)


@dataclass(frozen=True)
class ConditionReport:
    measured_w_norm: float
    w_norm_bound: float
    ratio: float
    measured_cond: Optional[float]
    cond_bound: float
    xinv_norm_bound: float
    y_norm_1inf: float
    hypothesis: str
    w_norm_method: str
    converged: bool

    @property
    def cond_within_bound(self) -> Optional[bool]:
        if self.measured_cond is None:
            return None
        return self.measured_cond <= self.cond_bound * (1.0 + 1e-9)


def z_matrix(coeffs: SchemeCoefficients, N: int) -> ZMatrix:
    if N < 2:
        raise ValueError(f"N 至少为 2（需要内部节点），收到 N={N}")
    n = N - 1
    c1, c2, c3 = coeffs.c1, coeffs.c2, coeffs.c3
    diag = np.full(n, c1 * c1 + c2 * c2 + c3 * c3)
    diag[0] = c2 * c2 + c3 * c3
    diag[-1] = c1 * c1 + c2 * c2
    if n == 1:
        diag[0] = c2 * c2
    return ZMatrix(
        diag=diag,
        off1=np.full(max(n - 1, 0), c2 * (c1 + c3)),
        off2=np.full(max(n - 2, 0), c1 * c3),
    )


def z_disc_margins(coeffs: SchemeCoefficients) -> Tuple[float, float, float, float]:
    """(a - r) for the first-row, second-row, interior and last-row discs of Z.

    Written in stencil units: c_i = k_i / (24 dv) with k1 = 2 + dz, k2 = 20,
    k3 = 2 - dz. The interior disc is the tightest for every 0 < dz < 2.
    """
    dz, dv = coeffs.dz, coeffs.dv
    if not dz < 2:
        raise ValueError(f"违反前提 0 < dz < 2: dz={dz}")
    unit = 1.0 / (576.0 * dv * dv)
    return (
        (320.0 - 4.0 * dz + 2.0 * dz * dz) * unit,
        (244.0 + 3.0 * dz * dz) * unit,
        (240.0 + 4.0 * dz * dz) * unit,
        (320.0 + 4.0 * dz + 2.0 * dz * dz) * unit,
    )


def rho_min_lower_bound(dz: float, dv: float) -> float:
    if not 0 < dz < 2:
        raise ValueError(f"违反前提 0 < dz < 2: dz={dz}")
    return (60.0 + dz * dz) / (144.0 * dv * dv)


def rho_min_simplified_bound(dv: float) -> float:
    return 5.0 / (12.0 * dv * dv)


def norm_bounds(coeffs: SchemeCoefficients) -> NormBounds:
    c, dz, dv = coeffs.c, coeffs.dz, coeffs.dv
    if not dz < 2:
        raise ValueError(f"违反前提 0 < dz < 2: dz={dz}")
    xinv_bound = XINV_FACTOR * dv
    y_bound = 2.0 * c / dz ** 2 + c / 6.0
    w_bound = xinv_bound * y_bound
    return NormBounds(xinv_bound=xinv_bound, y_bound=y_bound, w_bound=w_bound, cond_bound=1.0 + w_bound)


def unit_bound_dv(c: float, dz: float) -> float:
    """dv at which w_bound equals exactly 1."""
    return math.sqrt(5.0 / 12.0) / (2.0 * c / dz ** 2 + c / 6.0)


class TridiagFactor:
    """Sparse LU of a tridiagonal Toeplitz matrix; solves with it and its transpose."""

    def __init__(self, T: TridiagToeplitz) -> None:
        self.n = T.n
        if T.n == 1:
            A = scipy.sparse.csc_matrix([[T.diag]])
        else:
            sub, diag, sup = T.bands()
            A = scipy.sparse.diags([sub[1:], diag, sup[:-1]], [-1, 0, 1], format="csc")
        try:
            self._lu = scipy.sparse.linalg.splu(A)
        except RuntimeError as exc:
            raise SingularSystemError(f"三对角矩阵分解失败: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=float))

    def solve_transpose(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=float), trans="T")


def w_operator(coeffs: SchemeCoefficients, N: int) -> MatrixFreeOperator:
    X, Y = assemble_X(coeffs, N), assemble_Y(coeffs, N)
    fx = TridiagFactor(X)
    return MatrixFreeOperator(
        n=X.n,
        apply=lambda x: fx.solve(Y.matvec(x)),
        apply_transpose=lambda x: Y.rmatvec(fx.solve_transpose(x)),
    )


def i_plus_w_operator(coeffs: SchemeCoefficients, N: int) -> MatrixFreeOperator:
    W = w_operator(coeffs, N)
    return MatrixFreeOperator(
        n=W.n,
        apply=lambda x: x + W.apply(x),
        apply_transpose=lambda x: x + W.apply_transpose(x),
    )


def i_plus_w_inverse_operator(coeffs: SchemeCoefficients, N: int) -> MatrixFreeOperator:
    """(I+W)^-1 = (X+Y)^-1 X, applied as w -> (X+Y)^-1 (X w)."""
    X, Y = assemble_X(coeffs, N), assemble_Y(coeffs, N)
    fs = TridiagFactor(X + Y)
    return MatrixFreeOperator(
        n=X.n,
        apply=lambda x: fs.solve(X.matvec(x)),
        apply_transpose=lambda x: X.rmatvec(fs.solve_transpose(x)),
    )


def xinv_operator(coeffs: SchemeCoefficients, N: int) -> MatrixFreeOperator:
    X = assemble_X(coeffs, N)
    fx = TridiagFactor(X)
    return MatrixFreeOperator(n=X.n, apply=fx.solve, apply_transpose=fx.solve_transpose)


def _power_run(apply: Apply, apply_transpose: Apply, n: int, seed: int, tol: float, max_iter: int):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        y = apply(x)
        sigma = float(np.linalg.norm(y))
        z = apply_transpose(y)
        z_norm = float(np.linalg.norm(z))
        if z_norm == 0.0:
            return sigma, it, True
        if it > 1 and abs(sigma - estimate) < tol * sigma:
            return sigma, it, True
        estimate = sigma
        x = z / z_norm
    return estimate, max_iter, False


def spectral_norm(
    apply: Apply,
    apply_transpose: Apply,
    n: int,
    tol: float = DEFAULT_POWER_TOL,
    max_iter: int = DEFAULT_POWER_MAX_ITER,
    seeds: Sequence[int] = DEFAULT_POWER_SEEDS,
) -> NormEstimate:
    """Largest singular value by power iteration on apply_transpose(apply(.)).

    Each seed restarts from a fresh pseudo-random vector; the largest
    converged estimate wins. Raises ConvergenceError when no restart meets
    the relative-change criterion within max_iter.
    """
    if n < 1:
        raise ValueError(f"算子阶数至少为 1，收到 n={n}")
    best, best_converged, total = 0.0, None, 0
    for seed in seeds:
        sigma, iterations, ok = _power_run(apply, apply_transpose, n, seed, tol, max_iter)
        total += iterations
        logger.debug("[norm] power seed=%s sigma=%.12e iterations=%s converged=%s", seed, sigma, iterations, ok)
        best = max(best, sigma)
        if ok:
            best_converged = sigma if best_converged is None else max(best_converged, sigma)
    if best_converged is None:
        raise ConvergenceError(
            f"幂迭代未收敛: n={n}, 最佳估计={best:.6e}", estimate=best, iterations=total
        )
    if best > best_converged * (1.0 + tol):
        logger.warning("[norm] unconverged restart exceeded converged estimate: %.6e > %.6e", best, best_converged)
    return NormEstimate(value=best_converged, method="power", iterations=total, converged=True)


def lanczos_norm(
    apply: Apply,
    apply_transpose: Apply,
    n: int,
    tol: float = DEFAULT_LANCZOS_TOL,
    seed: int = DEFAULT_POWER_SEEDS[0],
) -> NormEstimate:
    """Largest eigenvalue of the normal operator through ARPACK, square-rooted."""
    if n < 3:
        return dense_norm(apply, n)
    counter = {"matvec": 0}

    def normal(x: np.ndarray) -> np.ndarray:
        counter["matvec"] += 1
        return apply_transpose(apply(np.ravel(x)))

    op = LinearOperator((n, n), matvec=normal, rmatvec=normal, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        vals = scipy.sparse.linalg.eigsh(op, k=1, which="LA", tol=tol, v0=v0, return_eigenvectors=False)
        converged = True
    except ArpackNoConvergence as exc:
        vals = exc.eigenvalues
        converged = False
        if vals is None or len(vals) == 0:
            raise ConvergenceError(
                f"Lanczos 未收敛且无 Ritz 值: n={n}", estimate=math.nan, iterations=counter["matvec"]
            ) from exc
        logger.warning("[norm] lanczos not converged n=%s, using best Ritz value", n)
    value = math.sqrt(max(float(np.max(vals)), 0.0))
    return NormEstimate(value=value, method="lanczos", iterations=counter["matvec"], converged=converged)


def dense_norm(apply: Apply, n: int) -> NormEstimate:
    A = np.asarray(apply(np.eye(n)), dtype=float).reshape(n, n)
    return NormEstimate(value=float(np.linalg.norm(A, 2)), method="dense", iterations=0, converged=True)


def largest_singular_value(
    op: MatrixFreeOperator,
    method: str = "auto",
    dense_limit: int = DEFAULT_DENSE_NORM_LIMIT,
    power_tol: float = DEFAULT_POWER_TOL,
    power_max_iter: int = DEFAULT_POWER_MAX_ITER,
    lanczos_tol: float = DEFAULT_LANCZOS_TOL,
    seed: int = DEFAULT_POWER_SEEDS[0],
) -> NormEstimate:
    if method not in NORM_METHODS:
        raise ValueError(f"未知的范数方法: {method}")
    if method == "auto":
        method = "dense" if op.n <= dense_limit else "lanczos"
    if method == "dense":
        return dense_norm(op.apply, op.n)
    if method == "power":
        return spectral_norm(op.apply, op.apply_transpose, op.n, tol=power_tol, max_iter=power_max_iter)
    return lanczos_norm(op.apply, op.apply_transpose, op.n, tol=lanczos_tol, seed=seed)


def xinv_norm(coeffs: SchemeCoefficients, N: int, method: str = "auto") -> float:
    return largest_singular_value(xinv_operator(coeffs, N), method=method).value


def y_norms(coeffs: SchemeCoefficients, N: int) -> Tuple[float, float]:
    """(||Y||_1, ||Y||_inf) of the assembled Y."""
    Y = assemble_Y(coeffs, N)
    return Y.norm_1(), Y.norm_inf()


def w_norm(coeffs: SchemeCoefficients, N: int, method: str = "auto", **kwargs) -> NormEstimate:
    return largest_singular_value(w_operator(coeffs, N), method=method, **kwargs)


def w_norm_ratio(coeffs: SchemeCoefficients, N: int, method: str = "auto", **kwargs) -> Tuple[NormEstimate, float, float]:
    """(measured ||W||_2, w_bound, measured / w_bound)."""
    estimate = w_norm(coeffs, N, method=method, **kwargs)
    bound = norm_bounds(coeffs).w_bound
    return estimate, bound, estimate.value / bound


def condition_report(
    coeffs: SchemeCoefficients,
    N: int,
    method: str = "auto",
    eig_check_limit: int = DEFAULT_EIG_CHECK_LIMIT,
    dense_cap: int = DEFAULT_DENSE_CAP,
    full_inverse_limit: int = DEFAULT_FULL_INVERSE_LIMIT,
    **norm_kwargs,
) -> ConditionReport:
    """Measured ||W||_2 and kappa_2(I+W) next to their bounds.

    kappa_2(I+W) is only measured when min Re rho(W) > 0 is certified;
    otherwise measured_cond stays None and hypothesis says why.
    """
    bounds = norm_bounds(coeffs)
    estimate, _, ratio = w_norm_ratio(coeffs, N, method=method, **norm_kwargs)

    certified, how = stability_certificate(
        coeffs, N, eig_check_limit=eig_check_limit, dense_cap=dense_cap, full_inverse_limit=full_inverse_limit
    )
    measured_cond = None
    converged = estimate.converged
    if certified:
        forward = largest_singular_value(i_plus_w_operator(coeffs, N), method=method, **norm_kwargs)
        backward = largest_singular_value(i_plus_w_inverse_operator(coeffs, N), method=method, **norm_kwargs)
        measured_cond = forward.value * backward.value
        converged = converged and forward.converged and backward.converged
        hypothesis = f"verified({how})"
    elif how == "eigensolver":
        hypothesis = "violated(eigensolver)"
    else:
        hypothesis = "unverified hypothesis"

    return ConditionReport(
        measured_w_norm=estimate.value,
        w_norm_bound=bounds.w_bound,
        ratio=ratio,
        measured_cond=measured_cond,
        cond_bound=bounds.cond_bound,
        xinv_norm_bound=bounds.xinv_bound,
        y_norm_1inf=bounds.y_bound,
        hypothesis=hypothesis,
        w_norm_method=estimate.method,
        converged=converged,
    )

