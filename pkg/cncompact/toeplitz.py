"""Closed-form inverse of tridiagonal Toeplitz matrices and a tridiagonal solver.

For T = tridiag(a, d, e) of order n with a * e > 0,

    (T^-1)[q, q'] = (-1)^(q-q') / sqrt(a e) * sqrt(a / e)^(q-q')
                    * p[min(q,q')-1] * p[n-max(q,q')] / p[n]

with every p evaluated at x = d / (2 sqrt(a e)) and indices 1-based.
"""
import logging
import math
from functools import lru_cache

import numpy as np
import scipy.linalg

from cncompact.errors import InapplicableFormulaError, SingularSystemError
from cncompact.scheme import TridiagToeplitz

logger = logging.getLogger(__name__)

LOG_FORM_THRESHOLD = 60
SINGULAR_DENOMINATOR = 1e-300
DEFAULT_FULL_INVERSE_LIMIT = 512


def p_poly(n: int, x: float) -> float:
    """p_0 = 1, p_1 = 2x, p_{k+1} = 2x p_k - p_{k-1}."""
    if n < 0:
        raise ValueError(f"n 必须非负，收到 n={n}")
    prev, cur = 1.0, 2.0 * x
    if n == 0:
        return prev
    for _ in range(n - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


def p_poly_sum(n: int, x: float) -> float:
    """Explicit binomial-sum form; loses precision for large n, kept as an oracle."""
    if n < 0:
        raise ValueError(f"n 必须非负，收到 n={n}")
    total = 1.0
    for k in range(1, n // 2 + 1):
        total += (-1) ** k * math.comb(n - k, k) * (1.0 / (4.0 * x * x)) ** k
    return (2.0 * x) ** n * total


def p_log_table(n: int, x: float):
    """log|p_k| and sign(p_k) for k = 0..n via the ratio recurrence r_k = p_k / p_{k-1}.

    Ratios stay O(x), so no intermediate overflows even when p_n itself would.
    """
    logs = np.zeros(n + 1)
    signs = np.ones(n + 1)
    if n == 0:
        return logs, signs
    ratio = 2.0 * x
    for k in range(1, n + 1):
        if k > 1:
            if ratio == 0.0:
                # p_{k-1} = 0, so p_k = -p_{k-2} and the next ratio is infinite
                logs[k] = logs[k - 2]
                signs[k] = -signs[k - 2]
                ratio = math.inf
                continue
            ratio = 2.0 * x - 1.0 / ratio
        if ratio == 0.0:
            logs[k] = -math.inf
            signs[k] = 0.0
        else:
            logs[k] = logs[k - 1] + math.log(abs(ratio))
            signs[k] = signs[k - 1] * math.copysign(1.0, ratio)
    return logs, signs


class ToeplitzInverse:
    """Entries of T^-1 from the closed form; tables built once, read-only afterwards."""

    def __init__(self, source: TridiagToeplitz) -> None:
        a, d, e = source.sub, source.diag, source.sup
        n = source.n
        self.source = source
        self.n = n

        if n == 1:
            if d == 0:
                raise SingularSystemError("1x1 矩阵对角元为 0，不可逆")
            self.x = math.nan
            self._scalar = 1.0 / d
            return

        if not a * e > 0:
            raise InapplicableFormulaError(
                f"闭式逆公式不适用: sub*sup={a * e} <= 0（上游可能 dz >= 2）"
            )
        self._scalar = None
        root = math.sqrt(a * e)
        self.x = d / (2.0 * root)
        self.scale = 1.0 / root
        self.log_geom = 0.5 * math.log(a / e)
        self.use_logs = n > LOG_FORM_THRESHOLD

        if self.use_logs:
            self.log_p, self.sign_p = p_log_table(n, self.x)
            if self.sign_p[n] == 0.0 or self.log_p[n] < math.log(SINGULAR_DENOMINATOR):
                raise SingularSystemError(f"p_n(x) 过小，分母奇异: n={n}, x={self.x}")
        else:
            values = np.empty(n + 1)
            values[0], values[1] = 1.0, 2.0 * self.x
            for k in range(2, n + 1):
                values[k] = 2.0 * self.x * values[k - 1] - values[k - 2]
            if abs(values[n]) < SINGULAR_DENOMINATOR:
                raise SingularSystemError(f"p_n(x) 过小，分母奇异: n={n}, x={self.x}")
            self.p = values

    def entry(self, q: int, qp: int) -> float:
        """1-based (q, q') entry; indices outside 1..n give 0."""
        n = self.n
        if not (1 <= q <= n and 1 <= qp <= n):
            return 0.0
        if self._scalar is not None:
            return self._scalar
        lo, hi = min(q, qp), max(q, qp)
        diff = q - qp
        sign = -1.0 if diff % 2 else 1.0
        if self.use_logs:
            s = self.sign_p[lo - 1] * self.sign_p[n - hi] * self.sign_p[n]
            if s == 0.0:
                return 0.0
            log_mag = self.log_p[lo - 1] + self.log_p[n - hi] - self.log_p[n] + diff * self.log_geom
            return sign * s * self.scale * math.exp(log_mag)
        geom = math.exp(diff * self.log_geom)
        return sign * self.scale * geom * self.p[lo - 1] * self.p[n - hi] / self.p[n]

    def dense(self) -> np.ndarray:
        """Full n x n inverse, vectorized over the closed form."""
        n = self.n
        if self._scalar is not None:
            return np.array([[self._scalar]])
        idx = np.arange(1, n + 1)
        q, qp = np.meshgrid(idx, idx, indexing="ij")
        lo, hi = np.minimum(q, qp), np.maximum(q, qp)
        diff = q - qp
        sign = np.where(diff % 2 == 0, 1.0, -1.0)
        if self.use_logs:
            s = self.sign_p[lo - 1] * self.sign_p[n - hi] * self.sign_p[n]
            log_mag = self.log_p[lo - 1] + self.log_p[n - hi] - self.log_p[n] + diff * self.log_geom
            return sign * s * self.scale * np.exp(log_mag)
        geom = np.exp(diff * self.log_geom)
        return sign * self.scale * geom * self.p[lo - 1] * self.p[n - hi] / self.p[n]

    def column(self, qp: int) -> np.ndarray:
        return np.array([self.entry(q, qp) for q in range(1, self.n + 1)])


@lru_cache(maxsize=64)
def toeplitz_inverse(T: TridiagToeplitz) -> ToeplitzInverse:
    return ToeplitzInverse(T)


def inverse_entry(T: TridiagToeplitz, q: int, qp: int) -> float:
    return toeplitz_inverse(T).entry(q, qp)


def full_inverse(T: TridiagToeplitz, limit: int = DEFAULT_FULL_INVERSE_LIMIT) -> np.ndarray:
    if T.n > limit:
        raise ValueError(f"阶数 {T.n} 超过完整逆矩阵上限 {limit}，请改用三对角求解")
    return toeplitz_inverse(T).dense()


def is_diagonally_dominant(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray) -> bool:
    off = np.zeros_like(diag, dtype=float)
    off[1:] += np.abs(sub[1:])
    off[:-1] += np.abs(sup[:-1])
    return bool(np.all(np.abs(diag) > off))


def _thomas(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Elimination without row exchange; rhs may carry several columns."""
    n = len(diag)
    cp = np.empty(n)
    dp = np.array(rhs, dtype=float, copy=True)
    pivot = diag[0]
    if pivot == 0.0:
        raise SingularSystemError("三对角消元遇到零主元: row=0")
    cp[0] = sup[0] / pivot if n > 1 else 0.0
    dp[0] = dp[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - sub[i] * cp[i - 1]
        if pivot == 0.0:
            raise SingularSystemError(f"三对角消元遇到零主元: row={i}")
        cp[i] = sup[i] / pivot if i < n - 1 else 0.0
        dp[i] = (dp[i] - sub[i] * dp[i - 1]) / pivot
    for i in range(n - 2, -1, -1):
        dp[i] = dp[i] - cp[i] * dp[i + 1]
    return dp


def _pivoted(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]
    try:
        return scipy.linalg.solve_banded((1, 1), ab, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"三对角方程组奇异: {exc}") from exc


def solve_tridiagonal(sub, diag, sup, rhs) -> np.ndarray:
    """Solve A x = rhs for tridiagonal A.

    sub[i] multiplies x[i-1] and sup[i] multiplies x[i+1] in row i, so sub[0]
    and sup[-1] are ignored. Diagonally dominant systems go through plain
    elimination; anything else is handed to LAPACK with partial pivoting.
    """
    sub = np.asarray(sub, dtype=float)
    diag = np.asarray(diag, dtype=float)
    sup = np.asarray(sup, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = len(diag)
    if n < 1 or len(sub) != n or len(sup) != n or rhs.shape[0] != n:
        raise ValueError(f"三对角方程组维度不一致: n={n}, rhs={rhs.shape}")
    if n == 1:
        if diag[0] == 0.0:
            raise SingularSystemError("1x1 方程组奇异")
        return rhs / diag[0]
    if is_diagonally_dominant(sub, diag, sup):
        return _thomas(sub, diag, sup, rhs)
    logger.debug("[tridiag] n=%s not diagonally dominant, using pivoted solve", n)
    return _pivoted(sub, diag, sup, rhs)


def solve_toeplitz(T: TridiagToeplitz, rhs) -> np.ndarray:
    sub, diag, sup = T.bands()
    return solve_tridiagonal(sub, diag, sup, rhs)
