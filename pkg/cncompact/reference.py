"""Published reference values for the eigenvalue and norm-ratio tables (alpha1=0.25, alpha2=0.1, x in [0, 1])."""
import math
from typing import Dict, Optional

# min Re rho(W) is printed as 3.16e-k for every dz, i.e. 3.16 * dv
EIGEN_TABLE_FACTOR = 3.16

NORM_RATIO_TABLE: Dict[int, float] = {
    8: 0.9140,
    16: 0.9543,
    32: 0.9647,
    64: 0.9673,
    128: 0.9680,
    256: 0.9681,
    512: 0.9682,
    1024: 0.9682,
    2048: 0.9682,
    4096: 0.9682,
}

NORM_RATIO_ABS_TOL = 5e-4


def _cells(dz: float) -> Optional[int]:
    inv = 1.0 / dz
    n = int(round(inv))
    if abs(inv - n) > 1e-9 * inv:
        return None
    return n


def eigen_reference(dz: float, dv: float) -> Optional[float]:
    if _cells(dz) not in NORM_RATIO_TABLE:
        return None
    if not any(math.isclose(dv, 10.0 ** -k, rel_tol=1e-9) for k in range(1, 9)):
        return None
    return EIGEN_TABLE_FACTOR * dv


def norm_ratio_reference(dz: float) -> Optional[float]:
    return NORM_RATIO_TABLE.get(_cells(dz))
