"""Experiment sweeps and their CSV / metadata output."""
import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cncompact import reference
from cncompact.bounds import condition_report, unit_bound_dv, w_norm_ratio
from cncompact.config import parse_number, parse_number_list, parse_range
from cncompact.errors import ConfigError
from cncompact.problem import (
    CanonicalProblem,
    PdeProblem,
    build_grid,
    canonical_from_c,
    canonical_on_x,
    canonicalize,
    exact_solution,
    manufactured_problem,
)
from cncompact.scheme import coefficients
from cncompact.spectral import assemble_W, eigenvalues, prop1_margins, spectral_report
from cncompact.stepper import convergence_study, integrate, stability_probe

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_DEVIATES = "deviates"
STATUS_SKIPPED = "skipped(cap)"
STATUS_ERROR = "error"
SPAN_TOL = 1e-9

CellFn = Callable[..., Tuple[Dict[str, object], str]]


@dataclass
class Cell:
    coords: Dict[str, object]
    values: Dict[str, object] = field(default_factory=dict)
    status: str = STATUS_OK
    error: str = ""


@dataclass
class ExperimentResult:
    name: str
    coord_names: List[str]
    value_names: List[str]
    cells: List[Cell]
    meta: Dict[str, object] = field(default_factory=dict)

    def count(self, status: str) -> int:
        return sum(1 for cell in self.cells if cell.status == status)

    @property
    def failed(self) -> int:
        return self.count(STATUS_ERROR)


def _zero(_: float) -> float:
    return 0.0


def canonical_setup(cfg: Dict, alpha1: Optional[float] = None, alpha2: Optional[float] = None) -> CanonicalProblem:
    """Canonical coefficient and interval for the eigen-analysis; data are identically zero.

    --c selects c directly. Otherwise c = alpha1^2/alpha2 and the interval is
    [XL, XR] kept as is (DOMAIN_COORDS=x) or mapped through z = alpha1/alpha2 x
    (DOMAIN_COORDS=z). An explicit ZL/ZR always wins.
    """
    a1 = cfg["ALPHA1"] if alpha1 is None else alpha1
    a2 = cfg["ALPHA2"] if alpha2 is None else alpha2
    T = cfg["T"]
    if cfg.get("C") is not None and alpha1 is None:
        left = cfg["ZL"] if cfg.get("ZL") is not None else cfg["XL"]
        right = cfg["ZR"] if cfg.get("ZR") is not None else cfg["XR"]
        return canonical_from_c(cfg["C"], left, right, T, _zero, _zero, _zero)

    pde = PdeProblem(alpha1=a1, alpha2=a2, x_left=cfg["XL"], x_right=cfg["XR"], horizon_T=T, f=_zero, g1=_zero, g2=_zero)
    canon = canonical_on_x(pde) if cfg["DOMAIN_COORDS"] == "x" else canonicalize(pde)
    if cfg.get("ZL") is not None and cfg.get("ZR") is not None:
        return canonical_from_c(canon.c, cfg["ZL"], cfg["ZR"], T, _zero, _zero, _zero)
    return canon


def cells_for(length: float, dz: float) -> int:
    N = int(round(length / dz))
    if N < 2 or abs(N * dz - length) > SPAN_TOL * length:
        raise ValueError(f"dz={dz} 无法整除区间长度 {length}")
    return N


def _sweep(coords: Sequence[Dict[str, object]], fn: CellFn, workers: int) -> List[Cell]:
    def evaluate(point: Dict[str, object]) -> Cell:
        try:
            values, status = fn(**point)
            return Cell(coords=dict(point), values=values, status=status)
        except Exception as exc:
            logger.warning("[sweep] cell=%s failed: %s", point, exc)
            return Cell(coords=dict(point), status=STATUS_ERROR, error=str(exc))

    if workers <= 1:
        return [evaluate(point) for point in coords]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(evaluate, coords))


def _grid_points(cfg: Dict) -> List[Dict[str, object]]:
    dz_list = parse_number_list(cfg["DZ_LIST"])
    dv_list = parse_number_list(cfg["DV_LIST"])
    for dz in dz_list:
        if not 0 < dz < 2:
            raise ConfigError(f"dz 必须满足 0 < dz < 2，收到 {dz}")
    return [{"dz": dz, "dv": dv} for dz in dz_list for dv in dv_list]


def _reference_applies(canon: CanonicalProblem) -> bool:
    return (
        abs(canon.c - 0.625) < 1e-12
        and abs(canon.z_left) < 1e-12
        and abs(canon.z_right - 1.0) < 1e-12
    )


def eigen_table(cfg: Dict) -> ExperimentResult:
    canon = canonical_setup(cfg)
    compare = _reference_applies(canon)
    tol = cfg["TABLE_TOL"]

    def cell(dz: float, dv: float):
        N = cells_for(canon.length, dz)
        if N - 1 > cfg["DENSE_CAP"]:
            return {}, STATUS_SKIPPED
        report = spectral_report(
            coefficients(canon.c, dz, dv),
            N,
            tol=cfg["EIG_TOL"],
            dense_cap=cfg["DENSE_CAP"],
            full_inverse_limit=cfg["FULL_INVERSE_LIMIT"],
            check_residual=N - 1 <= cfg["EIG_CHECK_LIMIT"],
        )
        values = {
            "min_re": report.min_real_part,
            "gersh_lower": report.gerschgorin_lower_bound,
            "edge_disks": report.edge_disks_contain,
            "rho_H": report.spectral_radius_H,
        }
        status = STATUS_OK
        ref = reference.eigen_reference(dz, dv) if compare else None
        if ref is not None:
            rel_dev = abs(report.min_real_part - ref) / ref
            values.update(reference=ref, rel_dev=rel_dev)
            if rel_dev > tol:
                status = STATUS_DEVIATES
        if not report.stable:
            logger.warning("[eigen-table] dz=%s dv=%s min_re=%.6e not positive", dz, dv, report.min_real_part)
        return values, status

    cells = _sweep(_grid_points(cfg), cell, cfg["WORKERS"])
    return ExperimentResult(
        name="eigen-table",
        coord_names=["dz", "dv"],
        value_names=["min_re", "gersh_lower", "edge_disks", "rho_H", "reference", "rel_dev"],
        cells=cells,
        meta={"c": canon.c, "z_left": canon.z_left, "z_right": canon.z_right, "reference_compared": compare},
    )


def norm_ratio_table(cfg: Dict) -> ExperimentResult:
    canon = canonical_setup(cfg)
    compare = _reference_applies(canon)

    def cell(dz: float, dv: float):
        N = cells_for(canon.length, dz)
        estimate, bound, ratio = w_norm_ratio(coefficients(canon.c, dz, dv), N, **_norm_kwargs(cfg))
        values = {
            "w_norm": estimate.value,
            "w_bound": bound,
            "ratio": ratio,
            "method": estimate.method,
            "converged": estimate.converged,
        }
        status = STATUS_OK
        ref = reference.norm_ratio_reference(dz) if compare else None
        if ref is not None:
            dev = abs(ratio - ref)
            values.update(reference=ref, abs_dev=dev)
            if dev > reference.NORM_RATIO_ABS_TOL:
                status = STATUS_DEVIATES
        return values, status

    cells = _sweep(_grid_points(cfg), cell, cfg["WORKERS"])
    return ExperimentResult(
        name="norm-ratio-table",
        coord_names=["dz", "dv"],
        value_names=["w_norm", "w_bound", "ratio", "method", "converged", "reference", "abs_dev"],
        cells=cells,
        meta={"c": canon.c, "z_left": canon.z_left, "z_right": canon.z_right, "reference_compared": compare},
    )


def _norm_kwargs(cfg: Dict) -> Dict[str, object]:
    return {
        "method": cfg["NORM_METHOD"],
        "dense_limit": cfg["DENSE_NORM_LIMIT"],
        "power_tol": cfg["POWER_TOL"],
        "power_max_iter": cfg["POWER_MAX_ITER"],
        "lanczos_tol": cfg["LANCZOS_TOL"],
    }


def eigen_grid(cfg: Dict) -> ExperimentResult:
    dz = parse_number(cfg["FIG_DZ"])
    alpha1_values = [a for a in parse_range(cfg["ALPHA1_RANGE"]) if a != 0.0]
    alpha2_values = parse_range(cfg["ALPHA2_RANGE"])

    def cell(alpha1: float, alpha2: float):
        canon = canonical_setup(cfg, alpha1=alpha1, alpha2=alpha2)
        N = cells_for(canon.length, dz)
        if N - 1 > cfg["DENSE_CAP"]:
            return {"c": canon.c}, STATUS_SKIPPED
        dv = unit_bound_dv(canon.c, dz)
        W = assemble_W(coefficients(canon.c, dz, dv), N, full_inverse_limit=cfg["FULL_INVERSE_LIMIT"])
        eigs = eigenvalues(
            W, tol=cfg["EIG_TOL"], dense_cap=cfg["DENSE_CAP"], check_residual=N - 1 <= cfg["EIG_CHECK_LIMIT"]
        )
        min_re = float(np.min(eigs.real))
        return {"c": canon.c, "dv": dv, "min_re": min_re, "positive": min_re > 0.0}, STATUS_OK

    points = [{"alpha1": a1, "alpha2": a2} for a1 in alpha1_values for a2 in alpha2_values]
    cells = _sweep(points, cell, cfg["WORKERS"])
    return ExperimentResult(
        name="eigen-grid",
        coord_names=["alpha1", "alpha2"],
        value_names=["c", "dv", "min_re", "positive"],
        cells=cells,
        meta={
            "dz": dz,
            "dv_rule": "sqrt(5/12) / (2c/dz^2 + c/6)",
            "alpha1_range": cfg["ALPHA1_RANGE"],
            "alpha2_range": cfg["ALPHA2_RANGE"],
            "artifact_choices": ["alpha ranges are not published; defaults are chosen here"],
        },
    )


def condition_table(cfg: Dict) -> ExperimentResult:
    canon = canonical_setup(cfg)

    def cell(dz: float, dv: float):
        N = cells_for(canon.length, dz)
        report = condition_report(
            coefficients(canon.c, dz, dv),
            N,
            eig_check_limit=cfg["EIG_CHECK_LIMIT"],
            dense_cap=cfg["DENSE_CAP"],
            full_inverse_limit=cfg["FULL_INVERSE_LIMIT"],
            **_norm_kwargs(cfg),
        )
        cond_ratio = None if report.measured_cond is None else report.measured_cond / report.cond_bound
        values = {
            "b": dv / dz ** 2,
            "cond": report.measured_cond,
            "cond_bound": report.cond_bound,
            "cond_ratio": cond_ratio,
            "w_norm": report.measured_w_norm,
            "hypothesis": report.hypothesis,
        }
        if report.cond_within_bound is False:
            logger.warning("[condition-table] dz=%s dv=%s cond=%.6e exceeds bound %.6e",
                           dz, dv, report.measured_cond, report.cond_bound)
            return values, STATUS_DEVIATES
        return values, STATUS_OK

    cells = _sweep(_grid_points(cfg), cell, cfg["WORKERS"])
    return ExperimentResult(
        name="condition-table",
        coord_names=["dz", "dv"],
        value_names=["b", "cond", "cond_bound", "cond_ratio", "w_norm", "hypothesis"],
        cells=cells,
        meta={"c": canon.c, "z_left": canon.z_left, "z_right": canon.z_right},
    )


def prop1_table(cfg: Dict) -> ExperimentResult:
    canon = canonical_setup(cfg)
    b = cfg["B"]

    def cell(dz: float, dv: float):
        first, second = prop1_margins(coefficients(canon.c, dz, dv))
        return {
            "first": first,
            "second": second,
            "first_per_dv": first / dv,
            "second_per_dv": second / dv,
            "positive": first > 0 and second > 0,
        }, STATUS_OK

    points = [{"dz": dz, "dv": b * dz * dz} for dz in parse_number_list(cfg["DZ_LIST"])]
    cells = _sweep(points, cell, cfg["WORKERS"])
    return ExperimentResult(
        name="prop1-margins",
        coord_names=["dz", "dv"],
        value_names=["first", "second", "first_per_dv", "second_per_dv", "positive"],
        cells=cells,
        meta={"c": canon.c, "b": b},
    )


def _oracle_problem(cfg: Dict) -> CanonicalProblem:
    canon = canonical_setup(cfg)
    return manufactured_problem(canon.c, cfg["ORACLE_K"], canon.z_left, canon.z_right, canon.horizon_T)


def convergence(cfg: Dict) -> ExperimentResult:
    canon = _oracle_problem(cfg)
    table = convergence_study(canon, cfg["ORACLE_K"], refinement=cfg["STUDY"], levels=cfg["LEVELS"], b=cfg["B"])
    cells = [
        Cell(
            coords={"level": i, "step": row.step},
            values={
                "error_max": row.error_max,
                "error_l2": row.error_l2,
                "order_max": row.order_max,
                "order_l2": row.order_l2,
            },
        )
        for i, row in enumerate(table.rows)
    ]
    return ExperimentResult(
        name="convergence",
        coord_names=["level", "step"],
        value_names=["error_max", "error_l2", "order_max", "order_l2"],
        cells=cells,
        meta={
            "c": canon.c,
            "oracle_k": cfg["ORACLE_K"],
            "refinement": table.refinement,
            "reliable": table.reliable,
            "artifact_choices": ["manufactured exact solution; no published error table exists"],
        },
    )


def solve(cfg: Dict) -> ExperimentResult:
    canon = _oracle_problem(cfg)
    grid = build_grid(canon, cfg["N"], cfg["M"])
    result = integrate(canon, grid, record_trajectory=True)
    exact = exact_solution(canon.c, cfg["ORACLE_K"], canon.horizon_T, grid.nodes())
    final = result.trajectory[-1]
    cells = [
        Cell(coords={"q": q, "z": float(z)}, values={"u": float(u), "exact": float(e), "error": float(u - e)})
        for q, (z, u, e) in enumerate(zip(grid.nodes(), final, exact))
    ]
    return ExperimentResult(
        name="solve",
        coord_names=["q", "z"],
        value_names=["u", "exact", "error"],
        cells=cells,
        meta={"c": canon.c, "N": grid.N, "M": grid.M, "dz": grid.dz, "dv": grid.dv, "oracle_k": cfg["ORACLE_K"]},
    )


def stability_probe_table(cfg: Dict) -> ExperimentResult:
    canon = canonical_setup(cfg)

    def cell(dz: float, dv: float):
        N = cells_for(canon.length, dz)
        if N - 1 > cfg["EIG_CHECK_LIMIT"]:
            return {}, STATUS_SKIPPED
        probe = stability_probe(coefficients(canon.c, dz, dv), N, steps=cfg["PROBE_STEPS"], seed=cfg["SEED"])
        values = {
            "overall_growth": probe.overall_growth,
            "max_step_growth": probe.max_step_growth,
            "tail_step_growth": probe.tail_step_growth,
        }
        return values, STATUS_OK if probe.overall_growth <= 1.0 + 1e-8 else STATUS_DEVIATES

    cells = _sweep(_grid_points(cfg), cell, cfg["WORKERS"])
    return ExperimentResult(
        name="stability-probe",
        coord_names=["dz", "dv"],
        value_names=["overall_growth", "max_step_growth", "tail_step_growth"],
        cells=cells,
        meta={"c": canon.c, "steps": cfg["PROBE_STEPS"], "seed": cfg["SEED"]},
    )


EXPERIMENTS: Dict[str, Callable[[Dict], ExperimentResult]] = {
    "eigen-table": eigen_table,
    "norm-ratio-table": norm_ratio_table,
    "eigen-grid": eigen_grid,
    "condition-table": condition_table,
    "prop1-margins": prop1_table,
    "convergence": convergence,
    "solve": solve,
    "stability-probe": stability_probe_table,
}


def run_experiment(name: str, cfg: Dict) -> ExperimentResult:
    if name not in EXPERIMENTS:
        raise ValueError(f"未知实验: {name}")
    return EXPERIMENTS[name](cfg)


def format_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.6e" % float(value)
    return str(value)


def write_csv(result: ExperimentResult, path: Path) -> None:
    header = result.coord_names + result.value_names + ["status", "error"]
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for cell in result.cells:
            row = [format_value(cell.coords.get(k)) for k in result.coord_names]
            row += [format_value(cell.values.get(k)) for k in result.value_names]
            row += [cell.status, cell.error]
            writer.writerow(row)


def _json_safe(value: object) -> object:
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def write_outputs(result: ExperimentResult, cfg: Dict, out_dir: Path) -> Tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{result.name}.csv"
    meta_path = out_dir / f"{result.name}.meta.json"
    write_csv(result, csv_path)

    meta = {
        "experiment": result.name,
        "config": {key: _json_safe(cfg[key]) for key in sorted(cfg)},
        "counts": {
            status: result.count(status)
            for status in (STATUS_OK, STATUS_DEVIATES, STATUS_SKIPPED, STATUS_ERROR)
        },
        **{key: _json_safe(value) for key, value in result.meta.items()},
    }
    meta_path.write_text(json.dumps(meta, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, meta_path


def summarize(result: ExperimentResult) -> str:
    lines = [
        f"{result.name}: {len(result.cells)} cells, "
        f"ok={result.count(STATUS_OK)} deviates={result.count(STATUS_DEVIATES)} "
        f"skipped={result.count(STATUS_SKIPPED)} error={result.count(STATUS_ERROR)}"
    ]
    for cell in result.cells:
        if cell.status in (STATUS_DEVIATES, STATUS_ERROR):
            coords = ", ".join(f"{k}={format_value(v)}" for k, v in cell.coords.items())
            lines.append(f"- [{cell.status}] {coords} {cell.error}".rstrip())
    return "\n".join(lines)
