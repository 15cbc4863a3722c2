import json

import pytest

from cncompact.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from cncompact.errors import InapplicableFormulaError


def _run(tmp_path, name: str, *flags: str) -> int:
    return main(["eigen-table", "--dz-list", "1/8,1/16", "--dv-list", "1e-3", "--out", str(tmp_path / name), *flags])


def test_successful_run_writes_outputs(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _run(tmp_path, "a") == EXIT_OK
    out = capsys.readouterr().out
    assert "eigen-table: 2 cells, ok=2" in out
    assert (tmp_path / "a" / "eigen-table.csv").exists()
    meta = json.loads((tmp_path / "a" / "eigen-table.meta.json").read_text(encoding="utf-8"))
    assert meta["counts"]["ok"] == 2


def test_reruns_are_byte_identical(tmp_path) -> None:
    assert _run(tmp_path, "a") == EXIT_OK
    assert _run(tmp_path, "b") == EXIT_OK
    first = (tmp_path / "a" / "eigen-table.csv").read_bytes()
    assert first == (tmp_path / "b" / "eigen-table.csv").read_bytes()


def test_workers_flag_keeps_output(tmp_path) -> None:
    assert _run(tmp_path, "serial") == EXIT_OK
    assert _run(tmp_path, "parallel", "--workers", "2") == EXIT_OK
    serial = (tmp_path / "serial" / "eigen-table.csv").read_bytes()
    assert serial == (tmp_path / "parallel" / "eigen-table.csv").read_bytes()


def test_failed_cells_exit_partial(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["eigen-table", "--dz-list", "1/8,0.3", "--dv-list", "1e-3", "--out", str(tmp_path)])
    assert code == EXIT_PARTIAL
    assert "[error]" in capsys.readouterr().out
    assert (tmp_path / "eigen-table.csv").exists()


@pytest.mark.parametrize(
    "flags",
    [
        ["--c", "1", "--alpha1", "0.3"],
        ["--alpha1", "0"],
        ["--workers", "0"],
        ["--dz-list", "2.5"],
        ["--dz-list", "abc"],
        ["--config", "does-not-exist.json"],
    ],
)
def test_configuration_errors(tmp_path, flags, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["eigen-table", "--out", str(tmp_path), *flags]) == EXIT_CONFIG
    assert "配置错误" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["figure-2"],
        [],
        ["eigen-table", "--domain-coords", "q"],
        ["eigen-table", "--norm-method", "qr"],
        ["convergence", "--study", "diagonal"],
        ["eigen-table", "--no-such-flag"],
    ],
)
def test_parser_errors_are_config_errors(tmp_path, argv, capsys: pytest.CaptureFixture[str]) -> None:
    assert main([*argv, "--out", str(tmp_path)] if argv else argv) == EXIT_CONFIG
    assert "配置错误" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_flags_override_config_file(tmp_path) -> None:
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"DZ_LIST": "1/8", "DV_LIST": "1e-2", "SEED": 5}), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["eigen-table", "--config", str(config), "--dv-list", "1e-3", "--out", str(out)]) == EXIT_OK
    meta = json.loads((out / "eigen-table.meta.json").read_text(encoding="utf-8"))
    assert meta["config"]["DZ_LIST"] == "1/8"
    assert meta["config"]["DV_LIST"] == "1e-3"
    assert meta["config"]["SEED"] == 5


def test_environment_reaches_experiment(tmp_path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("CNC_DZ_LIST", "1/8")
    monkeypatch.setenv("CNC_DV_LIST", "1e-1")
    assert main(["prop1-margins", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "prop1-margins.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("1.250000e-01,1.562500e-02,")


def test_direct_coefficient_run(tmp_path) -> None:
    out = tmp_path / "direct"
    assert main(["norm-ratio-table", "--c", "1", "--dz-list", "1/8", "--dv-list", "1e-3", "--out", str(out)]) == EXIT_OK
    meta = json.loads((out / "norm-ratio-table.meta.json").read_text(encoding="utf-8"))
    assert meta["c"] == 1.0
    assert meta["reference_compared"] is False


def test_numerical_failure_in_cells_is_partial(tmp_path, monkeypatch: pytest.MonkeyPatch) -> None:
    def inapplicable(*args, **kwargs):
        raise InapplicableFormulaError("闭式逆公式不适用")

    monkeypatch.setattr("cncompact.experiments.spectral_report", inapplicable)
    assert _run(tmp_path, "a") == EXIT_PARTIAL
    lines = (tmp_path / "a" / "eigen-table.csv").read_text(encoding="utf-8").splitlines()
    assert all(",error," in line for line in lines[1:])
