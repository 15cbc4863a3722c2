import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Dict, List

from cncompact.errors import ConfigError

PROJECT_ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config.json"
ENV_PREFIX = "CNC_"

DEFAULTS: Dict[str, object] = {
    "ALPHA1": 0.25,
    "ALPHA2": 0.1,
    "C": None,
    "XL": 0.0,
    "XR": 1.0,
    "ZL": None,
    "ZR": None,
    "T": 2.0,
    "DZ_LIST": "1/8,1/16,1/32,1/64,1/128,1/256,1/512,1/1024,1/2048,1/4096",
    "DV_LIST": "1e-8,1e-7,1e-6,1e-5,1e-4,1e-3,1e-2,1e-1",
    "DOMAIN_COORDS": "x",
    "DENSE_CAP": 4096,
    "FULL_INVERSE_LIMIT": 512,
    "DENSE_NORM_LIMIT": 512,
    "EIG_CHECK_LIMIT": 1024,
    "EIG_TOL": 1e-10,
    "NORM_METHOD": "auto",
    "POWER_TOL": 1e-12,
    "POWER_MAX_ITER": 20000,
    "LANCZOS_TOL": 1e-10,
    "OUTPUT_DIR": "results",
    "SEED": 0,
    "WORKERS": 1,
    "LOG_LEVEL": "INFO",
    "ORACLE_K": 0.5,
    "B": 1.0,
    "N": 20,
    "M": 400,
    "LEVELS": 4,
    "STUDY": "spatial",
    "PROBE_STEPS": 1000,
    "ALPHA1_RANGE": "-2:2:0.25",
    "ALPHA2_RANGE": "0.05:2:0.05",
    "FIG_DZ": "1/512",
    "TABLE_TOL": 0.02,
}

INT_KEYS = {
    "DENSE_CAP",
    "FULL_INVERSE_LIMIT",
    "DENSE_NORM_LIMIT",
    "EIG_CHECK_LIMIT",
    "POWER_MAX_ITER",
    "SEED",
    "WORKERS",
    "N",
    "M",
    "LEVELS",
    "PROBE_STEPS",
}
FLOAT_KEYS = {
    "ALPHA1",
    "ALPHA2",
    "C",
    "XL",
    "XR",
    "ZL",
    "ZR",
    "T",
    "EIG_TOL",
    "POWER_TOL",
    "LANCZOS_TOL",
    "ORACLE_K",
    "B",
    "TABLE_TOL",
}
CHOICES = {
    "DOMAIN_COORDS": {"x", "z"},
    "NORM_METHOD": {"auto", "power", "lanczos", "dense"},
    "STUDY": {"spatial", "temporal"},
}


def parse_number(text: str) -> float:
    """Parse `0.125`, `1e-3` or a fraction such as `1/512`."""
    raw = str(text).strip()
    if not raw:
        raise ConfigError("数值为空")
    try:
        if "/" in raw:
            return float(Fraction(raw))
        return float(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"无法解析数值: {raw!r}") from exc


def parse_number_list(text: str) -> List[float]:
    values = [parse_number(item) for item in str(text).split(",") if item.strip()]
    if not values:
        raise ConfigError(f"列表为空: {text!r}")
    return values


def parse_range(text: str) -> List[float]:
    """Expand `start:stop:step` (stop inclusive) into a list of values."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"范围格式应为 start:stop:step，收到 {text!r}")
    start, stop, step = (parse_number(p) for p in parts)
    if step <= 0 or stop < start:
        raise ConfigError(f"范围无效: {text!r}")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def read_config_file(path: Path) -> Dict[str, object]:
    """Read a `*.json` object or plain-text `key=value` lines."""
    if not path.exists():
        raise ConfigError(f"找不到配置文件: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"无法读取配置文件: {path} ({exc})") from exc

    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise ConfigError(f"配置文件 JSON 无法解析: {path}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"配置文件必须是 JSON 对象: {path}")
        return {str(k).strip().upper(): v for k, v in data.items()}

    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno} 缺少 '='")
        key, value = stripped.split("=", 1)
        values[key.strip().upper()] = value.strip()
    return values


def normalize(config: Dict[str, object]) -> Dict[str, object]:
    """Coerce raw values to their types and validate choices."""
    out: Dict[str, object] = {}
    for key, value in config.items():
        if value is None or (isinstance(value, str) and not value.strip()):
            out[key] = None if key in FLOAT_KEYS else value
            continue
        if key in INT_KEYS:
            try:
                out[key] = int(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key} 需要整数，收到 {value!r}") from exc
        elif key in FLOAT_KEYS:
            out[key] = parse_number(str(value))
        elif key in CHOICES:
            choice = str(value).strip().lower()
            if choice not in CHOICES[key]:
                raise ConfigError(f"{key} 只能是 {sorted(CHOICES[key])}，收到 {value!r}")
            out[key] = choice
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None) -> Dict[str, object]:
    """Resolve configuration.

    Priority (highest first):
    1) Environment variables `CNC_<KEY>`
    2) Config file (`path`, or `config.json` at the project root if present)
    3) DEFAULTS

    Command-line flags are layered on top by the CLI.
    """

    config: Dict[str, object] = dict(DEFAULTS)

    file_path = Path(path) if path else DEFAULT_CONFIG_PATH
    if path or file_path.exists():
        config.update(read_config_file(file_path))

    for key in DEFAULTS:
        env_value = os.environ.get(ENV_PREFIX + key)
        if env_value is not None and env_value.strip():
            config[key] = env_value.strip()

    return normalize(config)
