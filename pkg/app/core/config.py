"""
config.py - Carga y valida la configuración de la aplicación.

Prioridad de carga (de menor a mayor):
  1) DEFAULTS (abajo)
  2) config/app_config.json (si existe)
  3) Variables de entorno (prefijo CATL_)
"""

from __future__ import annotations
import json, os
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Any, Dict

from .errors import ConfigError


APP_ROOT = Path(__file__).resolve().parents[1]   # .../app
PROJECT_ROOT = APP_ROOT.parent                   # raíz del repo

APP_NAME = "catalytic-teleport"
APP_VERSION = "0.4.0"
ENV_PREFIX = "CATL_"


@dataclass
class AppConfig:
    # Rutas
    registry_path: str = str(APP_ROOT / "config" / "registry.yaml")
    runs_dir: str = str(APP_ROOT / "runs")
    config_dir: str = str(APP_ROOT / "config")
    fixtures_dir: str = str(APP_ROOT / "fixtures")

    # Límites de tamaño (dimensión total de matrices densas)
    dim_cap: int = 4096
    exact_cs_cap: int = 64
    emb_side_cap: int = 4096

    # Numérico
    eigen_cutoff: float = 1e-10
    full_rank_min_eig: float = 1e-6
    p_grid_points: int = 1000
    p_refine_tol: float = 1e-6
    n_cap: int = 2 ** 40
    lemma3_grid: int = 100

    # Ejecución
    threads: int = 1
    log_level: str = "INFO"
    log_to_file: bool = True
    progress: bool = True


PATH_FIELDS = ("registry_path", "runs_dir", "config_dir", "fixtures_dir")
LOG_LEVELS = {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}


def _read_json_layer(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(path.name, f"JSON inválido ({e.msg}, línea {e.lineno})")
    if not isinstance(data, dict):
        raise ConfigError(path.name, "se esperaba un objeto JSON")
    return data


def _cast_env(raw: str) -> Any:
    if raw.lower() in {"true", "false"}:
        return raw.lower() == "true"
    try:
        if any(c in raw for c in ".eE"):
            return float(raw)
        return int(raw)
    except ValueError:
        return raw


def _env_layer() -> Dict[str, Any]:
    """Variables CATL_<CAMPO> que coincidan con campos del dataclass."""
    return {
        name: _cast_env(os.environ[ENV_PREFIX + name.upper()])
        for name in AppConfig.__dataclass_fields__  # type: ignore[attr-defined]
        if ENV_PREFIX + name.upper() in os.environ
    }


def _resolve_path(raw: str) -> str:
    p = Path(raw).expanduser()
    if not p.is_absolute():
        # relativas contra la raíz del repo
        p = PROJECT_ROOT / p
    return str(p.resolve())


def _validate(values: Dict[str, Any]) -> None:
    for key in ("dim_cap", "exact_cs_cap", "emb_side_cap", "p_grid_points", "n_cap", "threads"):
        v = values[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(key, f"se esperaba entero >= 1, llegó {v!r}")
    for key in ("eigen_cutoff", "full_rank_min_eig", "p_refine_tol"):
        v = values[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not (0.0 < v < 1.0):
            raise ConfigError(key, f"se esperaba real en (0, 1), llegó {v!r}")
    if values["lemma3_grid"] < 100:
        raise ConfigError("lemma3_grid", f"debe ser >= 100, llegó {values['lemma3_grid']}")
    if str(values["log_level"]).upper() not in LOG_LEVELS:
        raise ConfigError("log_level", f"nivel desconocido {values['log_level']!r}")


def load_app_config() -> AppConfig:
    values = asdict(AppConfig())
    cfg_dir = Path(values["config_dir"])
    cfg_dir.mkdir(parents=True, exist_ok=True)

    for layer in (_read_json_layer(cfg_dir / "app_config.json"), _env_layer()):
        # claves de versiones viejas del JSON se ignoran
        values.update({k: v for k, v in layer.items() if k in values})

    _validate(values)
    for key in PATH_FIELDS:
        values[key] = _resolve_path(values[key])
    values["log_level"] = str(values["log_level"]).upper()

    Path(values["runs_dir"]).mkdir(parents=True, exist_ok=True)
    return AppConfig(**values)


def save_app_config(cfg: AppConfig) -> None:
    path = Path(cfg.config_dir) / "app_config.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(asdict(cfg), f, ensure_ascii=False, indent=2)
