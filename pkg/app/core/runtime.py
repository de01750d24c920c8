"""
runtime.py - Inicialización del proceso: sinks de loguru, estado de errores de numpy
y cantidad de hilos.
"""

from __future__ import annotations
import sys
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from .config import AppConfig


LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {name}:{function} - {message}"
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <7} | {name}:{function}:{line} - {message}"


def _configure_logging(cfg: AppConfig, level: Optional[str]) -> Optional[Path]:
    logger.remove()
    logger.add(sys.stderr, level=(level or cfg.log_level).upper(), format=LOG_FORMAT)
    if not cfg.log_to_file:
        return None
    log_dir = Path(cfg.runs_dir) / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    path = log_dir / "catl_{time:YYYYMMDD_HHmmss}.log"
    logger.add(str(path), level="DEBUG", format=FILE_FORMAT, rotation="10 MB",
               retention=10, encoding="utf-8", enqueue=True)
    return log_dir


def init_runtime(cfg: AppConfig, level: Optional[str] = None, threads: Optional[int] = None) -> int:
    """Deja el proceso listo para correr experimentos; devuelve los hilos efectivos."""
    log_dir = _configure_logging(cfg, level)
    # exp2 de D_max grandes desborda a inf a propósito
    np.seterr(over="ignore", under="ignore")
    n = max(1, int(threads if threads is not None else cfg.threads))
    logger.debug(f"init_runtime: hilos={n}, logs={log_dir or 'sólo consola'}")
    return n
