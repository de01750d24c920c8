"""
storage.py - Persistencia de resultados: tablas CSV por experimento y manifiesto de corrida.

CSV: RFC-4180 con comillas mínimas, fin de línea LF, UTF-8, reales a 12 cifras.
El manifiesto es YAML y alcanza para reproducir la corrida byte a byte.
"""

from __future__ import annotations
import csv
import io
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping

import pandas as pd
import yaml

from .config import AppConfig
from .utils import bytes_sha256, fmt_real


RESULT_SCHEMAS: Dict[str, List[str]] = {
    "fidelity": ["source", "d", "F", "f", "f_label", "f_mc", "f_mc_stderr"],
    "nmin": ["source", "epsilon", "n_min_mixed", "p_star_mixed", "n_min_N", "p_star_best",
             "best_index", "descent_ratio"],
    "montecarlo": ["sample", "f", "epsilon", "n_min_mixed", "n_min_N", "descent_ratio", "improved"],
    "embezzle": ["d", "M", "F_exact", "overlap", "omega_mass", "harmonic_ratio", "lemma2_bound",
                 "f_c", "P_exact", "P_closed_form", "P_bound", "closed_form_discrepancy"],
    "consumption": ["source", "epsilon", "M_E", "log2_dim_E", "P_E", "P_bound_E",
                    "n_mixed", "log2_dim_cs_mixed", "P_bound_cs_mixed",
                    "n_N", "log2_dim_cs_N", "P_bound_cs_N"],
    "qutrit-map": ["lambda1", "lambda2", "lambda3", "f", "lemma3_bound",
                   "label_correlated", "label_embezzling", "M_required"],
    "distill": ["source", "epsilon", "kind", "p", "k", "size", "predicted_fidelity_lb",
                "exact_fidelity", "predicted_consumption", "n_search"],
}

# columnas de texto; el resto se lee como número
TEXT_COLUMNS = {"source", "kind", "label_correlated", "label_embezzling", "improved"}


def _timestamp() -> str:
    return datetime.now().strftime("%Y%m%d_%H%M%S")


def ensure_runs_dirs(cfg: AppConfig) -> Path:
    base = Path(cfg.runs_dir)
    (base / "logs").mkdir(parents=True, exist_ok=True)
    (base / "results").mkdir(parents=True, exist_ok=True)
    return base


def default_output_path(cfg: AppConfig, experiment: str) -> Path:
    base = ensure_runs_dirs(cfg) / "results"
    return base / f"{experiment}_{_timestamp()}.csv"


def schema_for(experiment: str) -> List[str]:
    if experiment not in RESULT_SCHEMAS:
        raise KeyError(f"Experimento sin esquema: {experiment}")
    return RESULT_SCHEMAS[experiment]


# ---------- CSV ----------

def render_result_table(experiment: str, rows: Iterable[Mapping[str, Any]]) -> bytes:
    cols = schema_for(experiment)
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(cols)
    for r in rows:
        extra = set(r) - set(cols)
        if extra:
            raise ValueError(f"{experiment}: columnas fuera del esquema {sorted(extra)}")
        w.writerow([fmt_real(r.get(c)) for c in cols])
    return buf.getvalue().encode("utf-8")


def write_result_table(experiment: str, rows: Iterable[Mapping[str, Any]], path: str | Path) -> str:
    """Escribe el CSV y devuelve su sha256."""
    data = render_result_table(experiment, rows)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "wb") as f:
        f.write(data)
    return bytes_sha256(data)


def read_result_table(experiment: str, path: str | Path) -> pd.DataFrame:
    """Lee un CSV validando que el encabezado sea exactamente el del esquema."""
    cols = schema_for(experiment)
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    if list(df.columns) != cols:
        raise ValueError(f"{experiment}: encabezado {list(df.columns)} no coincide con {cols}")
    for c in cols:
        if c not in TEXT_COLUMNS:
            df[c] = pd.to_numeric(df[c].mask(df[c] == ""), errors="raise")
    return df


# ---------- Manifiesto ----------

def write_manifest(manifest: Dict[str, Any], path: str | Path) -> str:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as f:
        yaml.safe_dump(manifest, f, sort_keys=False, allow_unicode=True)
    return str(p.resolve())


def read_manifest(path: str | Path) -> Dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"No existe el manifiesto: {p}")
    with open(p, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if "config" not in data:
        raise ValueError(f"manifiesto sin 'config': {p}")
    return data


def manifest_path_for(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.yaml")
