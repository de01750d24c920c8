"""
registry.py - Catálogo de estados de referencia (fixtures) desde registry.yaml.

Cada fila apunta a un archivo de matriz y a su sha256. load_fixture verifica el
hash y condiciona la matriz (las tablas traen 2 decimales).
"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import scipy.linalg as sla
import yaml
from loguru import logger

from .errors import FixtureCorrupt
from .matrix_io import load_matrix_file, read_matrix_document
from .qmat import DensityMatrix
from .utils import file_sha256


# redondeo a 2 decimales: traza y autovalores pueden correrse hasta 1e-2
CONDITION_TOL = 1e-2
CONDITION_SLACK = 1e-9


def _bases_to_search() -> list[Path]:
    bases: list[Path] = []
    try:
        bases.append(Path.cwd())
    except Exception:
        pass
    # raíz del repo en dev (…/app/core/ -> subir 2 niveles)
    bases.append(Path(__file__).resolve().parents[2])
    return bases


def default_registry_path() -> Path:
    """Busca base/app/config/registry.yaml en cada base; si no hay, devuelve la del repo."""
    fallback = Path(__file__).resolve().parents[1] / "config" / "registry.yaml"
    for base in _bases_to_search():
        cand = base / "app" / "config" / "registry.yaml"
        if cand.is_file():
            return cand
    return fallback


@dataclass(frozen=True)
class FixtureEntry:
    table: str
    row: int
    path: str
    sha256: str
    label: Optional[float] = None
    note: Optional[str] = None

    @property
    def source(self) -> str:
        return f"fixture:{self.table}:{self.row}"


@dataclass(frozen=True)
class FixtureTable:
    key: str
    description: str
    label_kind: Optional[str]
    rows: Dict[int, FixtureEntry]


class Registry:
    def __init__(self, yaml_path: str | Path | None = None):
        self.yaml_path = Path(yaml_path) if yaml_path else default_registry_path()
        self._tables: Dict[str, FixtureTable] = {}
        self._load()

    def _load(self) -> None:
        path = self.yaml_path
        if not path.is_file():
            raise FileNotFoundError(f"No se encontró registry.yaml en: {path}")

        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}

        tables = data.get("tables", {})
        if not isinstance(tables, dict) or not tables:
            raise ValueError("registry.yaml: campo 'tables' vacío o inválido")

        # rutas relativas se resuelven contra el YAML
        base_for_rel = path.parent

        result: Dict[str, FixtureTable] = {}
        for tkey, tval in tables.items():
            tkey = str(tkey)
            rows = (tval or {}).get("rows", {})
            if not rows:
                raise ValueError(f"registry.yaml: tabla '{tkey}' no define 'rows'")

            entries: Dict[int, FixtureEntry] = {}
            for rkey, rval in rows.items():
                if "path" not in rval or "sha256" not in rval:
                    raise ValueError(f"registry.yaml: fila {tkey}:{rkey} sin 'path' o 'sha256'")
                m_path = Path(rval["path"])
                if not m_path.is_absolute():
                    m_path = base_for_rel / m_path
                label = rval.get("label")
                entries[int(rkey)] = FixtureEntry(
                    table=tkey,
                    row=int(rkey),
                    path=str(m_path),
                    sha256=str(rval["sha256"]).lower(),
                    label=float(label) if label is not None else None,
                    note=rval.get("note"),
                )

            kind = tval.get("label_kind")
            result[tkey] = FixtureTable(
                key=tkey,
                description=tval.get("description", tkey),
                label_kind=None if kind in (None, "none") else str(kind),
                rows=dict(sorted(entries.items())),
            )

        self._tables = result

    # ===== API pública =====
    @property
    def table_keys(self) -> List[str]:
        return list(self._tables.keys())

    def get_table(self, key: str) -> FixtureTable:
        if key not in self._tables:
            raise KeyError(f"Tabla no registrada: {key}")
        return self._tables[key]

    def get_fixture(self, table: str, row: int) -> FixtureEntry:
        t = self.get_table(table)
        if int(row) not in t.rows:
            raise KeyError(f"Fila '{row}' no existe en la tabla '{table}'")
        return t.rows[int(row)]

    def entries(self) -> List[FixtureEntry]:
        return [e for t in self._tables.values() for e in t.rows.values()]


# ===== condicionamiento y carga =====

def condition_fixture(m: np.ndarray, split=None, name: str = "fixture") -> DensityMatrix:
    """
    Hermitiza, lleva a cero autovalores en [-1e-2, 0) y renormaliza la traza
    si se desvía a lo sumo 1e-2. Fuera de eso: FixtureCorrupt.
    """
    herm = 0.5 * (m + m.conj().T)
    tr = float(np.real(np.trace(herm)))
    if abs(tr - 1.0) > CONDITION_TOL + CONDITION_SLACK:
        raise FixtureCorrupt(f"{name}: traza {tr:.6g} fuera de 1 ± {CONDITION_TOL}")

    w, v = sla.eigh(herm)
    if w[0] < -(CONDITION_TOL + CONDITION_SLACK):
        raise FixtureCorrupt(f"{name}: autovalor mínimo {w[0]:.4g} por debajo de -{CONDITION_TOL}")
    if w[0] < 0:
        logger.warning(f"{name}: autovalor {w[0]:.3e} llevado a 0")
        w = np.clip(w, 0.0, None)
        herm = (v * w) @ v.conj().T
        tr = float(np.sum(w))
    if tr != 1.0:
        if abs(tr - 1.0) > 1e-12:
            logger.warning(f"{name}: traza {tr:.6g} renormalizada")
        herm = herm / tr
    return DensityMatrix.from_array(herm, split=split)


def load_fixture(table: str, row: int, registry: Registry | None = None, verify: bool = True) -> DensityMatrix:
    reg = registry or Registry()
    entry = reg.get_fixture(table, row)
    if verify:
        got = file_sha256(entry.path)
        if got != entry.sha256:
            raise FixtureCorrupt(f"{entry.source}: sha256 {got[:12]}… no coincide con el registro")
    m, split = read_matrix_document(load_matrix_file(entry.path))
    return condition_fixture(m, split=split, name=entry.source)


def verify_fixture_checksums(registry: Registry | None = None) -> Dict[str, bool]:
    """source -> True si el archivo existe y su sha256 coincide."""
    reg = registry or Registry()
    out: Dict[str, bool] = {}
    for e in reg.entries():
        ok = Path(e.path).is_file() and file_sha256(e.path) == e.sha256
        if not ok:
            logger.warning(f"verify_fixture_checksums: {e.source} no verifica ({e.path})")
        out[e.source] = ok
    return out
