"""
plans.py - Registro común de un catalizador elegido (convex-split o embezzling).
"""

from __future__ import annotations
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Any, Dict


class CatalystKind(str, Enum):
    CS = "CS"
    E = "E"


@dataclass(frozen=True)
class CatalystPlan:
    kind: CatalystKind
    dimension_log2: float          # log2 de la dimensión total del catalizador
    size: int                      # n (copias) para CS, M (rango de Schmidt) para E
    predicted_fidelity: float      # cota inferior de la fidelidad promedio / F_U
    predicted_consumption: float   # purified distance (cota o exacta)
    impractical: bool = False      # n o M topeados

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row["kind"] = self.kind.value
        return row
