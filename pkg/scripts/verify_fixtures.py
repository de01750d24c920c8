from __future__ import annotations
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
APP = ROOT / "app"
if str(APP) not in sys.path:
    sys.path.insert(0, str(APP))

from core.registry import Registry, load_fixture
from core.teleport import average_fidelity_formula, entanglement_fraction
from core.utils import file_sha256


def main() -> int:
    reg = Registry(APP / "config" / "registry.yaml")
    bad = 0
    for e in reg.entries():
        if not Path(e.path).is_file():
            print(f"[FALTA] {e.source}: {e.path}")
            bad += 1
            continue
        got = file_sha256(e.path)
        if got != e.sha256:
            print(f"[SHA] {e.source}\n  Esperado: {e.sha256}\n  Obtenido: {got}")
            bad += 1
            continue
        rho = load_fixture(e.table, e.row, registry=reg, verify=False)
        F = entanglement_fraction(rho)
        print(f"[OK] {e.source}  F={F:.4f}  f={average_fidelity_formula(F, 2):.4f}"
              + ("" if e.label is None else f"  label={e.label:g}"))

    if bad:
        print(f"{bad} fixture(s) no verifican.")
        return 1
    print("Listo. Todos los fixtures coinciden con registry.yaml.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
