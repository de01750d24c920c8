# main.py - lanzador desde la raíz del repo: python main.py <subcomando> ...
from __future__ import annotations
import runpy
from pathlib import Path


if __name__ == "__main__":
    runpy.run_path(str(Path(__file__).resolve().parent / "app" / "main.py"), run_name="__main__")
