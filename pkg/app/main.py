# app/main.py
from __future__ import annotations
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# --- bootstrap imports para "from core ..."
APP_ROOT = Path(__file__).resolve().parent  # .../app
if str(APP_ROOT) not in sys.path:
    sys.path.insert(0, str(APP_ROOT))

from loguru import logger

from core.config import APP_NAME, APP_VERSION, load_app_config
from core.errors import ConfigError, FixtureCorrupt, NumericalError
from core.experiments import (
    EXPERIMENTS, default_config_path, load_experiment_config, replay_manifest, run_experiment,
)
from core.registry import Registry, verify_fixture_checksums
from core.runtime import init_runtime


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Teleportación y destilación catalítica: experimentos reproducibles.",
    )
    ap.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    ap.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING… (por defecto el de app_config)")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"corre el experimento '{name}'")
        p.add_argument("--config", type=Path, default=None,
                       help=f"YAML del experimento (por defecto app/experiments/{name}.yaml)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=None, help="ruta del CSV de salida")
        p.add_argument("--threads", type=int, default=None)

    r = sub.add_parser("replay", help="re-ejecuta un manifiesto y compara el sha256 del CSV")
    r.add_argument("manifest", type=Path)
    r.add_argument("--out", type=Path, default=None)

    f = sub.add_parser("fixtures", help="lista los fixtures y verifica sus sha256")
    f.add_argument("--registry", type=Path, default=None)
    return ap


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg_path = args.config or default_config_path(args.command)
    overrides = {
        "experiment": args.command,
        "seed": args.seed,
        "output_path": str(args.out) if args.out else None,
        "threads": args.threads,
    }
    config = load_experiment_config(cfg_path, overrides)
    res = run_experiment(config, load_app_config())
    print(f"{res.experiment}: {res.rows} filas -> {res.csv_path}")
    print(f"manifiesto: {res.manifest_path}")
    print(f"sha256: {res.csv_sha256}")
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    same, res = replay_manifest(args.manifest, args.out, load_app_config())
    print(f"replay -> {res.csv_path} ({'idéntico' if same else 'DISTINTO'})")
    return EXIT_OK if same else EXIT_FAILED


def _cmd_fixtures(args: argparse.Namespace) -> int:
    reg = Registry(args.registry or load_app_config().registry_path)
    status = verify_fixture_checksums(reg)
    for e in reg.entries():
        label = "" if e.label is None else f"  label={e.label:g}"
        print(f"{'ok ' if status[e.source] else 'BAD'}  {e.source}{label}")
    return EXIT_OK if all(status.values()) else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    # 1) Configuración y runtime (logs, numpy)
    try:
        cfg = load_app_config()
    except ConfigError as e:
        print(f"app_config inválida: {e}", file=sys.stderr)
        return EXIT_CONFIG
    init_runtime(cfg, level=args.log_level, threads=getattr(args, "threads", None))

    # 2) Despachar
    try:
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "fixtures":
            return _cmd_fixtures(args)
        return _cmd_experiment(args)
    except ConfigError as e:
        logger.error(f"configuración inválida: {e}")
        return EXIT_CONFIG
    except FixtureCorrupt as e:
        logger.error(f"fixture corrupto: {e}")
        return EXIT_NUMERIC
    except NumericalError as e:
        logger.error(f"error numérico: {e}")
        return EXIT_NUMERIC
    except FileNotFoundError as e:
        logger.error(str(e))
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())


# python -m venv .venv
# source .venv/bin/activate
# pip install -r requirements.txt
# python app/main.py fidelity --config app/experiments/fidelity.yaml
