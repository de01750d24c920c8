"""
experiments.py - Arnés de experimentos: configuración YAML, corrida, CSV y manifiesto.

Cada experimento devuelve filas con el esquema de storage.RESULT_SCHEMAS y un
resumen. Con la misma semilla el CSV sale idéntico byte a byte, sin importar
la cantidad de hilos.
"""

from __future__ import annotations
import math
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy
import yaml
from loguru import logger

from .catalysis_cs import (
    NminQuery, build_tau, catalyst_dimension_log2, consumption_bound, descent_ratio, nmin_search,
)
from .catalysis_emb import (
    EMB_SIDE_CAP, catalyst_residual, consumption_bound_emb, consumption_exact,
    lemma2_chain, residual_fidelity_closed_form, schmidt_rank_for,
)
from .config import APP_ROOT, APP_VERSION, AppConfig, load_app_config
from .distill import EMB_EXACT_MAX, distill_cs_plan, distill_cs_search, distill_emb_plan
from .duan_baseline import RegionLabel, qutrit_region_map
from .errors import ConfigError, DomainError
from .matrix_io import density_from_document, load_matrix_file
from .parallel import outer_stream, parallel_map
from .qmat import DensityMatrix, SupportTolerance, dmax
from .qstates import SeededRng, maximally_mixed, random_density
from .registry import Registry, load_fixture
from .storage import default_output_path, manifest_path_for, read_manifest, write_manifest, write_result_table
from .teleport import average_fidelity_formula, average_fidelity_mc, entanglement_fraction


EXPERIMENTS = ("fidelity", "nmin", "montecarlo", "embezzle", "consumption", "qutrit-map", "distill")
EXPERIMENTS_DIR = APP_ROOT / "experiments"
U64_MAX = (1 << 64) - 1
# la forma cerrada del consumo es O(M²/d); más allá sólo se reporta la suma agrupada
CLOSED_FORM_MAX_M = 1 << 12
EPS_DRAW_MIN = 1e-12


# ===== configuración =====

@dataclass
class ExperimentConfig:
    experiment: str
    d: int = 2
    epsilon: Optional[float] = None
    epsilon_grid: List[float] = field(default_factory=list)
    N: int = 100
    S: int = 200
    seed: int = 0
    state_source: str = "random"
    output_path: Optional[str] = None
    threads: int = 1
    # por experimento
    random_count: int = 20
    M_grid: List[int] = field(default_factory=list)
    d_grid: List[int] = field(default_factory=list)
    resolution: int = 100
    threshold: float = 0.9
    epsilon_margin: float = 0.01

    @property
    def epsilons(self) -> List[float]:
        if self.epsilon_grid:
            return list(self.epsilon_grid)
        return [self.epsilon] if self.epsilon is not None else []

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _need_int(name: str, v: Any, lo: int, hi: Optional[int] = None) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise ConfigError(name, f"se esperaba entero, llegó {v!r}")
    v = int(v)
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(name, f"{v} fuera de rango [{lo}, {hi if hi is not None else '∞'}]")
    return v


def _need_real(name: str, v: Any, lo: float, hi: float, open_ends: bool = True) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
        raise ConfigError(name, f"se esperaba real, llegó {v!r}")
    v = float(v)
    ok = (lo < v < hi) if open_ends else (lo <= v <= hi)
    if not ok:
        raise ConfigError(name, f"{v} fuera de {'(' if open_ends else '['}{lo}, {hi}{')' if open_ends else ']'}")
    return v


def _need_list(name: str, v: Any) -> list:
    if not isinstance(v, list):
        raise ConfigError(name, f"se esperaba lista, llegó {v!r}")
    return v


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"desconocido '{cfg.experiment}' (opciones: {', '.join(EXPERIMENTS)})")
    cfg.d = _need_int("d", cfg.d, 2)
    cfg.N = _need_int("N", cfg.N, 1)
    cfg.S = _need_int("S", cfg.S, 1)
    cfg.seed = _need_int("seed", cfg.seed, 0, U64_MAX)
    cfg.threads = _need_int("threads", cfg.threads, 1)
    cfg.random_count = _need_int("random_count", cfg.random_count, 1)
    cfg.resolution = _need_int("resolution", cfg.resolution, 1)
    cfg.threshold = _need_real("threshold", cfg.threshold, 0.0, 1.0)
    cfg.epsilon_margin = _need_real("epsilon_margin", cfg.epsilon_margin, 0.0, 1.0, open_ends=False)

    if cfg.epsilon is not None and cfg.epsilon_grid:
        raise ConfigError("epsilon", "usar epsilon o epsilon_grid, no ambos")
    if cfg.epsilon is not None:
        cfg.epsilon = _need_real("epsilon", cfg.epsilon, 0.0, 1.0)
    grid = _need_list("epsilon_grid", cfg.epsilon_grid)
    cfg.epsilon_grid = [_need_real(f"epsilon_grid[{i}]", e, 0.0, 1.0) for i, e in enumerate(grid)]
    cfg.M_grid = [_need_int(f"M_grid[{i}]", m, 1) for i, m in enumerate(_need_list("M_grid", cfg.M_grid))]
    cfg.d_grid = [_need_int(f"d_grid[{i}]", x, 2) for i, x in enumerate(_need_list("d_grid", cfg.d_grid))]

    if cfg.experiment in ("nmin", "consumption", "distill") and not cfg.epsilons:
        raise ConfigError("epsilon_grid", f"'{cfg.experiment}' requiere epsilon o epsilon_grid no vacío")
    if cfg.experiment == "consumption":
        for i, e in enumerate(cfg.epsilons):
            if e * (cfg.d + 1) / cfg.d >= 1.0:
                raise ConfigError(f"epsilon_grid[{i}]", f"ε(d+1)/d debe ser < 1, llegó {e}")
    if cfg.experiment == "embezzle":
        ds = cfg.d_grid or [cfg.d]
        ms = cfg.M_grid or [1 << k for k in range(1, 11)]
        if not any(m >= x for m in ms for x in ds):
            raise ConfigError("M_grid", "ningún M cumple M >= d")
    if cfg.experiment == "qutrit-map":
        if cfg.resolution < 50:
            raise ConfigError("resolution", f"debe ser >= 50, llegó {cfg.resolution}")
        if cfg.threshold + cfg.epsilon_margin >= 1.0:
            raise ConfigError("epsilon_margin", "threshold + epsilon_margin debe ser < 1")
    _parse_source(cfg.state_source)
    return cfg


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "el documento debe ser un mapa clave-valor")
    known = {f.name for f in fields(ExperimentConfig)}
    clean: Dict[str, Any] = {}
    for k, v in data.items():
        key = str(k).replace("-", "_")
        if key not in known:
            raise ConfigError(str(k), "campo desconocido")
        clean[key] = v
    if "experiment" not in clean:
        raise ConfigError("experiment", "campo obligatorio")
    return validate_config(ExperimentConfig(**clean))


def load_experiment_config(path: str | Path, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config", f"no existe el archivo {p}")
    with open(p, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError("config", f"YAML inválido: {e}")
    if overrides:
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    return config_from_dict(data)


def default_config_path(experiment: str) -> Path:
    return EXPERIMENTS_DIR / f"{experiment}.yaml"


# ===== fuentes de estados =====

@dataclass(frozen=True, eq=False)
class SourceState:
    source: str
    rho: DensityMatrix
    label: Optional[float] = None
    label_kind: Optional[str] = None


def _parse_source(raw: str) -> Tuple[str, List[str]]:
    if not isinstance(raw, str) or not raw:
        raise ConfigError("state_source", f"fuente inválida {raw!r}")
    kind, _, rest = raw.partition(":")
    if kind == "random" and not rest:
        return kind, []
    if kind == "file" and rest:
        return kind, [rest]
    if kind == "fixture" and rest:
        parts = rest.split(":")
        if len(parts) > 2 or not parts[0]:
            raise ConfigError("state_source", f"se esperaba fixture:<tabla>[:<fila>], llegó {raw!r}")
        if len(parts) == 2 and not parts[1].isdigit():
            raise ConfigError("state_source", f"fila no numérica en {raw!r}")
        return kind, parts
    raise ConfigError("state_source", f"fuente desconocida {raw!r} (fixture:<tabla>:<fila>, file:<ruta>, random)")


def resolve_states(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> List[SourceState]:
    kind, parts = _parse_source(cfg.state_source)
    d = cfg.d
    if kind == "random":
        return [
            SourceState(f"random:{i}", random_density(d * d, rng.spawn(outer_stream(i)), split=(d, d)))
            for i in range(cfg.random_count)
        ]
    if kind == "file":
        rho = density_from_document(load_matrix_file(parts[0]))
        if rho.split != (d, d):
            raise ConfigError("state_source", f"partición {rho.split} no coincide con d={d}")
        return [SourceState(cfg.state_source, rho)]

    reg = Registry(app.registry_path)
    try:
        table = reg.get_table(parts[0])
        rows = [int(parts[1])] if len(parts) == 2 else list(table.rows)
        for r in rows:
            reg.get_fixture(parts[0], r)
    except KeyError as e:
        raise ConfigError("state_source", str(e).strip("'\""))
    out = []
    for r in rows:
        entry = reg.get_fixture(parts[0], r)
        rho = load_fixture(parts[0], r, registry=reg)
        if rho.split != (d, d):
            raise ConfigError("state_source", f"{entry.source}: partición {rho.split} no coincide con d={d}")
        out.append(SourceState(entry.source, rho, entry.label, table.label_kind))
    return out


# ===== experimentos =====

Rows = List[Dict[str, Any]]
Summary = Dict[str, Any]


def _label_as_f(state: SourceState, d: int) -> Optional[float]:
    if state.label is None:
        return None
    if state.label_kind == "F":
        return average_fidelity_formula(state.label, d)
    return state.label


def run_fidelity(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    states = resolve_states(cfg, app, rng)
    d = cfg.d
    rows: Rows = []
    worst = 0.0
    for i, st in enumerate(states):
        F = entanglement_fraction(st.rho)
        f = average_fidelity_formula(F, d)
        f_mc = stderr = None
        if cfg.S >= 100:
            f_mc, stderr = average_fidelity_mc(st.rho, cfg.S, rng.spawn(outer_stream(i)), threads=cfg.threads)
        f_label = _label_as_f(st, d)
        if f_label is not None:
            worst = max(worst, abs(f - f_label))
        rows.append({"source": st.source, "d": d, "F": F, "f": f, "f_label": f_label,
                     "f_mc": f_mc, "f_mc_stderr": stderr})
    return rows, {"states": len(rows), "max_label_gap": worst}


def run_nmin(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    states = resolve_states(cfg, app, rng)
    tol = SupportTolerance(app.eigen_cutoff)
    rows: Rows = []
    for st in states:
        for eps in cfg.epsilons:
            # mismo rng para cada ε: el conjunto de candidatos es el mismo en toda la grilla
            q = NminQuery(rho=st.rho, epsilon=eps, N=cfg.N, rng=rng, threads=cfg.threads, tol=tol)
            res = nmin_search(q, grid_points=app.p_grid_points, refine_tol=app.p_refine_tol,
                              min_eig=app.full_rank_min_eig, cap=app.n_cap)
            rows.append({
                "source": st.source, "epsilon": eps,
                "n_min_mixed": res.n_min_mixed, "p_star_mixed": res.p_star_mixed,
                "n_min_N": res.n_min_N, "p_star_best": res.p_star_best,
                "best_index": res.best_index,
                "descent_ratio": descent_ratio(res.n_min_mixed, res.n_min_N),
            })
    improved = sum(1 for r in rows if r["descent_ratio"] > 0)
    return rows, {"points": len(rows), "points_improved": improved,
                  "max_descent_ratio": max((r["descent_ratio"] for r in rows), default=0.0)}


def draw_epsilon(rng: SeededRng, f: float) -> float:
    """ε uniforme en (0, 1 − f]; sin margen cuando el recurso ya es perfecto."""
    hi = 1.0 - f
    if not hi > EPS_DRAW_MIN:
        raise DomainError(f"sin margen para epsilon: f = {f:.12g}")
    return hi * (1.0 - rng.uniform())


def run_montecarlo(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    d = cfg.d
    tol = SupportTolerance(app.eigen_cutoff)

    def job(i: int) -> Dict[str, Any]:
        sub = rng.spawn(outer_stream(i))
        rho = random_density(d * d, sub, split=(d, d))
        f = average_fidelity_formula(entanglement_fraction(rho), d)
        eps = draw_epsilon(sub, f)
        res = nmin_search(NminQuery(rho=rho, epsilon=eps, N=cfg.N, rng=sub, tol=tol),
                          grid_points=app.p_grid_points, refine_tol=app.p_refine_tol,
                          min_eig=app.full_rank_min_eig, cap=app.n_cap)
        ratio = descent_ratio(res.n_min_mixed, res.n_min_N)
        return {"sample": i, "f": f, "epsilon": eps, "n_min_mixed": res.n_min_mixed,
                "n_min_N": res.n_min_N, "descent_ratio": ratio, "improved": ratio > 0}

    rows = parallel_map(job, range(cfg.S), threads=cfg.threads, desc="montecarlo", progress=app.progress)
    frac = sum(1 for r in rows if r["improved"]) / len(rows)
    logger.info(f"montecarlo: fracción con mejora {frac:.4f} sobre {len(rows)} muestras")
    return rows, {"samples": len(rows), "improvement_fraction": frac}


def run_embezzle(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    ds = cfg.d_grid or [cfg.d]
    ms = cfg.M_grid or [1 << k for k in range(1, 11)]
    pairs = [(d, M) for d in ds for M in ms if M >= d]
    cap = app.emb_side_cap or EMB_SIDE_CAP

    def job(pair: Tuple[int, int]) -> Dict[str, Any]:
        d, M = pair
        chain = lemma2_chain(d, M)
        if d * M <= cap:
            _, p_exact, p_closed, p_bound = catalyst_residual(d, M, cap)
        else:
            p_exact = consumption_exact(d, M)
            p_bound = consumption_bound_emb(d, M)
            p_closed = None
            if M <= CLOSED_FORM_MAX_M:
                p_closed = float(np.sqrt(max(0.0, 1.0 - residual_fidelity_closed_form(d, M))))
        return {
            "d": d, "M": M, "F_exact": chain.fidelity, "overlap": chain.overlap,
            "omega_mass": chain.omega_mass, "harmonic_ratio": chain.harmonic_ratio,
            "lemma2_bound": chain.bound,
            "f_c": average_fidelity_formula(min(1.0, chain.fidelity), d),
            "P_exact": p_exact, "P_closed_form": p_closed, "P_bound": p_bound,
            "closed_form_discrepancy": abs(p_exact - p_closed) if p_closed is not None else None,
        }

    rows = parallel_map(job, pairs, threads=cfg.threads, desc="embezzle", progress=app.progress)
    violations = sum(1 for r in rows if r["F_exact"] < r["lemma2_bound"] or r["P_exact"] > r["P_bound"] + 1e-9)
    gaps = [r["closed_form_discrepancy"] for r in rows if r["closed_form_discrepancy"] is not None]
    return rows, {"pairs": len(rows), "violations": violations, "max_closed_form_discrepancy": max(gaps, default=0.0)}


def _cs_bound_at(rho: DensityMatrix, zeta: DensityMatrix, p: float, n: int, tol: SupportTolerance) -> float:
    k = dmax(rho, build_tau(zeta, p), tol)
    return consumption_bound(k, n)


def run_consumption(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    states = resolve_states(cfg, app, rng)
    d = cfg.d
    tol = SupportTolerance(app.eigen_cutoff)
    mixed = maximally_mixed(d * d, split=(d, d))
    rows: Rows = []
    for st in states:
        for eps in cfg.epsilons:
            M = schmidt_rank_for(d, eps)
            p_e = consumption_exact(d, M) if M <= EMB_EXACT_MAX else None
            res = nmin_search(NminQuery(rho=st.rho, epsilon=eps, N=cfg.N, rng=rng, threads=cfg.threads, tol=tol),
                              grid_points=app.p_grid_points, refine_tol=app.p_refine_tol,
                              min_eig=app.full_rank_min_eig, cap=app.n_cap)
            rows.append({
                "source": st.source, "epsilon": eps,
                "M_E": M, "log2_dim_E": 2.0 * math.log2(M),
                "P_E": p_e, "P_bound_E": consumption_bound_emb(d, M),
                "n_mixed": res.n_min_mixed,
                "log2_dim_cs_mixed": catalyst_dimension_log2(d, res.n_min_mixed),
                "P_bound_cs_mixed": _cs_bound_at(st.rho, mixed, res.p_star_mixed, res.n_min_mixed, tol),
                "n_N": res.n_min_N,
                "log2_dim_cs_N": catalyst_dimension_log2(d, res.n_min_N),
                "P_bound_cs_N": _cs_bound_at(st.rho, res.best_zeta, res.p_star_best, res.n_min_N, tol),
            })
    smaller = sum(1 for r in rows if r["log2_dim_E"] < r["log2_dim_cs_N"])
    return rows, {"points": len(rows), "points_E_smaller_than_CS": smaller}


def run_qutrit_map(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    pts = qutrit_region_map(cfg.resolution, cfg.threshold, cfg.epsilon_margin,
                            grid=app.lemma3_grid, threads=cfg.threads, progress=app.progress)
    rows = [p.as_row() for p in pts]
    counts = {lab.value: 0 for lab in RegionLabel}
    for p in pts:
        counts[p.label_correlated.value] += 1
    emb_missing = sum(1 for p in pts if p.label_embezzling == RegionLabel.NOT_GUARANTEED)
    return rows, {"points": len(rows), "correlated_counts": counts, "embezzling_not_guaranteed": emb_missing}


def run_distill(cfg: ExperimentConfig, app: AppConfig, rng: SeededRng) -> Tuple[Rows, Summary]:
    states = resolve_states(cfg, app, rng)
    d = cfg.d
    tol = SupportTolerance(app.eigen_cutoff)
    mixed = maximally_mixed(d * d, split=(d, d))
    rows: Rows = []
    violations = 0
    for st in states:
        for eps in cfg.epsilons:
            cs = distill_cs_plan(st.rho, mixed, eps, tol=tol, cap=app.n_cap)
            search = distill_cs_search(st.rho, eps, cfg.N, rng, threads=cfg.threads,
                                       grid_points=app.p_grid_points, refine_tol=app.p_refine_tol,
                                       min_eig=app.full_rank_min_eig, cap=app.n_cap)
            em = distill_emb_plan(d, eps, cap=app.emb_side_cap)
            for plan, n_search in ((cs, search.n_min_N), (em, None)):
                if plan.exact_fidelity is not None and plan.exact_fidelity < 1.0 - eps - 1e-12:
                    violations += 1
                rows.append({"source": st.source, **plan.as_row(), "n_search": n_search})
    return rows, {"rows": len(rows), "violations": violations}


RUNNERS: Dict[str, Callable[[ExperimentConfig, AppConfig, SeededRng], Tuple[Rows, Summary]]] = {
    "fidelity": run_fidelity,
    "nmin": run_nmin,
    "montecarlo": run_montecarlo,
    "embezzle": run_embezzle,
    "consumption": run_consumption,
    "qutrit-map": run_qutrit_map,
    "distill": run_distill,
}


# ===== orquestación =====

@dataclass(frozen=True)
class RunResult:
    experiment: str
    rows: int
    csv_path: str
    manifest_path: str
    csv_sha256: str
    summary: Dict[str, Any]


def _versions() -> Dict[str, str]:
    return {
        "app": APP_VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def _plain(x: Any) -> Any:
    """Tipos de numpy -> nativos, para que el YAML quede legible."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def run_experiment(config: ExperimentConfig, app: AppConfig | None = None) -> RunResult:
    cfg = validate_config(config)
    app = app or load_app_config()
    out = Path(cfg.output_path) if cfg.output_path else default_output_path(app, cfg.experiment)
    cfg.output_path = str(out)

    logger.info(f"run_experiment: {cfg.experiment} seed={cfg.seed} hilos={cfg.threads} -> {out}")
    t0 = time.perf_counter()
    rows, summary = RUNNERS[cfg.experiment](cfg, app, SeededRng(cfg.seed))
    wall = time.perf_counter() - t0

    sha = write_result_table(cfg.experiment, rows, out)
    manifest = {
        "config": _plain(cfg.as_dict()),
        "seed": cfg.seed,
        "versions": _versions(),
        "wall_time_s": round(wall, 3),
        "rows": len(rows),
        "csv_path": str(out.resolve()),
        "csv_sha256": sha,
        "summary": _plain(summary),
    }
    mpath = write_manifest(manifest, manifest_path_for(out))
    logger.info(f"run_experiment: {len(rows)} filas en {wall:.2f}s, resumen {manifest['summary']}")
    return RunResult(cfg.experiment, len(rows), str(out.resolve()), mpath, sha, manifest["summary"])


def replay_manifest(path: str | Path, output_path: str | Path | None = None,
                    app: AppConfig | None = None) -> Tuple[bool, RunResult]:
    """Re-ejecuta la configuración guardada y compara el sha256 del CSV."""
    man = read_manifest(path)
    data = dict(man["config"])
    if output_path is not None:
        data["output_path"] = str(output_path)
    else:
        orig = Path(data.get("output_path") or "replay.csv")
        data["output_path"] = str(orig.with_name(orig.stem + ".replay.csv"))
    res = run_experiment(config_from_dict(data), app)
    same = res.csv_sha256 == man.get("csv_sha256")
    if not same:
        logger.warning(f"replay_manifest: sha256 distinto ({res.csv_sha256[:12]}… vs {str(man.get('csv_sha256'))[:12]}…)")
    return same, res
