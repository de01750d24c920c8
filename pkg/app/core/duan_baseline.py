"""
duan_baseline.py - Comparación con catalizadores correlacionados (estado de Duan).

Sólo se calcula la cota inferior del lema de Duan para estados puros:
  f_D(λ) ≥ max { f(μ) : S(μ) ≤ S(λ) },  f(μ) = ((Σ√μ_i)² + 1)/(d + 1)
y el mapa de regiones para qutrits (umbral 0.9 por defecto).
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import minimize
from scipy.special import entr

from .catalysis_emb import schmidt_rank_for
from .errors import DomainError, ShapeError
from .parallel import ResultCache, parallel_map
from .qstates import SchmidtVector


LEMMA3_MIN_GRID = 100
REGION_MIN_RESOLUTION = 50
ENTROPY_TOL = 1e-12
BISECT_STEPS = 60


class RegionLabel(str, Enum):
    ALREADY_ABOVE = "AlreadyAbove"
    CORRELATED_BOOSTABLE = "CorrelatedBoostable"
    NOT_GUARANTEED = "NotGuaranteed"
    EMBEZZLING_BOOSTABLE = "EmbezzlingBoostable"


@dataclass(frozen=True)
class RegionPoint:
    probs: Tuple[float, ...]
    f: float
    lemma3_bound: float
    label_correlated: RegionLabel
    label_embezzling: RegionLabel
    M_required: Optional[int] = None

    def as_row(self) -> dict:
        l1, l2, l3 = self.probs
        return {
            "lambda1": l1, "lambda2": l2, "lambda3": l3,
            "f": self.f,
            "lemma3_bound": self.lemma3_bound,
            "label_correlated": self.label_correlated.value,
            "label_embezzling": self.label_embezzling.value,
            "M_required": self.M_required,
        }


# ===== funciones de un punto =====

def _as_probs(probs, d: Optional[int] = None) -> np.ndarray:
    p = np.asarray(getattr(probs, "probs", probs), dtype=float).reshape(-1)
    if d is not None:
        if p.size > d:
            raise ShapeError(f"vector de Schmidt de largo {p.size} para d={d}")
        if p.size < d:
            p = np.concatenate([p, np.zeros(d - p.size)])
    return p


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    return np.sum(entr(np.clip(p, 0.0, None)), axis=-1) / np.log(2.0)


def _fidelity_rows(p: np.ndarray, d: int) -> np.ndarray:
    s = np.sum(np.sqrt(np.clip(p, 0.0, None)), axis=-1)
    return (s * s + 1.0) / (d + 1.0)


def shannon_entropy(probs: SchmidtVector | Sequence[float]) -> float:
    """−Σ p log2 p con 0·log 0 = 0."""
    return float(max(0.0, _entropy_rows(_as_probs(probs))))


def pure_state_avg_fidelity(probs: SchmidtVector | Sequence[float], d: int) -> float:
    """f del estado puro tras alinear localmente: F = (Σ√λ)²/d."""
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    return float(min(1.0, _fidelity_rows(_as_probs(probs, d), d)))


# ===== grilla del simplex =====

def simplex_grid(d: int, resolution: int) -> np.ndarray:
    """Puntos baricéntricos k/resolution (k enteros, Σk = resolution). Forma (n, d)."""
    if d < 1 or resolution < 1:
        raise DomainError(f"grilla inválida: d={d}, resolution={resolution}")
    # estrellas y barras
    rows = []
    for bars in combinations(range(resolution + d - 1), d - 1):
        edges = (-1,) + bars + (resolution + d - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(d)])
    return np.asarray(rows, dtype=float) / resolution


class EntropyFrontier:
    """
    Grilla del simplex ordenada por entropía con el máximo acumulado de f.
    value(h) es la mejor f de la grilla con S ≤ h; se comparte entre puntos.
    """

    def __init__(self, d: int, grid: int):
        if d < 2:
            raise DomainError(f"EntropyFrontier requiere d >= 2, llegó {d}")
        pts = simplex_grid(d, grid)
        # por simetría alcanza con la cámara ordenada μ1 ≥ μ2 ≥ ...
        pts = pts[np.all(np.diff(pts, axis=1) <= 0, axis=1)]
        h = _entropy_rows(pts)
        f = _fidelity_rows(pts, d)
        order = np.argsort(h, kind="stable")
        self.d = d
        self.grid = grid
        self.points = pts[order]
        self.entropies = h[order]
        f = f[order]
        best = np.zeros(f.size, dtype=np.int64)
        for i in range(1, f.size):
            best[i] = i if f[i] > f[best[i - 1]] else best[i - 1]
        self._best = best
        self._f = f

    def _index(self, h: float) -> int:
        return int(np.searchsorted(self.entropies, h + ENTROPY_TOL, side="right")) - 1

    def value(self, h: float) -> float:
        i = self._index(h)
        return float(self._f[self._best[i]]) if i >= 0 else 0.0

    def best_point(self, h: float) -> Optional[np.ndarray]:
        i = self._index(h)
        return self.points[self._best[i]].copy() if i >= 0 else None


def _pull_back(inside: np.ndarray, outside: np.ndarray, h: float) -> np.ndarray:
    """Bisección sobre el segmento hasta quedar dentro de S ≤ h."""
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if _entropy_rows((1 - mid) * inside + mid * outside) <= h:
            lo = mid
        else:
            hi = mid
    return (1 - lo) * inside + lo * outside


def _refine(start: np.ndarray, h: float, d: int) -> np.ndarray:
    """SLSQP local: max Σ√μ con Σμ = 1, S(μ) ≤ h. Siempre devuelve un punto factible."""
    cons = [
        {"type": "eq", "fun": lambda x: np.sum(x) - 1.0},
        {"type": "ineq", "fun": lambda x: h - _entropy_rows(np.clip(x, 0.0, 1.0))},
    ]
    res = minimize(lambda x: -np.sum(np.sqrt(np.clip(x, 0.0, None))), x0=start,
                   bounds=[(0.0, 1.0)] * d, constraints=cons, method="SLSQP",
                   options={"maxiter": 200, "ftol": 1e-12})
    cand = np.clip(res.x, 0.0, 1.0)
    if not np.isfinite(cand).all() or cand.sum() <= 0:
        return start
    cand = cand / cand.sum()
    if _entropy_rows(cand) > h:
        cand = _pull_back(start, cand, h)
    return cand


def lemma3_bound_for_entropy(h: float, d: int, grid: int = LEMMA3_MIN_GRID,
                             frontier: Optional[EntropyFrontier] = None) -> float:
    """Cota del lema de Duan en función del presupuesto de entropía h."""
    if grid < LEMMA3_MIN_GRID:
        raise DomainError(f"grid debe ser >= {LEMMA3_MIN_GRID}, llegó {grid}")
    if h >= np.log2(d) - ENTROPY_TOL:
        return 1.0
    front = frontier if frontier is not None else EntropyFrontier(d, grid)
    best = front.value(h)
    start = front.best_point(h)
    if h <= ENTROPY_TOL or start is None:
        return best
    refined = _refine(start, h, d)
    return float(min(1.0, max(best, _fidelity_rows(refined, d))))


def lemma3_bound(probs: SchmidtVector | Sequence[float], d: int, grid: int = LEMMA3_MIN_GRID,
                 frontier: Optional[EntropyFrontier] = None) -> float:
    """
    max f(μ) sobre el simplex con S(μ) ≤ S(λ); λ mismo es factible, así que
    nunca queda por debajo de f(λ).
    """
    p = _as_probs(probs, d)
    own = pure_state_avg_fidelity(p, d)
    bound = lemma3_bound_for_entropy(shannon_entropy(p), d, grid, frontier)
    return max(own, bound)


# ===== mapa de regiones =====

def qutrit_region_map(
    resolution: int,
    threshold: float = 0.9,
    epsilon_margin: float = 0.01,
    grid: int = LEMMA3_MIN_GRID,
    threads: int = 1,
    progress: bool = False,
) -> List[RegionPoint]:
    """
    Etiquetas de ambos paneles para cada punto del simplex de qutrits.
    El rango M adjunto es el de Schmidt que garantiza threshold + margin.
    """
    if resolution < REGION_MIN_RESOLUTION:
        raise DomainError(f"resolution debe ser >= {REGION_MIN_RESOLUTION}, llegó {resolution}")
    target = threshold + epsilon_margin
    if not (0.0 < target < 1.0):
        raise DomainError(f"threshold + margin fuera de (0, 1): {target}")

    d = 3
    m_required = schmidt_rank_for(d, 1.0 - target)
    frontier = EntropyFrontier(d, grid)
    cache = ResultCache()
    points = simplex_grid(d, resolution)

    def job(p: np.ndarray) -> RegionPoint:
        f = pure_state_avg_fidelity(p, d)
        key = tuple(np.round(np.sort(p)[::-1] * resolution).astype(int))
        bound = cache.get_or_compute(key, lambda: lemma3_bound(p, d, grid, frontier))
        if f >= threshold:
            return RegionPoint(tuple(float(x) for x in p), f, bound,
                               RegionLabel.ALREADY_ABOVE, RegionLabel.ALREADY_ABOVE, None)
        corr = RegionLabel.CORRELATED_BOOSTABLE if bound >= threshold else RegionLabel.NOT_GUARANTEED
        return RegionPoint(tuple(float(x) for x in p), f, bound, corr,
                           RegionLabel.EMBEZZLING_BOOSTABLE, m_required)

    out = parallel_map(job, list(points), threads=threads, desc="qutrit-map", progress=progress)
    counts = {lab.value: 0 for lab in RegionLabel}
    for r in out:
        counts[r.label_correlated.value] += 1
    logger.info(f"qutrit_region_map: {len(out)} puntos, panel correlacionado {counts}, M={m_required}")
    return out
