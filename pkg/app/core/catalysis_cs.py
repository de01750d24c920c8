"""
catalysis_cs.py - Catálisis asistida por el lema de convex-split.

Construcción del catalizador τ^CS = τ^(⊗ n-1) con τ = p·φ⁺ + (1-p)·ζ, fórmulas
de número de copias, verificación exacta en instancias pequeñas, cotas de
consumo y minimización de la dimensión del catalizador (n_min sobre p y
búsqueda aleatoria sobre ζ).
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from .errors import CapacityExceeded, DomainError, NumericalError, ShapeError
from .parallel import inner_stream, parallel_map
from .plans import CatalystKind, CatalystPlan
from .qmat import DensityMatrix, SupportTolerance, dmax, dmax_many, partial_trace_dims, purified_distance
from .qstates import SeededRng, max_entangled_density, maximally_mixed, random_full_rank
from .search import golden_section
from .teleport import square_split, average_fidelity_formula, entanglement_fraction
from .utils import ceil_tol


N_CAP = 2 ** 40
EXACT_CS_CAP = 64
P_GRID_POINTS = 1000
P_REFINE_TOL = 1e-6
FULL_RANK_MIN_EIG = 1e-6

TASK_TELEPORT = "teleport"
TASK_DISTILL = "distill"


# ===== tipos =====

@dataclass(frozen=True, eq=False)
class CsCatalystSpec:
    tau: DensityMatrix
    p: float
    zeta: DensityMatrix
    n: int
    k: float

    @property
    def impractical(self) -> bool:
        return self.n >= N_CAP


@dataclass(eq=False)
class NminQuery:
    rho: DensityMatrix
    epsilon: float
    N: int
    rng: SeededRng
    # lista explícita de candidatos; si viene, reemplaza al muestreo
    candidates: Optional[Sequence[DensityMatrix]] = None
    task: str = TASK_TELEPORT
    threads: int = 1
    tol: SupportTolerance = field(default_factory=SupportTolerance)

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise DomainError(f"epsilon debe estar en (0, 1), llegó {self.epsilon}")
        if self.task not in (TASK_TELEPORT, TASK_DISTILL):
            raise DomainError(f"tarea desconocida: {self.task}")
        if self.candidates is None and self.N < 1:
            raise DomainError(f"N debe ser >= 1, llegó {self.N}")
        if self.threads < 1:
            raise DomainError(f"threads debe ser >= 1, llegó {self.threads}")


@dataclass(frozen=True, eq=False)
class NminSearchResult:
    n_min_N: int
    best_zeta: DensityMatrix
    n_min_mixed: int
    p_star_best: float
    p_star_mixed: float
    best_index: int

    def __iter__(self):
        return iter((self.n_min_N, self.best_zeta, self.n_min_mixed))


@dataclass(frozen=True)
class NPoint:
    """Evaluación del objetivo en un p: k = D_max(ρ‖τ_p), holgura ε′ − √((1-p)(1-F(ζ)))."""
    p: float
    k: float
    slack: float
    n_real: float
    n: int

    @property
    def feasible(self) -> bool:
        return self.slack > 0 and np.isfinite(self.n_real)


# ===== construcción =====

def build_tau(zeta: DensityMatrix, p: float) -> DensityMatrix:
    if not (0.0 <= p < 1.0):
        raise DomainError(f"p debe estar en [0, 1), llegó {p}")
    d = square_split(zeta)
    if p == 0.0:
        return zeta
    phi = max_entangled_density(d)
    return DensityMatrix.from_array(p * phi.matrix + (1.0 - p) * zeta.matrix, split=zeta.split, check=False)


def copies_for_fidelity(k: float, d: int, epsilon: float, cap: int = N_CAP) -> int:
    """⌈2^(k+2)·d / (ε(d+1))⌉, topeado en `cap`."""
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon debe estar en (0, 1), llegó {epsilon}")
    if k < 0:
        raise DomainError(f"k debe ser >= 0, llegó {k}")
    if not np.isfinite(k) or k + 2 > 1023:
        return cap
    val = 2.0 ** (k + 2) * d / (epsilon * (d + 1))
    return min(cap, ceil_tol(val))


def marginal_after_cs(rho: DensityMatrix, tau: DensityMatrix, n: int) -> DensityMatrix:
    """ρ^(n) = ρ/n + (n-1)τ/n, sin materializar el espacio de n copias."""
    if n < 1:
        raise DomainError(f"n debe ser >= 1, llegó {n}")
    if rho.dim != tau.dim:
        raise ShapeError(f"dimensiones distintas: {rho.dim} vs {tau.dim}")
    m = rho.matrix / n + (n - 1) * tau.matrix / n
    return DensityMatrix.from_array(m, split=rho.split, check=False)


def cs_joint_state_exact(rho: DensityMatrix, tau: DensityMatrix, n: int,
                         cap: int = EXACT_CS_CAP) -> Tuple[DensityMatrix, float]:
    """
    Mezcla explícita Σ_t (1/n)·(τ⊗…⊗ρ_t⊗…⊗τ) y su purified distance a τ^⊗n.
    Sólo para verificación en tamaños chicos (dim^n <= cap).
    """
    if n < 1:
        raise DomainError(f"n debe ser >= 1, llegó {n}")
    if rho.dim != tau.dim:
        raise ShapeError(f"dimensiones distintas: {rho.dim} vs {tau.dim}")
    total = rho.dim ** n
    if total > cap:
        raise CapacityExceeded(f"estado conjunto de dimensión {total} supera el tope {cap}")

    joint = np.zeros((total, total), dtype=np.complex128)
    target = np.ones((1, 1), dtype=np.complex128)
    for _ in range(n):
        target = np.kron(target, tau.matrix)
    for t in range(n):
        layer = np.ones((1, 1), dtype=np.complex128)
        for s in range(n):
            layer = np.kron(layer, rho.matrix if s == t else tau.matrix)
        joint += layer / n

    split = (rho.dim, rho.dim ** (n - 1))
    joint_dm = DensityMatrix.from_array(joint, split=split, check=False)
    target_dm = DensityMatrix.from_array(target, split=split, check=False)
    return joint_dm, purified_distance(joint_dm, target_dm)


def first_slot_marginal(joint: DensityMatrix, d_slot: int, n: int) -> DensityMatrix:
    """Marginal del primer bloque A1B1 de un estado conjunto de n bloques."""
    out = partial_trace_dims(joint.matrix, [d_slot] * n, [0])
    return DensityMatrix.from_array(out, check=False)


# ===== consumo =====

def consumption_bound(k: float, n: int) -> float:
    if n < 1:
        raise DomainError(f"n debe ser >= 1, llegó {n}")
    return float(np.sqrt(2.0 ** k / n))


def min_copies(k: float, delta: float) -> int:
    """Inversa de consumption_bound: ⌈2^k/δ²⌉."""
    if delta <= 0:
        raise DomainError(f"delta debe ser > 0, llegó {delta}")
    return ceil_tol(2.0 ** k / delta ** 2)


def catalyst_dimension_log2(d: int, n: int) -> float:
    """log2 de la dimensión de τ^CS: (d²)^(n-1)."""
    return 2.0 * (n - 1) * float(np.log2(d))


# ===== plan directo (p mínimo + n) =====

def min_p_teleport(zeta: DensityMatrix, epsilon: float) -> float:
    d = square_split(zeta)
    fz = entanglement_fraction(zeta)
    return max(0.0, 1.0 - epsilon * (d + 1) / (4.0 * d * (1.0 - fz)))


def plan_cs_catalyst(rho: DensityMatrix, zeta: DensityMatrix, epsilon: float,
                     tol: SupportTolerance | None = None) -> CsCatalystSpec:
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon debe estar en (0, 1), llegó {epsilon}")
    d = square_split(rho)
    p = min_p_teleport(zeta, epsilon)
    tau = build_tau(zeta, p)
    k = dmax(rho, tau, tol)
    n = copies_for_fidelity(k, d, epsilon)
    return CsCatalystSpec(tau=tau, p=p, zeta=zeta, n=n, k=k)


def catalyst_plan_from_spec(spec: CsCatalystSpec, epsilon: float) -> CatalystPlan:
    d = square_split(spec.tau)
    return CatalystPlan(
        kind=CatalystKind.CS,
        dimension_log2=catalyst_dimension_log2(d, spec.n),
        size=spec.n,
        predicted_fidelity=1.0 - epsilon,
        predicted_consumption=consumption_bound(spec.k, spec.n),
        impractical=spec.impractical,
    )


def cs_average_fidelity(rho: DensityMatrix, spec: CsCatalystSpec) -> float:
    """Fidelidad promedio de teletransporte con el marginal ρ^(n)."""
    d = square_split(rho)
    return average_fidelity_formula(entanglement_fraction(marginal_after_cs(rho, spec.tau, spec.n)), d)


# ===== n_min sobre p =====

def allowed_error(epsilon: float, d: int, task: str = TASK_TELEPORT) -> float:
    """ε′: √(ε(d+1)/d) para teletransporte, √ε para destilación."""
    if task == TASK_TELEPORT:
        return float(np.sqrt(epsilon * (d + 1) / d))
    if task == TASK_DISTILL:
        return float(np.sqrt(epsilon))
    raise DomainError(f"tarea desconocida: {task}")


def _n_from(k: np.ndarray, slack: np.ndarray, cap: int) -> Tuple[np.ndarray, np.ndarray]:
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        n_real = np.where(slack > 0, np.exp2(np.minimum(k, 1023.0)) / slack ** 2, np.inf)
    n_real = np.where(np.isfinite(k), n_real, np.inf)
    n_int = np.full(n_real.shape, cap, dtype=np.int64)
    ok = np.isfinite(n_real) & (n_real < cap)
    n_int[ok] = [ceil_tol(x) for x in n_real[ok]]
    return n_real, np.maximum(n_int, 1)


class _NObjective:
    """Objetivo n(p) para un par (ρ, ζ) fijo."""

    def __init__(self, rho: DensityMatrix, zeta: DensityMatrix, epsilon: float, task: str,
                 tol: SupportTolerance, cap: int):
        d = square_split(rho)
        if zeta.dim != rho.dim:
            raise ShapeError(f"dimensiones distintas: {rho.dim} vs {zeta.dim}")
        self.rho = rho
        self.tol = tol
        self.cap = cap
        self.eps_prime = allowed_error(epsilon, d, task)
        self.one_minus_fz = 1.0 - entanglement_fraction(zeta)
        self.phi = max_entangled_density(d).matrix
        self.zeta = zeta.matrix

    @property
    def p_low(self) -> float:
        """Cota de factibilidad: la holgura es positiva sólo para p > p_low."""
        if self.one_minus_fz <= 0:
            return 0.0
        return 1.0 - self.eps_prime ** 2 / self.one_minus_fz

    def evaluate(self, ps: np.ndarray) -> List[NPoint]:
        ps = np.asarray(ps, dtype=float)
        taus = ps[:, None, None] * self.phi + (1.0 - ps)[:, None, None] * self.zeta
        k = dmax_many(self.rho, taus, self.tol, strict=False)
        slack = self.eps_prime - np.sqrt(np.clip((1.0 - ps) * self.one_minus_fz, 0.0, None))
        n_real, n_int = _n_from(k, slack, self.cap)
        return [NPoint(float(p), float(kk), float(s), float(nr), int(ni))
                for p, kk, s, nr, ni in zip(ps, k, slack, n_real, n_int)]


def evaluate_n(rho: DensityMatrix, zeta: DensityMatrix, epsilon: float, p: float,
               task: str = TASK_TELEPORT, tol: SupportTolerance | None = None, cap: int = N_CAP) -> NPoint:
    return _NObjective(rho, zeta, epsilon, task, tol or SupportTolerance(), cap).evaluate(np.array([p]))[0]


def nmin_over_p(rho: DensityMatrix, zeta: DensityMatrix, epsilon: float,
                task: str = TASK_TELEPORT, tol: SupportTolerance | None = None,
                grid_points: int = P_GRID_POINTS, refine_tol: float = P_REFINE_TOL,
                cap: int = N_CAP) -> Tuple[int, float]:
    """
    Minimiza n(p) = ⌈2^D_max(ρ‖τ_p) / (ε′ − √((1-p)(1-F(ζ))))²⌉ sobre los p factibles.
    Grilla uniforme en [max(0, p_low), 1) y sección áurea alrededor del mejor
    punto continuo. Empates: el p más chico.
    """
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon debe estar en (0, 1), llegó {epsilon}")
    obj = _NObjective(rho, zeta, epsilon, task, tol or SupportTolerance(), cap)
    lo = max(0.0, obj.p_low)
    if lo >= 1.0:
        raise NumericalError(f"sin p factible (p_low={obj.p_low})")
    step = (1.0 - lo) / grid_points
    grid = lo + step * np.arange(grid_points)
    points = obj.evaluate(grid)

    feas = [i for i, pt in enumerate(points) if pt.feasible]
    if not feas:
        logger.warning(f"nmin_over_p: ningún p factible en la grilla (eps={epsilon}); se reporta el tope")
        return cap, float(grid[-1])

    i_best = min(feas, key=lambda i: (points[i].n_real, i))
    a = float(grid[i_best - 1]) if i_best > 0 else lo
    b = min(float(grid[i_best]) + step, 1.0 - 1e-12)

    refined: List[NPoint] = []

    def f(p: float) -> float:
        pt = obj.evaluate(np.array([p]))[0]
        refined.append(pt)
        return pt.n_real if pt.feasible else np.inf

    golden_section(f, a, b, tol=refine_tol)

    candidates = [pt for pt in points + refined if pt.feasible]
    n_min = min(pt.n for pt in candidates)
    p_star = min(pt.p for pt in candidates if pt.n == n_min)

    # chequeo a posteriori de la restricción en (n_min, p*)
    chk = obj.evaluate(np.array([p_star]))[0]
    if n_min < cap and not (chk.slack > 0 and n_min * (1 + 1e-12) >= chk.n_real):
        raise NumericalError(f"restricción violada en p*={p_star}: n={n_min}, n_real={chk.n_real}")
    return int(n_min), float(p_star)


def nmin_search(query: NminQuery, grid_points: int = P_GRID_POINTS, refine_tol: float = P_REFINE_TOL,
                min_eig: float = FULL_RANK_MIN_EIG, cap: int = N_CAP) -> NminSearchResult:
    """
    Candidato 0 = I/d² (referencia, siempre incluido); luego N candidatos de
    rango completo, cada uno con su propio stream derivado de query.rng.
    """
    rho = query.rho
    d = square_split(rho)

    mixed = maximally_mixed(d * d, split=(d, d))
    if query.candidates is not None:
        pool: List[DensityMatrix] = [mixed] + [z.with_split((d, d)) for z in query.candidates]
    else:
        pool = [mixed] + [
            random_full_rank(d * d, query.rng.spawn(inner_stream(j)), min_eig=min_eig, split=(d, d))
            for j in range(query.N)
        ]

    def job(z: DensityMatrix) -> Tuple[int, float]:
        return nmin_over_p(rho, z, query.epsilon, task=query.task, tol=query.tol,
                           grid_points=grid_points, refine_tol=refine_tol, cap=cap)

    results = parallel_map(job, pool, threads=query.threads)
    best = min(range(len(results)), key=lambda i: (results[i][0], i))
    logger.debug(
        f"nmin_search: eps={query.epsilon:.4g} n_mixed={results[0][0]} "
        f"n_best={results[best][0]} (candidato {best} de {len(pool)})"
    )
    return NminSearchResult(
        n_min_N=results[best][0],
        best_zeta=pool[best],
        n_min_mixed=results[0][0],
        p_star_best=results[best][1],
        p_star_mixed=results[0][1],
        best_index=best,
    )


def descent_ratio(n_mixed: int, n_best: int) -> float:
    if n_mixed < 1:
        raise DomainError(f"n_mixed debe ser >= 1, llegó {n_mixed}")
    return (n_mixed - n_best) / n_mixed
