"""
distill.py - Destilación de entrelazamiento de un solo disparo con catalizadores.

Variante CS: τ = p·φ⁺ + (1-p)·ζ con p ≥ 1 − ε/(4(1−F(ζ))), n = ⌈2^(k+2)/ε⌉.
Variante E: estado embezzling de rango M = ⌈d^(1/(1−√(1−ε)))⌉.
El objetivo es F_U(salida, φ⁺_d) ≥ 1 − ε.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
from loguru import logger

from .catalysis_cs import (
    N_CAP, TASK_DISTILL, NminQuery, NminSearchResult,
    build_tau, consumption_bound, marginal_after_cs, nmin_search,
)
from .catalysis_emb import (
    EMB_SIDE_CAP, catalyst_residual, consumption_bound_emb, consumption_exact,
    embezzling_rank, exact_fidelity, lemma2_bound,
)
from .errors import DomainError
from .plans import CatalystKind
from .qmat import DensityMatrix, SupportTolerance, dmax
from .qstates import SeededRng
from .teleport import entanglement_fraction, square_split
from .utils import ceil_tol


# por encima de este rango sólo se reportan cotas (las sumas O(M) se vuelven lentas)
EMB_EXACT_MAX = 1 << 30
LB_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DistillPlan:
    kind: CatalystKind
    epsilon: float
    size: int                              # n (CS) o M (E)
    predicted_fidelity_lb: float
    predicted_consumption: float
    p: Optional[float] = None
    k: Optional[float] = None
    exact_fidelity: Optional[float] = None
    tau: Optional[DensityMatrix] = None

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if self.size < 1:
            raise DomainError(f"tamaño de catalizador inválido: {self.size}")
        if self.p is not None and not (0.0 <= self.p < 1.0):
            raise DomainError(f"p debe estar en [0, 1), llegó {self.p}")
        if self.predicted_fidelity_lb < 1.0 - self.epsilon - LB_TOL:
            raise DomainError(
                f"la cota predicha {self.predicted_fidelity_lb:.12g} no alcanza 1 - epsilon = {1.0 - self.epsilon:.12g}"
            )

    def as_row(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "kind": self.kind.value,
            "p": self.p,
            "k": self.k,
            "size": self.size,
            "predicted_fidelity_lb": self.predicted_fidelity_lb,
            "exact_fidelity": self.exact_fidelity,
            "predicted_consumption": self.predicted_consumption,
        }


def _check_epsilon(epsilon: float) -> None:
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon debe estar en (0, 1), llegó {epsilon}")


def min_p_distill(zeta: DensityMatrix, epsilon: float) -> float:
    fz = entanglement_fraction(zeta)
    return max(0.0, 1.0 - epsilon / (4.0 * (1.0 - fz)))


def copies_for_distillation(k: float, epsilon: float, cap: int = N_CAP) -> int:
    """⌈2^(k+2)/ε⌉, topeado en `cap`."""
    _check_epsilon(epsilon)
    if not np.isfinite(k) or k + 2 > 1023:
        return cap
    return min(cap, ceil_tol(2.0 ** (k + 2) / epsilon))


def distill_cs_plan(rho: DensityMatrix, zeta: DensityMatrix, epsilon: float,
                    tol: SupportTolerance | None = None, cap: int = N_CAP) -> DistillPlan:
    _check_epsilon(epsilon)
    square_split(rho)
    if zeta.min_eigenvalue <= 0:
        raise DomainError(f"ζ debe ser de rango completo (autovalor mínimo {zeta.min_eigenvalue:.3e})")
    p = min_p_distill(zeta, epsilon)
    tau = build_tau(zeta, p)
    k = dmax(rho, tau, tol)
    n = copies_for_distillation(k, epsilon, cap)
    out = marginal_after_cs(rho, tau, n)
    return DistillPlan(
        kind=CatalystKind.CS,
        epsilon=epsilon,
        size=n,
        predicted_fidelity_lb=1.0 - epsilon,
        predicted_consumption=consumption_bound(k, n),
        p=p,
        k=k,
        exact_fidelity=entanglement_fraction(out),
        tau=tau,
    )


def distill_emb_plan(d: int, epsilon: float, cap: int = EMB_SIDE_CAP) -> DistillPlan:
    _check_epsilon(epsilon)
    M = embezzling_rank(d, epsilon)
    if M > EMB_EXACT_MAX:
        logger.info(f"distill_emb_plan: M={M} fuera del rango exacto, se reportan cotas")
        fid, cons = None, consumption_bound_emb(d, M)
    elif d * M <= cap:
        _, cons, _, _ = catalyst_residual(d, M, cap)
        fid = exact_fidelity(d, M)
    else:
        fid, cons = exact_fidelity(d, M), consumption_exact(d, M)
    return DistillPlan(
        kind=CatalystKind.E,
        epsilon=epsilon,
        size=M,
        predicted_fidelity_lb=lemma2_bound(d, M),
        predicted_consumption=cons,
        exact_fidelity=fid,
    )


def distill_cs_search(rho: DensityMatrix, epsilon: float, N: int, rng: SeededRng,
                      candidates: Optional[Sequence[DensityMatrix]] = None,
                      threads: int = 1, **kwargs) -> NminSearchResult:
    """Búsqueda de ζ (I/d² + N candidatos) con la restricción de destilación."""
    _check_epsilon(epsilon)
    query = NminQuery(rho=rho, epsilon=epsilon, N=N, rng=rng, candidates=candidates,
                      task=TASK_DISTILL, threads=threads)
    return nmin_search(query, **kwargs)
