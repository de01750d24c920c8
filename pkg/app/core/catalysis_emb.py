"""
catalysis_emb.py - Catálisis con estados embezzling (van Dam-Hayden).

  |τ^E⟩ = Σ_j (j c_M)^(-1/2) |jj⟩,   c_M = H_M (número armónico)
  ω_ij  = (⌈((i-1)M + j)/d⌉ · d · c_M)^(-1/2)

El protocolo descarta AB, prepara |11⟩ y aplica la permutación U_AC ⊗ U_BC′.
Como U actúa igual en AC y en BC′, el estado conjunto es siempre diagonal en
la base reordenada: Σ_{k,l} diag[k,l] |k l⟩_AC |k l⟩_BC′. Se guarda sólo diag
(d×M) y se materializa el vector completo cuando el tamaño lo permite.
"""

from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.special import digamma

from .errors import CapacityExceeded, DomainError
from .plans import CatalystKind, CatalystPlan
from .qmat import DensityMatrix, fidelity_with_pure
from .teleport import square_split


EMB_SIDE_CAP = 4096
DENSE_VECTOR_CAP = 1 << 16
CHUNK = 1 << 20
DIRECT_HARMONIC_MAX = 1 << 22
CLOSED_FORM_TOL = 1e-9
LD_CEIL_REL_TOL = 1e-12
# d^e no entra en longdouble por encima de ~2^16383
MAX_LOG2_RANK = 16000.0


# ===== números armónicos y sumas por bloques =====

def harmonic_number(M: int) -> float:
    if M < 1:
        raise DomainError(f"M debe ser >= 1, llegó {M}")
    if M <= DIRECT_HARMONIC_MAX:
        # de menor a mayor para no perder los términos chicos
        return float(np.sum(1.0 / np.arange(M, 0, -1, dtype=float)))
    return float(digamma(M + 1.0) + np.euler_gamma)


def _chunks(M: int, chunk: int = CHUNK):
    start = 1
    while start <= M:
        stop = min(M, start + chunk - 1)
        yield np.arange(start, stop + 1, dtype=float)
        start = stop + 1


def _ceil_div(m: np.ndarray, d: int) -> np.ndarray:
    return np.ceil(m / d)


# ===== tipos =====

@dataclass(frozen=True, eq=False)
class EmbezzlingState:
    M: int
    c_M: float
    amplitudes: np.ndarray

    def to_state_vector(self) -> np.ndarray:
        """Vector en C⊗C′ (M² entradas), ordenado [c, c′]."""
        if self.M * self.M > DENSE_VECTOR_CAP:
            raise CapacityExceeded(f"vector de dimensión {self.M ** 2} supera el tope {DENSE_VECTOR_CAP}")
        v = np.zeros(self.M * self.M, dtype=np.complex128)
        v[np.arange(self.M) * (self.M + 1)] = self.amplitudes
        return v


@dataclass(frozen=True, eq=False)
class OmegaState:
    d: int
    M: int
    coefficients: np.ndarray   # (d, M), fila i = sistema A, columna j = sistema C


@dataclass(frozen=True, eq=False)
class RearrangementPermutation:
    d: int
    M: int
    k: np.ndarray   # (d, M), 1-indexado
    l: np.ndarray   # (d, M), 1-indexado

    def forward(self, i: int, j: int) -> Tuple[int, int]:
        """(i, j) 1-indexados -> (k, l) 1-indexados."""
        return int(self.k[i - 1, j - 1]), int(self.l[i - 1, j - 1])

    def flat_targets(self) -> np.ndarray:
        """Índice plano destino (k-1)·M + (l-1) en AC para cada (i, j)."""
        return (self.k - 1) * self.M + (self.l - 1)


@dataclass(frozen=True, eq=False)
class EmbezzlingJoint:
    """U(|11⟩⊗|τ^E⟩) en forma compacta: coeficiente de |k l⟩_AC|k l⟩_BC′."""
    d: int
    M: int
    diag: np.ndarray

    def to_state_vector(self) -> np.ndarray:
        """Vector completo ordenado [a, b, c, c′] (d²M² entradas)."""
        d, M = self.d, self.M
        if (d * M) ** 2 > DENSE_VECTOR_CAP:
            raise CapacityExceeded(f"vector de dimensión {(d * M) ** 2} supera el tope {DENSE_VECTOR_CAP}")
        v = np.zeros((d, d, M, M), dtype=np.complex128)
        a = np.arange(d)[:, None]
        c = np.arange(M)[None, :]
        v[a, a, c, c] = self.diag
        return v.reshape(-1)

    def to_density(self) -> DensityMatrix:
        d, M = self.d, self.M
        return DensityMatrix.pure(self.to_state_vector(), split=(d * d, M * M))


@dataclass(frozen=True)
class Lemma2Chain:
    """Eslabones: F_exact = overlap² y overlap ≥ Σω_1j² ≥ H_⌊M/d⌋/H_M ≥ (ln M − ln d)/ln M."""
    overlap: float
    omega_mass: float
    harmonic_ratio: float
    log_ratio: float

    @property
    def fidelity(self) -> float:
        return self.overlap ** 2

    @property
    def bound(self) -> float:
        return self.log_ratio ** 2

    def holds(self, tol: float = 1e-12) -> bool:
        return (self.overlap + tol >= self.omega_mass
                and self.omega_mass + tol >= self.harmonic_ratio
                and self.harmonic_ratio + tol >= self.log_ratio)


# ===== construcciones =====

def embezzling_state(M: int) -> EmbezzlingState:
    if M < 1:
        raise DomainError(f"M debe ser >= 1, llegó {M}")
    c = harmonic_number(M)
    amps = 1.0 / np.sqrt(np.arange(1, M + 1, dtype=float) * c)
    amps.setflags(write=False)
    return EmbezzlingState(M=M, c_M=c, amplitudes=amps)


def _check_dm(d: int, M: int) -> None:
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    if M < d:
        raise DomainError(f"se requiere M >= d (M={M}, d={d})")


def omega_state(d: int, M: int) -> OmegaState:
    _check_dm(d, M)
    c = harmonic_number(M)
    m = np.arange(1, d * M + 1, dtype=float).reshape(d, M)
    coef = 1.0 / np.sqrt(_ceil_div(m, d) * d * c)
    coef.setflags(write=False)
    return OmegaState(d=d, M=M, coefficients=coef)


def rearrangement_perm(d: int, M: int) -> RearrangementPermutation:
    _check_dm(d, M)
    m = np.arange(1, d * M + 1, dtype=np.int64).reshape(d, M)
    l = (m + d - 1) // d
    k = m - (l - 1) * d
    return RearrangementPermutation(d=d, M=M, k=k, l=l)


def apply_rearrangement(perm: RearrangementPermutation, coefficients: np.ndarray) -> np.ndarray:
    """Coeficientes (d, M) indexados por (i, j) -> indexados por (k, l)."""
    coefficients = np.asarray(coefficients)
    if coefficients.shape != (perm.d, perm.M):
        raise DomainError(f"coeficientes {coefficients.shape} incompatibles con ({perm.d}, {perm.M})")
    out = np.zeros_like(coefficients)
    out[perm.k - 1, perm.l - 1] = coefficients
    return out


def rearrangement_unitary(perm: RearrangementPermutation) -> np.ndarray:
    """Matriz de permutación U_AC (dM × dM) en la base plana (i-1)M + (j-1)."""
    n = perm.d * perm.M
    if n * n > DENSE_VECTOR_CAP:
        raise CapacityExceeded(f"matriz {n}×{n} supera el tope {DENSE_VECTOR_CAP}")
    u = np.zeros((n, n))
    u[perm.flat_targets().reshape(-1), np.arange(n)] = 1.0
    return u


def target_coefficients(d: int, M: int) -> np.ndarray:
    """Coeficientes de φ⁺⊗τ^E en la base (k, l): 1/√(d·l·c_M)."""
    c = harmonic_number(M)
    l = np.arange(1, M + 1, dtype=float)
    return np.broadcast_to(1.0 / np.sqrt(l * d * c), (d, M)).copy()


def embezzling_joint(d: int, M: int, cap: int = EMB_SIDE_CAP) -> EmbezzlingJoint:
    _check_dm(d, M)
    if d * M > cap:
        raise CapacityExceeded(f"d·M = {d * M} supera el tope {cap}")
    init = np.zeros((d, M))
    init[0, :] = embezzling_state(M).amplitudes
    diag = apply_rearrangement(rearrangement_perm(d, M), init)
    diag.setflags(write=False)
    return EmbezzlingJoint(d=d, M=M, diag=diag)


# ===== fidelidad del protocolo =====

def embezzle_protocol(rho: DensityMatrix, M: int, cap: int = EMB_SIDE_CAP) -> Tuple[EmbezzlingJoint, float]:
    """
    Λ^E descarta ρ: el resultado depende sólo de (d, M).
    Devuelve el estado conjunto y F_U(joint, φ⁺⊗τ^E).
    """
    d = square_split(rho)
    joint = embezzling_joint(d, M, cap)
    target = apply_rearrangement(rearrangement_perm(d, M), omega_state(d, M).coefficients)
    overlap = float(np.sum(joint.diag * target))
    return joint, overlap ** 2


def exact_fidelity(d: int, M: int) -> float:
    """(Σ_j ω_1j/√(j c_M))², en bloques; sirve más allá del tope denso."""
    _check_dm(d, M)
    c = harmonic_number(M)
    total = 0.0
    for j in _chunks(M):
        total += float(np.sum(1.0 / np.sqrt(_ceil_div(j, d) * d * j))) / c
    return total ** 2


def lemma2_bound(d: int, M: int) -> float:
    if d < 2 or M < d:
        raise DomainError(f"se requiere M >= d >= 2 (M={M}, d={d})")
    r = (math.log(M) - math.log(d)) / math.log(M)
    return float(r * r)


def lemma2_chain(d: int, M: int) -> Lemma2Chain:
    if d < 2 or M < d:
        raise DomainError(f"se requiere M >= d >= 2 (M={M}, d={d})")
    c = harmonic_number(M)
    overlap = 0.0
    mass = 0.0
    for j in _chunks(M):
        blocks = _ceil_div(j, d) * d
        overlap += float(np.sum(1.0 / np.sqrt(blocks * j)))
        mass += float(np.sum(1.0 / blocks))
    return Lemma2Chain(
        overlap=overlap / c,
        omega_mass=mass / c,
        harmonic_ratio=harmonic_number(M // d) / c,
        log_ratio=(math.log(M) - math.log(d)) / math.log(M),
    )


# ===== dimensionamiento =====

def _ceil_longdouble(v: np.longdouble) -> int:
    v = np.longdouble(v)
    return int(np.ceil(v - v * np.longdouble(LD_CEIL_REL_TOL)))


def embezzling_rank(d: int, x: float) -> int:
    """⌈d^(1/(1−√(1−x)))⌉ en precisión extendida, x en (0, 1)."""
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    if not (0.0 < x < 1.0):
        raise DomainError(f"parámetro fuera de (0, 1): {x}")
    one = np.longdouble(1)
    e = one / (one - np.sqrt(one - np.longdouble(x)))
    if float(e) * np.log2(d) > MAX_LOG2_RANK:
        raise CapacityExceeded(f"rango d^{float(e):.4g} fuera de rango representable")
    return max(1, _ceil_longdouble(np.longdouble(d) ** e))


def schmidt_rank_for(d: int, epsilon: float) -> int:
    """Rango de Schmidt M que garantiza f_c ≥ 1 − ε en teletransporte."""
    x = epsilon * (d + 1) / d
    if not (0.0 < x < 1.0):
        raise DomainError(f"se requiere 0 < ε(d+1)/d < 1, llegó {x}")
    return embezzling_rank(d, x)


def min_rank_for_consumption(d: int, delta: float) -> int:
    """⌈d^(2/δ²)⌉: rango mínimo para que el consumo quede por debajo de δ."""
    if delta <= 0:
        raise DomainError(f"delta debe ser > 0, llegó {delta}")
    e = np.longdouble(2) / np.longdouble(delta) ** 2
    if float(e) * np.log2(max(d, 1)) > MAX_LOG2_RANK:
        raise CapacityExceeded(f"rango d^{float(e):.4g} fuera de rango representable")
    return max(1, _ceil_longdouble(np.longdouble(d) ** e))


# ===== consumo =====

def consumption_bound_emb(d: int, M: int) -> float:
    """√(2·log_M d)."""
    if M <= 1:
        return 0.0 if d <= 1 else float("inf")
    return math.sqrt(2.0 * math.log(d) / math.log(M))


def residual_fidelity_grouped(d: int, M: int) -> float:
    """
    F_U(ξ^E, τ^E) = Σ_k (Σ_l 1/√(((l-1)d+k)·l))² / c_M², agrupando por residuo k.
    O(M) en tiempo y memoria acotada por bloque.
    """
    _check_dm(d, M)
    c = harmonic_number(M)
    sums = np.zeros(d)
    for m in _chunks(M):
        l = _ceil_div(m, d)
        k = (m - (l - 1) * d).astype(np.int64)
        sums += np.bincount(k - 1, weights=1.0 / np.sqrt(m * l), minlength=d)
    return float(np.sum(sums ** 2)) / (c * c)


def residual_fidelity_closed_form(d: int, M: int) -> float:
    """
    (1/c_M²) Σ_m [ Σ_{i<K} 2/√(i·k_i·m·K) + 1/(m·K) ],
    K = ⌈m/d⌉, k_i = m − ⌊(m−1)/d⌋·d + (i−1)·d.
    """
    _check_dm(d, M)
    c = harmonic_number(M)
    total = 0.0
    for m in range(1, M + 1):
        K = -(-m // d)
        base = m - ((m - 1) // d) * d
        total += 1.0 / (m * K)
        if K > 1:
            i = np.arange(1, K, dtype=float)
            k_i = base + (i - 1) * d
            total += float(np.sum(2.0 / np.sqrt(i * k_i * m * K)))
    return total / (c * c)


def consumption_exact(d: int, M: int) -> float:
    """P(ξ^E, τ^E) por la suma agrupada (sin tope de tamaño)."""
    return float(np.sqrt(max(0.0, 1.0 - residual_fidelity_grouped(d, M))))


def catalyst_residual(d: int, M: int, cap: int = EMB_SIDE_CAP) -> Tuple[DensityMatrix, float, float, float]:
    """
    ξ = Tr_AB[U(|11⟩⟨11|⊗τ^E)U†] calculado directo desde el estado conjunto.
    ξ vive en span{|ll⟩_CC′}; se devuelve como matriz M×M en esa base (igual
    que τ^E), lo que preserva fidelidades y distancias.
    Devuelve (ξ, P_exacto, P_forma_cerrada, P_cota).
    """
    joint = embezzling_joint(d, M, cap)
    xi_m = joint.diag.T @ joint.diag.conj()
    xi = DensityMatrix.from_array(xi_m, check=False)
    tau = embezzling_state(M)
    p_exact = float(np.sqrt(max(0.0, 1.0 - fidelity_with_pure(xi, tau.amplitudes))))
    p_closed = float(np.sqrt(max(0.0, 1.0 - residual_fidelity_closed_form(d, M))))
    p_bound = consumption_bound_emb(d, M)

    gap = abs(p_exact - p_closed)
    if gap > CLOSED_FORM_TOL:
        # manda el cálculo directo
        logger.warning(f"catalyst_residual: forma cerrada difiere en {gap:.3e} (d={d}, M={M})")
    return xi, p_exact, p_closed, p_bound


def embed_residual(xi: DensityMatrix, M: int) -> np.ndarray:
    """Sube ξ (M×M sobre span{|ll⟩}) al espacio completo C⊗C′ (M²×M²)."""
    if xi.dim != M:
        raise DomainError(f"ξ de dimensión {xi.dim} no corresponde a M={M}")
    if M * M > EMB_SIDE_CAP:
        raise CapacityExceeded(f"M={M} demasiado grande para materializar ξ completo")
    full = np.zeros((M * M, M * M), dtype=np.complex128)
    idx = np.arange(M) * (M + 1)
    full[np.ix_(idx, idx)] = xi.matrix
    return full


def emb_catalyst_plan(d: int, M: int, fidelity_lb: float) -> CatalystPlan:
    return CatalystPlan(
        kind=CatalystKind.E,
        dimension_log2=2.0 * math.log2(M),
        size=M,
        predicted_fidelity=fidelity_lb,
        predicted_consumption=consumption_exact(d, M),
    )
