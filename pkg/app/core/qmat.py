"""
qmat.py - Álgebra lineal densa hermítica y métricas de información.

Todo lo que opera sobre estados pasa por DensityMatrix (matriz de solo lectura,
traza uno, semidefinida positiva, con partición bipartita opcional). Las
funciones son puras: se pueden compartir estados entre hilos sin copiar.
"""

from __future__ import annotations
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .errors import CapacityExceeded, DomainError, NotPSD, ShapeError, SupportError


ComplexMatrix = np.ndarray

DEFAULT_DIM_CAP = 4096
HERMITIAN_REJECT = 1e-8
TRACE_TOL = 1e-10
MIN_EIG_TOL = 1e-10
NOT_PSD_TOL = 1e-8
# autovalores por debajo de esto (relativo al mayor) son ruido de eigh
NOISE_FLOOR = 64 * np.finfo(float).eps
RESIDUAL_FLOOR = 1e-12


@dataclass(frozen=True)
class SupportTolerance:
    eigen_cutoff: float = 1e-10

    def __post_init__(self):
        if not (0.0 <= self.eigen_cutoff <= 1e-6):
            raise DomainError(f"eigen_cutoff fuera de [0, 1e-6]: {self.eigen_cutoff}")


def _readonly(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=np.complex128, copy=True)
    m.setflags(write=False)
    return m


def _check_split(dim: int, split: Tuple[int, int] | None) -> Tuple[int, int] | None:
    if split is None:
        return None
    a, b = int(split[0]), int(split[1])
    if a < 1 or b < 1 or a * b != dim:
        raise ShapeError(f"partición {a}x{b} incompatible con dimensión {dim}")
    return (a, b)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: ComplexMatrix
    split: Tuple[int, int] | None = None

    # ===== construcción =====
    @classmethod
    def from_array(cls, m, split: Tuple[int, int] | None = None, check: bool = True) -> "DensityMatrix":
        """
        Ingesta con simetrización (m + m†)/2. Con check=True valida traza y
        autovalor mínimo; check=False es para construcciones internas que ya
        garantizan las invariantes (productos, mezclas convexas).
        """
        arr = np.asarray(m, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ShapeError(f"se esperaba matriz cuadrada no vacía, llegó {arr.shape}")
        dim = arr.shape[0]
        split = _check_split(dim, split)

        if check:
            dev = float(np.max(np.abs(arr - arr.conj().T)))
            if dev > HERMITIAN_REJECT:
                raise DomainError(f"matriz no hermítica (desvío {dev:.3e})")
        herm = 0.5 * (arr + arr.conj().T)

        if check:
            tr = float(np.real(np.trace(herm)))
            if abs(tr - 1.0) > TRACE_TOL:
                raise DomainError(f"traza {tr:.12g} no es 1")
            wmin = float(sla.eigvalsh(herm)[0])
            if wmin < -MIN_EIG_TOL:
                raise NotPSD(f"autovalor mínimo {wmin:.3e} < -{MIN_EIG_TOL}")
        return cls(matrix=_readonly(herm), split=split)

    @classmethod
    def pure(cls, amplitudes, split: Tuple[int, int] | None = None) -> "DensityMatrix":
        v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise DomainError("vector nulo")
        v = v / nrm
        return cls.from_array(np.outer(v, v.conj()), split=split, check=False)

    @classmethod
    def mixture(cls, states: Sequence["DensityMatrix"], weights: Sequence[float],
                split: Tuple[int, int] | None = None) -> "DensityMatrix":
        w = np.asarray(weights, dtype=float)
        if len(states) != len(w) or len(states) == 0:
            raise ShapeError("mezcla: cantidad de pesos y estados distinta")
        if np.any(w < 0) or abs(w.sum() - 1.0) > TRACE_TOL:
            raise DomainError(f"pesos de mezcla inválidos: {w.tolist()}")
        dim = states[0].dim
        for s in states:
            if s.dim != dim:
                raise ShapeError(f"mezcla de dimensiones distintas: {s.dim} vs {dim}")
        m = sum(float(wi) * s.matrix for wi, s in zip(w, states))
        return cls.from_array(m, split=split if split is not None else states[0].split, check=False)

    # ===== acceso =====
    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def split_a(self) -> int | None:
        return self.split[0] if self.split else None

    @property
    def split_b(self) -> int | None:
        return self.split[1] if self.split else None

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        w = sla.eigvalsh(self.matrix)
        w.setflags(write=False)
        return w

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def with_split(self, split: Tuple[int, int] | None) -> "DensityMatrix":
        return DensityMatrix(matrix=self.matrix, split=_check_split(self.dim, split))

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, split={self.split})"


# ===== operaciones estructurales =====

def tensor_product(a: DensityMatrix, b: DensityMatrix, cap: int = DEFAULT_DIM_CAP) -> DensityMatrix:
    dim = a.dim * b.dim
    if dim > cap:
        raise CapacityExceeded(f"dimensión {dim} supera el tope {cap}")
    return DensityMatrix.from_array(np.kron(a.matrix, b.matrix), split=(a.dim, b.dim), check=False)


def partial_trace_dims(matrix: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Traza parcial multipartita: conserva los factores `keep` (en su orden original)."""
    dims = [int(x) for x in dims]
    n = len(dims)
    keep_set = sorted({int(k) for k in keep})
    if any(k < 0 or k >= n for k in keep_set):
        raise ShapeError(f"factores a conservar {keep_set} fuera de rango para {n} subsistemas")
    total = int(np.prod(dims))
    m = np.asarray(matrix)
    if m.shape != (total, total):
        raise ShapeError(f"matriz {m.shape} incompatible con dims {dims}")

    t = m.reshape(dims + dims)
    cur = n
    for ax in reversed(range(n)):
        if ax in keep_set:
            continue
        t = np.trace(t, axis1=ax, axis2=ax + cur)
        cur -= 1
    kd = int(np.prod([dims[k] for k in keep_set])) if keep_set else 1
    return t.reshape(kd, kd)


def partial_trace(rho: DensityMatrix, keep: str | int) -> DensityMatrix:
    if rho.split is None:
        raise ShapeError("partial_trace requiere una partición declarada")
    sel = {"A": 0, "B": 1, 0: 0, 1: 1}.get(keep if not isinstance(keep, str) else keep.upper())
    if sel is None:
        raise ShapeError(f"selector de subsistema inválido: {keep!r}")
    out = partial_trace_dims(rho.matrix, rho.split, [sel])
    return DensityMatrix.from_array(out, check=False)


# ===== raíces y métricas =====

def _as_array(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=np.complex128)


def _clean_spectrum(w: np.ndarray) -> np.ndarray:
    if w.size and w[0] < -NOT_PSD_TOL:
        raise NotPSD(f"autovalor {w[0]:.3e} por debajo de -{NOT_PSD_TOL}")
    floor = NOISE_FLOOR * max(float(np.max(np.abs(w))), 1.0)
    return np.where(w > floor, w, 0.0)


def psd_sqrt(rho) -> ComplexMatrix:
    m = _as_array(rho)
    w, v = sla.eigh(0.5 * (m + m.conj().T))
    w = _clean_spectrum(w)
    return (v * np.sqrt(w)) @ v.conj().T


def _pure_vector(w: np.ndarray, v: np.ndarray) -> np.ndarray | None:
    """Si el espectro limpio tiene rango uno devuelve el vector (escalado por √λ)."""
    nz = np.flatnonzero(w)
    if nz.size != 1:
        return None
    i = int(nz[0])
    return v[:, i] * np.sqrt(w[i])


def _check_same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise ShapeError(f"dimensiones distintas: {rho.dim} vs {sigma.dim}")


def fidelity_with_pure(rho: DensityMatrix, psi) -> float:
    """⟨ψ|ρ|ψ⟩ para ψ normalizado (acepta PureStateVector o arreglo)."""
    v = np.asarray(getattr(psi, "amplitudes", psi), dtype=np.complex128).reshape(-1)
    if v.shape[0] != rho.dim:
        raise ShapeError(f"dimensiones distintas: {rho.dim} vs {v.shape[0]}")
    val = float(np.real(np.vdot(v, rho.matrix @ v)))
    return min(1.0, max(0.0, val))


def uhlmann_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """[Tr √(√σ ρ √σ)]², vía valores singulares de √ρ·√σ."""
    _check_same_dim(rho, sigma)
    wr, vr = sla.eigh(rho.matrix)
    ws, vs = sla.eigh(sigma.matrix)
    wr, ws = _clean_spectrum(wr), _clean_spectrum(ws)

    # rango uno en cualquiera de los dos: fórmula directa
    psi = _pure_vector(ws, vs)
    if psi is not None:
        val = float(np.real(np.vdot(psi, rho.matrix @ psi)))
        return min(1.0, max(0.0, val))
    psi = _pure_vector(wr, vr)
    if psi is not None:
        val = float(np.real(np.vdot(psi, sigma.matrix @ psi)))
        return min(1.0, max(0.0, val))

    sr = (vr * np.sqrt(wr)) @ vr.conj().T
    ss = (vs * np.sqrt(ws)) @ vs.conj().T
    f = float(np.sum(sla.svdvals(sr @ ss))) ** 2
    return min(1.0, max(0.0, f))


def purified_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    return float(np.sqrt(max(0.0, 1.0 - uhlmann_fidelity(rho, sigma))))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _check_same_dim(rho, sigma)
    return 0.5 * float(np.sum(np.abs(sla.eigvalsh(rho.matrix - sigma.matrix))))


# ===== entropía relativa máxima =====

def _residual_threshold(tol: SupportTolerance) -> float:
    return max(tol.eigen_cutoff, RESIDUAL_FLOOR)


def dmax(rho: DensityMatrix, sigma: DensityMatrix, tol: SupportTolerance | None = None) -> float:
    """
    log2 del autovalor máximo de σ^(-1/2) ρ σ^(-1/2), con la pseudo-inversa
    restringida al soporte de σ (corte relativo al mayor autovalor).
    """
    tol = tol or SupportTolerance()
    _check_same_dim(rho, sigma)
    w, v = sla.eigh(sigma.matrix)
    cut = tol.eigen_cutoff * float(w[-1])
    supp = w > cut

    null = v[:, ~supp]
    if null.shape[1]:
        residual = float(np.real(np.trace(null.conj().T @ rho.matrix @ null)))
        if residual > _residual_threshold(tol):
            raise SupportError(f"soporte de rho fuera del de sigma (residuo {residual:.3e})")

    b = v[:, supp] / np.sqrt(w[supp])
    lam = float(sla.eigvalsh(b.conj().T @ rho.matrix @ b)[-1])
    if lam <= 0:
        return 0.0
    return max(0.0, float(np.log2(lam)))


def dmax_many(rho: DensityMatrix, sigmas: np.ndarray, tol: SupportTolerance | None = None,
              strict: bool = True) -> np.ndarray:
    """
    dmax de rho contra una pila de sigmas (K, d, d); misma semántica elemento a
    elemento. Con strict=False los elementos sin soporte valen +inf en vez de
    lanzar SupportError.
    """
    tol = tol or SupportTolerance()
    s = np.asarray(sigmas, dtype=np.complex128)
    if s.ndim != 3 or s.shape[1:] != (rho.dim, rho.dim):
        raise ShapeError(f"pila de sigmas {s.shape} incompatible con dimensión {rho.dim}")

    w, v = np.linalg.eigh(s)
    cut = tol.eigen_cutoff * w[:, -1:]
    supp = w > cut

    bad = np.zeros(0, dtype=int)
    if not supp.all():
        vn = v * (~supp)[:, None, :]
        residual = np.real(np.einsum("kia,ij,kja->k", vn.conj(), rho.matrix, vn))
        bad = np.flatnonzero(residual > _residual_threshold(tol))
        if bad.size and strict:
            raise SupportError(
                f"soporte de rho fuera del de sigma en el elemento {int(bad[0])} "
                f"(residuo {residual[bad[0]]:.3e})"
            )

    scale = np.where(supp, 1.0 / np.sqrt(np.where(supp, w, 1.0)), 0.0)
    b = v * scale[:, None, :]
    a = np.conj(np.swapaxes(b, 1, 2)) @ rho.matrix @ b
    lam = np.linalg.eigvalsh(a)[:, -1]
    with np.errstate(divide="ignore"):
        out = np.log2(np.where(lam > 0, lam, 1.0))
    out = np.maximum(out, 0.0)
    out[bad] = np.inf
    return out
