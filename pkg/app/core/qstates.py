"""
qstates.py - Constructores y muestreadores de estados.

Estados maximalmente entrelazados, matrices densidad aleatorias (medida de
Hilbert-Schmidt por construcción de Ginibre), estados de rango completo,
vectores puros de Haar y descomposición de Schmidt.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import scipy.linalg as sla
from loguru import logger

from .errors import DomainError, SamplerStalled, ShapeError
from .qmat import DensityMatrix, _check_split


NORM_TOL = 1e-10
PROB_TOL = 1e-10
MAX_REJECTIONS = 1000
U64_MASK = (1 << 64) - 1


# ===== aleatoriedad reproducible =====

@dataclass
class SeededRng:
    """
    Generador con semilla explícita. Cada hilo de trabajo usa su propio
    SeededRng derivado con spawn(stream) = semilla XOR stream.
    """
    seed: int
    algorithm: str = "PCG64"
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed) & U64_MASK
        if self.algorithm != "PCG64":
            raise DomainError(f"algoritmo de RNG no soportado: {self.algorithm}")
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def spawn(self, stream_index: int) -> "SeededRng":
        return SeededRng(self.seed ^ (int(stream_index) & U64_MASK), self.algorithm)

    def complex_normal(self, shape) -> np.ndarray:
        g = self.generator
        return g.standard_normal(shape) + 1j * g.standard_normal(shape)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self.generator.uniform(low, high))


# ===== tipos =====

@dataclass(frozen=True, eq=False)
class PureStateVector:
    amplitudes: np.ndarray
    split: Tuple[int, int] | None = None

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=np.complex128, copy=True).reshape(-1)
        if a.size == 0:
            raise ShapeError("vector de estado vacío")
        nrm = float(np.linalg.norm(a))
        if abs(nrm - 1.0) > NORM_TOL:
            raise DomainError(f"norma {nrm:.12g} no es 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "split", _check_split(a.size, self.split))

    @classmethod
    def normalized(cls, amplitudes, split: Tuple[int, int] | None = None) -> "PureStateVector":
        a = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        nrm = np.linalg.norm(a)
        if nrm == 0:
            raise DomainError("vector nulo")
        return cls(a / nrm, split)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def density(self) -> DensityMatrix:
        return DensityMatrix.pure(self.amplitudes, split=self.split)


@dataclass(frozen=True, eq=False)
class SchmidtVector:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True).reshape(-1)
        if p.size == 0:
            raise ShapeError("vector de Schmidt vacío")
        if np.any(p < -PROB_TOL):
            raise DomainError(f"probabilidades negativas: {p.tolist()}")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise DomainError(f"las probabilidades suman {p.sum():.12g}, no 1")
        if np.any(np.diff(p) > PROB_TOL):
            raise DomainError("probabilidades de Schmidt no ordenadas de forma no creciente")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_probs(cls, probs) -> "SchmidtVector":
        """Ordena de forma no creciente; recorta negativos de redondeo."""
        p = np.clip(np.asarray(probs, dtype=float).reshape(-1), 0.0, None)
        return cls(np.sort(p)[::-1])

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.probs > PROB_TOL))

    def __len__(self) -> int:
        return int(self.probs.size)


# ===== constructores =====

def max_entangled(d: int) -> PureStateVector:
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    a = np.zeros(d * d, dtype=np.complex128)
    a[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return PureStateVector(a, split=(d, d))


def max_entangled_density(d: int) -> DensityMatrix:
    return max_entangled(d).density()


def maximally_mixed(d: int, split: Tuple[int, int] | None = None) -> DensityMatrix:
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    return DensityMatrix.from_array(np.eye(d) / d, split=split, check=False)


def basis_projector(d: int, index: int, split: Tuple[int, int] | None = None) -> DensityMatrix:
    if not 0 <= index < d:
        raise DomainError(f"índice {index} fuera de [0, {d})")
    m = np.zeros((d, d), dtype=np.complex128)
    m[index, index] = 1.0
    return DensityMatrix.from_array(m, split=split, check=False)


# ===== muestreadores =====

def random_density(d: int, rng: SeededRng, split: Tuple[int, int] | None = None) -> DensityMatrix:
    """G·G†/Tr(G·G†) con G de Ginibre d×d (medida de Hilbert-Schmidt)."""
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    g = rng.complex_normal((d, d))
    m = g @ g.conj().T
    m = m / np.real(np.trace(m))
    return DensityMatrix.from_array(m, split=split, check=False)


def random_full_rank(d: int, rng: SeededRng, min_eig: float = 1e-6,
                     split: Tuple[int, int] | None = None) -> DensityMatrix:
    if min_eig < 0:
        raise DomainError(f"min_eig debe ser >= 0, llegó {min_eig}")
    for attempt in range(MAX_REJECTIONS):
        rho = random_density(d, rng, split=split)
        if rho.min_eigenvalue >= min_eig:
            if attempt:
                logger.debug(f"random_full_rank: {attempt} rechazos antes de aceptar (d={d})")
            return rho
    raise SamplerStalled(f"{MAX_REJECTIONS} rechazos seguidos buscando autovalor mínimo >= {min_eig}")


def haar_pure(d: int, rng: SeededRng, split: Tuple[int, int] | None = None) -> PureStateVector:
    return PureStateVector.normalized(rng.complex_normal(d), split=split)


def haar_pure_batch(d: int, rng: SeededRng, count: int) -> np.ndarray:
    """Filas = vectores de Haar normalizados (count, d)."""
    v = rng.complex_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ===== Schmidt =====

def schmidt_decompose(psi: PureStateVector) -> Tuple[SchmidtVector, Tuple[np.ndarray, np.ndarray]]:
    """
    Devuelve (probs, (U, V)) con ψ = Σ_i √p_i · U[:, i] ⊗ V[:, i].
    El largo de probs es min(splitA, splitB), ceros incluidos.
    """
    if psi.split is None:
        raise ShapeError("schmidt_decompose requiere una partición declarada")
    a, b = psi.split
    u, s, vh = sla.svd(psi.amplitudes.reshape(a, b), full_matrices=False)
    probs = s ** 2
    probs = probs / probs.sum()
    return SchmidtVector(probs), (u, vh.T)


def schmidt_reconstruct(probs: SchmidtVector, bases: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    u, v = bases
    return np.einsum("i,ai,bi->ab", np.sqrt(probs.probs), u, v).reshape(-1)
