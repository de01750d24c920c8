"""
teleport.py - Canal estándar de teletransporte, fracción de entrelazamiento
y fidelidad promedio (fórmula cerrada + validador Monte Carlo).

Medición de Bell con operadores de Weyl (reloj y desplazamiento):
  |Φ_ab⟩ = (I ⊗ X^a Z^b)|φ⁺⟩,  corrección de Bob = (X^a Z^b)^T.
"""

from __future__ import annotations
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .errors import DomainError, ShapeError
from .parallel import inner_stream, parallel_map
from .qmat import DensityMatrix
from .qstates import PureStateVector, SeededRng, haar_pure_batch


MC_MIN_SAMPLES = 100
# tamaño de bloque fijo: el resultado no depende del número de hilos
MC_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class TeleportOutcomeTable:
    d: int
    corrections: Tuple[np.ndarray, ...]
    # matrices de amplitud Φ (d×d, fila = R, columna = A) de cada estado de Bell
    bell_amplitudes: Tuple[np.ndarray, ...]
    labels: Tuple[Tuple[int, int], ...]

    @property
    def projectors(self) -> List[np.ndarray]:
        out = []
        for phi in self.bell_amplitudes:
            v = phi.reshape(-1)
            out.append(np.outer(v, v.conj()))
        return out

    def __len__(self) -> int:
        return len(self.labels)


def weyl_operators(d: int) -> Tuple[np.ndarray, np.ndarray]:
    """(X, Z): X|j⟩ = |j+1 mod d⟩, Z|j⟩ = ω^j|j⟩."""
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    x = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


@lru_cache(maxsize=16)
def bell_basis(d: int) -> TeleportOutcomeTable:
    if d < 2:
        raise DomainError(f"bell_basis requiere d >= 2, llegó {d}")
    x, z = weyl_operators(d)
    corrections, amps, labels = [], [], []
    for a in range(d):
        xa = np.linalg.matrix_power(x, a)
        for b in range(d):
            w = xa @ np.linalg.matrix_power(z, b)
            phi = w.T / np.sqrt(d)
            corr = w.T.copy()
            phi.setflags(write=False)
            corr.setflags(write=False)
            amps.append(phi)
            corrections.append(corr)
            labels.append((a, b))
    return TeleportOutcomeTable(d=d, corrections=tuple(corrections),
                                bell_amplitudes=tuple(amps), labels=tuple(labels))


def square_split(rho: DensityMatrix) -> int:
    if rho.split is None or rho.split[0] != rho.split[1]:
        raise ShapeError(f"se requiere partición cuadrada d×d, llegó {rho.split}")
    return rho.split[0]


def entanglement_fraction(rho: DensityMatrix) -> float:
    """Tr[ρ φ⁺] = (1/d) Σ_ij ρ[(i,i),(j,j)]."""
    d = square_split(rho)
    idx = np.arange(d) * (d + 1)
    val = float(np.real(rho.matrix[np.ix_(idx, idx)].sum())) / d
    return min(1.0, max(0.0, val))


def average_fidelity_formula(F: float, d: int) -> float:
    if not (0.0 <= F <= 1.0):
        raise DomainError(f"fracción de entrelazamiento fuera de [0, 1]: {F}")
    if d < 1:
        raise DomainError(f"d debe ser >= 1, llegó {d}")
    return (F * d + 1.0) / (d + 1.0)


def _bob_outputs(resource: DensityMatrix, messages: np.ndarray) -> np.ndarray:
    """Salidas de Bob (n, d, d) para una pila de mensajes (n, d)."""
    d = square_split(resource)
    if messages.shape[1] != d:
        raise ShapeError(f"mensaje de dimensión {messages.shape[1]} para recurso {d}×{d}")
    table = bell_basis(d)
    r4 = resource.matrix.reshape(d, d, d, d)
    out = np.zeros((messages.shape[0], d, d), dtype=np.complex128)
    for phi, corr in zip(table.bell_amplitudes, table.corrections):
        v = messages @ phi.conj()
        block = np.einsum("na,abcd,nc->nbd", v, r4, v.conj())
        out += corr @ block @ corr.conj().T
    return out


def teleport_channel(resource: DensityMatrix, message: PureStateVector) -> DensityMatrix:
    psi = np.asarray(message.amplitudes).reshape(1, -1)
    out = _bob_outputs(resource, psi)[0]
    return DensityMatrix.from_array(out, check=False)


def _chunk_moments(resource: DensityMatrix, count: int, rng: SeededRng) -> Tuple[int, float, float]:
    d = square_split(resource)
    msgs = haar_pure_batch(d, rng, count)
    outs = _bob_outputs(resource, msgs)
    fid = np.real(np.einsum("na,nab,nb->n", msgs.conj(), outs, msgs))
    mean = float(fid.mean())
    m2 = float(((fid - mean) ** 2).sum())
    return count, mean, m2


def _merge_moments(a: Tuple[int, float, float], b: Tuple[int, float, float]) -> Tuple[int, float, float]:
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def average_fidelity_mc(resource: DensityMatrix, samples: int, rng: SeededRng,
                        threads: int = 1) -> Tuple[float, float]:
    """Media de ⟨ψ|Θ₀(ψ⊗ρ)|ψ⟩ sobre ψ de Haar y su error estándar."""
    if samples < MC_MIN_SAMPLES:
        raise DomainError(f"se requieren al menos {MC_MIN_SAMPLES} muestras, llegaron {samples}")
    square_split(resource)

    sizes = [MC_CHUNK] * (samples // MC_CHUNK)
    if samples % MC_CHUNK:
        sizes.append(samples % MC_CHUNK)

    def job(item: Tuple[int, int]):
        idx, size = item
        return _chunk_moments(resource, size, rng.spawn(inner_stream(idx)))

    parts = parallel_map(job, list(enumerate(sizes)), threads=threads)
    acc = parts[0]
    for p in parts[1:]:
        acc = _merge_moments(acc, p)
    n, mean, m2 = acc
    stderr = float(np.sqrt(m2 / (n - 1) / n))
    return mean, stderr
