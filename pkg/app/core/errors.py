"""
errors.py - Jerarquía de excepciones de la librería.

La CLI traduce ConfigError a código de salida 2 y NumericalError (y subclases)
a código 3.
"""

from __future__ import annotations


class CatalysisError(Exception):
    """Raíz de todos los errores propios del proyecto."""


class ConfigError(CatalysisError, ValueError):
    """Configuración de experimento inválida; `field` apunta al campo culpable."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(CatalysisError):
    pass


class ShapeError(NumericalError, ValueError):
    pass


class DomainError(NumericalError, ValueError):
    pass


class NotPSD(NumericalError, ValueError):
    pass


class SupportError(NumericalError, ValueError):
    """El soporte de rho no está contenido en el de sigma (catalizador no factible)."""


class CapacityExceeded(NumericalError, RuntimeError):
    pass


class SamplerStalled(NumericalError, RuntimeError):
    pass


class FixtureCorrupt(NumericalError, ValueError):
    pass
