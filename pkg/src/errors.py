"""Jerarquía de errores del banco de trabajo."""


class DsiiError(Exception):
    """Error base."""


class InvalidConfigError(DsiiError):
    """Configuración inválida (código de salida 2)."""


class PotentialError(DsiiError, ValueError):
    """Potencial inválido o con soporte que toca el borde de la caja."""


class DomainMismatchError(DsiiError, ValueError):
    """Funciones muestreadas sobre dominios distintos."""


class NumericalError(DsiiError):
    """Fallo numérico (código de salida 3)."""


class NearExceptional(NumericalError):
    """k demasiado cerca de un punto excepcional."""

    def __init__(self, k: complex, det_abs: float, message: str = ""):
        self.k = k
        self.det_abs = det_abs
        super().__init__(message or f"k={k:.6g} cerca del conjunto excepcional (|D|={det_abs:.3e})")


class NoConvergence(NumericalError):
    """El solver iterativo no alcanzó la tolerancia."""


class EigenvalueOnContour(NumericalError):
    """Un autovalor cae sobre la banda del contorno de Riesz."""


class GapTooLarge(NumericalError):
    """Proyecciones demasiado lejanas para la similitud de Sz.-Nagy."""


class NonFiniteDeterminant(NumericalError):
    """El determinante renormalizado no es finito."""


class SingularFamily(NumericalError):
    """Familia matricial con I - A(t) singular en la muestra."""


class QuadratureFailure(NumericalError):
    """Fallo de cuadratura en el modelo radial."""


class UnresolvedPhase(InvalidConfigError):
    """La fase e_k oscila más rápido de lo que la malla resuelve."""
