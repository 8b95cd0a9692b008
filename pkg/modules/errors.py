"""
PolarMap v1.0 - Error Types
One exception per failure kind, plus the exit codes the runner maps them to
"""

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


class PolarMapError(Exception):
    """Base class for every error raised by PolarMap"""

    exit_code = EXIT_COMPUTATION


class InvalidShapeError(PolarMapError, ValueError):
    """Shape parameters that do not describe a smooth simple closed curve"""


class InvalidResolutionError(PolarMapError, ValueError):
    """Node count that the trapezoidal/Kress rules cannot work with"""


class SingularGeometryError(PolarMapError):
    """Coincident nodes across boundary components"""


class UnsupportedGeometryError(PolarMapError):
    """Operation that needs a single closed curve got several"""


class InvalidRhsError(PolarMapError, ValueError):
    """Right-hand side with a non-negligible weighted mean"""


class NumericalFailureError(PolarMapError):
    """Singular or indefinite matrices where a solve needs them regular"""


class ResolutionInsufficientError(PolarMapError, ValueError):
    """Requested GPT order too high for the sampling"""


class NormalizationError(PolarMapError, ValueError):
    """Map normalization violated (conformal radius must be positive)"""


class NotSimplyConnectedError(PolarMapError):
    """gamma^2_11 inconsistent with a simply connected, resolved domain"""


class MapDomainError(PolarMapError, ValueError):
    """Exterior map evaluated inside the unit disc"""


class EvaluationRegionError(PolarMapError, ValueError):
    """Field evaluation point too close to the boundary"""


class DegenerateDomainError(PolarMapError, ValueError):
    """gamma^2_11 vanishes"""


class ResonanceError(PolarMapError, ValueError):
    """Material parameter coincides with a retained NP eigenvalue"""


class ConfigError(PolarMapError, ValueError):
    """Invalid run configuration"""

    exit_code = EXIT_CONFIG


class ArtifactError(PolarMapError):
    """Output file could not be written"""

    def __init__(self, path, reason):
        super().__init__(f"Failed to write {path}: {reason}")
        self.path = path


class InvalidConductivityError(PolarMapError, ValueError):
    """Conductivity k negative or equal to 1"""
