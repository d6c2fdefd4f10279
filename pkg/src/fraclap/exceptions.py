"""Exception hierarchy shared across the library."""


class FracLapError(Exception):
    """Base class for all library errors."""


class DomainError(FracLapError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at a pole (e.g. gamma at a non-positive integer)."""


class OverflowGuardError(FracLapError):
    """Unscaled evaluation would overflow; request the scaled form."""


class InvalidPointError(DomainError):
    """Point does not satisfy the hyperboloid constraint."""


class QuadratureError(FracLapError):
    """A quadrature failed to converge within its node/tolerance budget."""


class CalibrationError(FracLapError):
    """Kernel calibration missing or internally inconsistent."""


class SmoothnessError(DomainError):
    """Test function is not smooth enough for the requested operator order."""


class InstabilityError(FracLapError):
    """Grid-doubling stability check failed for a spectral evaluation."""


class MassLeakError(FracLapError):
    """Numeric heat solve lost too much mass (domain truncated too small)."""


class ProfileError(DomainError):
    """Warping profile violates the smoothness/positivity requirements."""


class ConfigError(FracLapError):
    """Malformed run configuration, descriptor file, or expression."""
