"""Exception types raised by the library.

Each class marks one contract violation; everything derives from OamTurbError
so callers can catch the whole family at once.
"""


class OamTurbError(Exception):
    """Base class for all library errors."""


class InvalidGrid(OamTurbError, ValueError):
    """Grid constructed with a non-even or too-small side, or dx <= 0."""


class ShapeMismatch(OamTurbError, ValueError):
    """Two objects built on different grids were combined."""


class DegenerateField(OamTurbError, ValueError):
    """A field whose values make the requested operation meaningless
    (all-zero intensity, non-finite entries)."""


class ZeroDistance(OamTurbError, ValueError):
    """Propagation kernel requested for a distance that must be positive."""


class NonInvertibleKernel(OamTurbError, ValueError):
    """Inverse propagation requested through a kernel that is not
    unit-modulus (impulse-response kernels cannot be inverted exactly)."""


class InvalidTurbulence(OamTurbError, ValueError):
    """Non-physical turbulence parameters (cn2 <= 0, l_min >= l_max, ...)."""


class InsufficientEnsemble(OamTurbError, ValueError):
    """Statistics requested from fewer screens than the estimator needs."""


class EmptyDataset(OamTurbError, ValueError):
    """Dataset with no images where at least one is required."""


class DegenerateDataset(OamTurbError, ValueError):
    """Training requested on labels that do not cover two classes."""


class MissingInput(OamTurbError, FileNotFoundError):
    """A file referenced by a manifest or render spec does not exist."""


class CorruptArtifact(OamTurbError, ValueError):
    """A saved artifact (model file, dataset manifest) exists but failed
    its integrity checks."""


class ConfigError(OamTurbError, ValueError):
    """Malformed configuration file or contradictory option values."""
