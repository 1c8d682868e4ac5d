"""Exception types shared across the package."""


class ConfigIntError(Exception):
    """Base class for all package errors."""


class InvalidEdge(ConfigIntError, IndexError):
    pass


class MixedVariant(ConfigIntError, ValueError):
    pass


class SizeLimit(ConfigIntError, ValueError):
    pass


class NotTrivalent(ConfigIntError, ValueError):
    pass


class CoincidentPoints(ConfigIntError, ValueError):
    pass


class DimensionMismatch(ConfigIntError, ValueError):
    pass


class DegreeMismatch(ConfigIntError, ValueError):
    pass


class NotChordDiagram(ConfigIntError, ValueError):
    pass


class ParseError(ConfigIntError, ValueError):
    pass


class EmbeddednessFailure(ConfigIntError, ValueError):
    pass


class UnknownName(ConfigIntError, KeyError):
    pass


class DegenerateProjection(ConfigIntError, RuntimeError):
    pass


class MalformedCode(ConfigIntError, ValueError):
    pass


class CurvesIntersect(ConfigIntError, ValueError):
    pass


class NotCocycle(ConfigIntError, ValueError):
    pass


class UnknownAnomaly(ConfigIntError, ValueError):
    pass


class InsufficientSignal(ConfigIntError, ValueError):
    pass
