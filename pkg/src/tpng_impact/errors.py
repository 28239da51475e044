"""Exception types raised by the guidance library and simulator."""


class GuidanceError(Exception):
    """Base class for every error raised by this package."""


class CoLocated(GuidanceError):
    """Interceptor and target occupy the same point; the LOS is undefined."""


class SpeedFloor(GuidanceError):
    """Interceptor speed dropped below the configured floor."""


class OutOfEnvelope(GuidanceError):
    """Achieved acceleration left the open interval (a_min, a_max)."""


class DegenerateEnvelope(GuidanceError):
    pass


class DegenerateDenominator(GuidanceError):
    """Time-to-go denominator is (numerically) zero."""


class BStarSingular(GuidanceError):
    """Control effectiveness of the commanded input vanished."""


class NonFinite(GuidanceError):
    pass


class ValidationError(GuidanceError, ValueError):
    pass


class ScenarioParseError(GuidanceError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
