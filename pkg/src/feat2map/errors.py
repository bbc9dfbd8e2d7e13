"""Exception hierarchy shared by all feat2map modules."""


class Feat2MapError(Exception):
    """Base class for every error raised by this package."""


# geometry
class ZeroLengthCurve(Feat2MapError, ValueError):
    pass


class ParameterOutOfRange(Feat2MapError, ValueError):
    pass


class DegenerateTangent(Feat2MapError, ValueError):
    pass


class DuplicateSocketAngle(Feat2MapError, ValueError):
    pass


class DegenerateCurve(Feat2MapError, ValueError):
    pass


# map model / io
class UnknownJunction(Feat2MapError, KeyError):
    pass


class MalformedInput(Feat2MapError, ValueError):
    pass


class UnresolvedReference(MalformedInput):
    pass


class NonFiniteNumber(MalformedInput):
    pass


class InvalidMap(Feat2MapError):
    """Raised by strict parsing when validation reports violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(f"{len(self.violations)} validation violation(s)")


# features
class DegenerateJunction(Feat2MapError, ValueError):
    pass


class GapSumMismatch(Feat2MapError, ValueError):
    pass


class InvalidFeature(Feat2MapError, ValueError):
    pass


class EmptyInput(Feat2MapError, ValueError):
    pass


class NoJunctions(Feat2MapError, ValueError):
    pass


# synthesis
class UnsatisfiableRotation(Feat2MapError):
    pass


class NoFeasiblePoint(Feat2MapError):
    pass


class SocketConflict(Feat2MapError):
    pass


class ChainDiscontinuity(Feat2MapError, ValueError):
    pass


# coverage
class UnsupportedLightState(Feat2MapError, ValueError):
    pass
