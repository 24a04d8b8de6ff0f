"""Exception hierarchy. One class per contract violation so callers can
catch precisely; everything derives from TwinForgeError."""


class TwinForgeError(Exception):
    pass


# -- twin runtime ------------------------------------------------------------

class InvalidAssetId(TwinForgeError):
    pass


class DuplicateAssetId(TwinForgeError):
    pass


class InvalidTransition(TwinForgeError):
    def __init__(self, phase, event):
        super().__init__(f"no transition from {phase.name} on {event.name}")
        self.phase = phase
        self.event = event


class TwinNotBound(TwinForgeError):
    pass


# -- wire format / simulator -------------------------------------------------

class MalformedLine(TwinForgeError):
    pass


class InvalidSpec(TwinForgeError):
    pass


# -- archive -----------------------------------------------------------------

class UnknownAsset(TwinForgeError):
    pass


class OverlappingSegment(TwinForgeError):
    pass


class UnknownReplicaVersion(TwinForgeError):
    pass


# -- readiness ---------------------------------------------------------------

class EmptySeries(TwinForgeError):
    pass


class AllMissing(TwinForgeError):
    pass


class WindowTooLarge(TwinForgeError):
    pass


class AxisLengthMismatch(TwinForgeError):
    pass


# -- analytics ---------------------------------------------------------------

class SeriesTooShort(TwinForgeError):
    pass


class SeriesTooLong(TwinForgeError):
    pass


class EmptyInput(TwinForgeError):
    pass


class KExceedsN(TwinForgeError):
    pass


class DimensionMismatch(TwinForgeError):
    pass


class TooFewPoints(TwinForgeError):
    pass


class LengthMismatch(TwinForgeError):
    pass


# -- orchestrator ------------------------------------------------------------

class EmptyGrid(TwinForgeError):
    pass


class NoResults(TwinForgeError):
    pass


class MixedVersions(TwinForgeError):
    pass


class NoData(TwinForgeError):
    pass
