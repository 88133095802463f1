"""Exception hierarchy shared by every pipeline stage."""


class VrcError(Exception):
    """Base class for all solver errors."""


class UnknownToken(VrcError):
    pass


class UnknownCategory(VrcError):
    pass


class MalformedRecord(VrcError):
    pass


class GeometryError(VrcError):
    pass


class UnparseableQuestion(VrcError):
    pass


class NoCandidates(VrcError):
    """A reference record matched no detection."""


class EmptyScene(VrcError):
    pass


class Ambiguous(VrcError):
    pass


class NoMatch(VrcError):
    pass


class MalformedAnswer(VrcError):
    pass


class BackendError(VrcError):
    pass


class NoValidAnchor(VrcError):
    pass


class PlacementFailure(VrcError):
    pass


class NoUniqueQuestion(VrcError):
    pass


class ConfigError(VrcError):
    pass
