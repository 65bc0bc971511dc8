"""Exception types shared across the package."""


class MacgyverError(Exception):
    """Base class for all package errors."""


class TooFewPoints(MacgyverError):
    pass


class NonFiniteInput(MacgyverError):
    pass


class UnknownAction(MacgyverError):
    pass


class InsufficientData(MacgyverError):
    pass


class DimensionMismatch(MacgyverError):
    pass


class DegenerateLabels(MacgyverError):
    pass


class EmptyPositives(MacgyverError):
    pass


class MissingSpectral(MacgyverError):
    pass


class MissingNetwork(MacgyverError):
    pass


class MissingReference(MacgyverError):
    pass


class MissingModel(MacgyverError):
    pass


class MissingJointScores(MacgyverError):
    pass


class ManifestError(MacgyverError):
    pass


class EmptyBatch(MacgyverError):
    pass


class EmptyCases(MacgyverError):
    pass


class IoError(MacgyverError):
    pass
