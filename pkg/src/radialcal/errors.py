"""Exception hierarchy shared by all radialcal modules."""


class CalibrationError(Exception):
    """Base class for every error raised by this package."""

    stage = None

    def __init__(self, message, *, stage=None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class NonPositiveDepth(CalibrationError):
    """A world point lies on or behind the camera plane."""

    def __init__(self, message, *, view=None, point=None, stage=None):
        super().__init__(message, stage=stage)
        self.view = view
        self.point = point


class NegativeRadius(CalibrationError, ValueError):
    pass


class OutOfRange(CalibrationError, ValueError):
    """Distorted radius has no preimage inside the monotone range of the model."""


class NoConvergence(CalibrationError):
    pass


class DegenerateConfiguration(CalibrationError):
    pass


class IllConditioned(CalibrationError):
    pass


class BehindCamera(CalibrationError):
    pass


class RankDeficient(CalibrationError):
    pass


class OptimizerDiverged(CalibrationError):
    pass


class JacobianNaN(CalibrationError):
    pass


class SingularNormalEquations(CalibrationError):
    def __init__(self, message, *, iteration=None, stage=None):
        super().__init__(message, stage=stage)
        self.iteration = iteration


class RadiusOutOfRange(CalibrationError):
    def __init__(self, message, *, view=None, point=None, stage=None):
        super().__init__(message, stage=stage)
        self.view = view
        self.point = point


class DatasetError(CalibrationError):
    """Base for dataset file problems."""


class ParseError(DatasetError):
    def __init__(self, message, *, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(DatasetError):
    def __init__(self, message, *, field=None):
        super().__init__(message)
        self.field = field


class CountMismatch(DatasetError):
    def __init__(self, message, *, view=None, expected=None, actual=None):
        super().__init__(message)
        self.view = view
        self.expected = expected
        self.actual = actual


class InsufficientViews(CalibrationError, ValueError):
    pass
