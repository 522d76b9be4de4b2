"""Exception hierarchy shared by all subsystems.

Every domain error raised by this package derives from :class:`PyramidError`
so the CLI can map them to exit code 1 uniformly.
"""


class PyramidError(Exception):
    """Base class for all domain errors."""


# --- report parsing ---------------------------------------------------------

class MissingSection(PyramidError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"mandatory report section missing: {name}")


class MalformedRow(PyramidError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"malformed row at line {line_no}: {reason}")


class RangeViolation(PyramidError):
    def __init__(self, field: str, value):
        self.field = field
        self.value = value
        super().__init__(f"value out of range for {field}: {value!r}")


class ManifestMismatch(PyramidError):
    pass


# --- dataset ----------------------------------------------------------------

class EmptyDataset(PyramidError):
    pass


class EmptyTestSplit(PyramidError):
    pass


class InvalidK(PyramidError):
    pass


# --- feature reduction ------------------------------------------------------

class EmptyRecipe(PyramidError):
    pass


# --- learners ---------------------------------------------------------------

class SingularSystem(PyramidError):
    pass


class DivergenceDetected(PyramidError):
    pass


class NonConvergence(PyramidError):
    def __init__(self, message: str, duality_gap: float | None = None):
        self.duality_gap = duality_gap
        super().__init__(message)


class DimensionMismatch(PyramidError):
    pass


# --- evaluation -------------------------------------------------------------

class ZeroActual(PyramidError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"actual value is zero at index {index}; relative error undefined")


class MissingModel(PyramidError):
    def __init__(self, goal: str, target: str):
        self.goal = goal
        self.target = target
        super().__init__(f"no model for goal={goal} target={target}")


# --- timing search ----------------------------------------------------------

class NonPositivePeriod(PyramidError):
    pass


class NoPassingPoint(PyramidError):
    pass


class AllStrategiesFail(PyramidError):
    pass


class InvalidParams(PyramidError):
    pass
