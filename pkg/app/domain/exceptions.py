class DomainError(Exception):
    """Base domain error."""


# ── Data ─────────────────────────────────────────────────────────────


class DataError(DomainError):
    """Input data is missing, malformed or too short."""


class UnknownSeriesError(DataError):
    def __init__(self, name: str):
        super().__init__(f"Unknown series: {name}")
        self.name = name


class TransformDomainError(DataError):
    def __init__(self, name: str, row: int):
        super().__init__(
            f"Non-positive value under a log transform in series {name} at row {row}"
        )
        self.name = name
        self.row = row


class MissingDataError(DataError):
    def __init__(self, name: str, row: int):
        super().__init__(f"Interior missing value in series {name} at row {row}")
        self.name = name
        self.row = row


class InsufficientDataError(DataError):
    def __init__(self, needed: int, available: int, what: str = "rows"):
        super().__init__(f"Insufficient data: need {needed} {what}, have {available}")
        self.needed = needed
        self.available = available


class PanelFormatError(DataError):
    """Panel file cannot be parsed."""


class ArtifactStoreError(DataError):
    """Error reading or writing run artifacts."""


class LookAheadError(DataError):
    """A fit read data dated after its information cutoff."""


# ── Numerical ────────────────────────────────────────────────────────


class NumericalError(DomainError):
    """A numerical routine could not produce a valid result."""


class DegenerateWindowError(NumericalError):
    """All kernel weights are zero."""


class DegenerateColumnError(NumericalError):
    def __init__(self, column: int | None = None):
        label = "" if column is None else f" {column}"
        super().__init__(f"Column{label} has zero weighted second moment")
        self.column = column


class SingularLearnerError(NumericalError):
    def __init__(self, condition: float):
        super().__init__(f"Local-linear Gram matrix is singular (condition {condition:.3g})")
        self.condition = condition


class AllColumnsDegenerateError(NumericalError):
    """No design column has positive weighted second moment in the window."""


class SaturatedModelError(NumericalError):
    def __init__(self, df: float, n: int):
        super().__init__(f"Saturated model: df + 2 = {df + 2:.3f} >= n = {n}")
        self.df = df
        self.n = n


class ConvergenceError(NumericalError):
    def __init__(self, sweeps: int, change: float):
        super().__init__(
            f"No convergence after {sweeps} sweeps (last max change {change:.3g})"
        )
        self.sweeps = sweeps
        self.change = change


class UndefinedRatioError(NumericalError):
    """Benchmark sum of squared errors is zero or empty."""


# ── Configuration ────────────────────────────────────────────────────


class ConfigurationError(DomainError):
    """Options are invalid or mutually inconsistent."""


class HatTraceCapacityError(ConfigurationError):
    def __init__(self, n: int, cap: int):
        super().__init__(
            f"Hat-matrix trace needs an {n}x{n} operator (cap {cap}); "
            "use --stop cv or --stop fixed instead of AICc"
        )
        self.n = n
        self.cap = cap
