from typing import List, Optional, Tuple


class FidelityMetricsError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(FidelityMetricsError):
    pass


class DimensionMismatchError(FidelityMetricsError):
    def __init__(self, expected: int, got: int, what: str = "state"):
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch: expected {what} of dim {expected}, got {got}")


class NotHermitianError(FidelityMetricsError):
    def __init__(self, pair: Tuple[int, int], deviation: float):
        self.pair = pair
        self.deviation = deviation
        i, j = pair
        super().__init__(
            f"matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) "
            f"deviate by {deviation:.3e}"
        )


class NotPSDError(FidelityMetricsError):
    def __init__(self, eigenvalue: float):
        self.eigenvalue = eigenvalue
        super().__init__(f"matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e}")


class InternalConsistencyError(FidelityMetricsError):
    pass


class Violation:
    """One violated density-matrix invariant with its measured deviation."""

    def __init__(self, kind: str, deviation: float, detail: str = ""):
        self.kind = kind
        self.deviation = deviation
        self.detail = detail

    def __repr__(self) -> str:
        return f"Violation({self.kind!r}, {self.deviation:.3e})"

    def __str__(self) -> str:
        text = f"{self.kind}: deviation {self.deviation:.3e}"
        return f"{text} ({self.detail})" if self.detail else text


class StateValidationError(FidelityMetricsError):
    def __init__(self, violations: List[Violation]):
        self.violations = violations
        super().__init__("invalid density matrix: " + "; ".join(str(v) for v in violations))

    @property
    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]

    def deviation(self, kind: str) -> Optional[float]:
        for v in self.violations:
            if v.kind == kind:
                return v.deviation
        return None


class BlochOutOfBallError(FidelityMetricsError):
    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(f"Bloch vector outside the unit ball: |u| = {norm:.12g}")


class NormError(FidelityMetricsError):
    def __init__(self, norm_sq: float):
        self.norm_sq = norm_sq
        super().__init__(f"pure state is not normalized: squared norm {norm_sq:.15g}")


class UndefinedDirectionError(FidelityMetricsError):
    pass


class ChannelCompletenessError(FidelityMetricsError):
    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(
            f"Kraus operators are not complete: max |sum K^dag K - I| = {deviation:.3e}"
        )


class FormatError(FidelityMetricsError):
    """Malformed JSON or a document that does not follow the state/channel schema."""


class UsageError(FidelityMetricsError):
    """Unknown flag, missing argument or bad flag value on the command line."""
