"""Exception types shared across the package."""


class DomainError(ValueError):
    """Evaluation requested outside a function's validity interval."""


class AnalysisError(RuntimeError):
    """A numerical analysis could not reach a verdict (bracket failure,
    no critical exponent in range, divergent iteration, ...)."""


class ResonanceError(AnalysisError):
    """An exact lattice resonance was found while certifying a frequency."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class HypothesisError(AnalysisError):
    """A structural hypothesis check failed; carries the failing tag and margin."""

    def __init__(self, message: str, hypothesis: str, margin: float | None = None):
        super().__init__(message)
        self.hypothesis = hypothesis
        self.margin = margin
