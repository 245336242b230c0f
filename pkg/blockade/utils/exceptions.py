from typing import Optional


class BlockadeError(Exception):
    """Base exception for the blockade relaxation simulator."""
    pass


class CapacityError(BlockadeError):
    """Raised when a lattice would produce more states than the memory budget allows."""

    def __init__(self, message: str, predicted_states: int, budget: int):
        super().__init__(message)
        self.predicted_states = predicted_states
        self.budget = budget


class EnumerationError(BlockadeError):
    """Raised when configuration enumeration is inconsistent."""
    pass


class DimensionMismatchError(BlockadeError):
    """Raised when a vector does not match the configuration space size."""
    pass


class NormalizationError(BlockadeError):
    """Raised when a state vector that must be normalized is not."""
    pass


class PropagationError(BlockadeError):
    """Raised when time propagation cannot reach the requested tolerance."""
    pass


class CombinatoricsError(BlockadeError):
    """Raised when a closed-form count disagrees with enumeration or is out of range."""
    pass


class RateTableError(BlockadeError):
    """Raised when a transition-rate table violates its structural identities."""
    pass


class MasterEquationError(BlockadeError):
    """Raised when the Master equation cannot be solved for the given input."""
    pass


class RelaxationFitError(BlockadeError):
    """Raised when a Gaussian relaxation fit is degenerate."""
    pass


class FokkerPlanckError(BlockadeError):
    """Raised when the Fokker-Planck solver or transform fails."""
    pass


class ExportError(BlockadeError):
    """Raised when an artifact cannot be written."""
    pass


class ExperimentError(BlockadeError):
    """Raised when an experiment stage fails; carries the stage name."""

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage


class ValidationError(BlockadeError):
    """Raised when input validation fails."""
    pass
