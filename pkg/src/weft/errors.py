"""Exception types raised across the library.

Everything derives from WeftError so callers can catch broadly; the
concrete classes exist so tests and drivers can tell failure modes apart.
"""


class WeftError(Exception):
    """Base class for all library errors."""


class InvalidPermutationError(WeftError, ValueError):
    """Permutation does not match the tensor rank or is not a permutation."""


class IncompatibleLegsError(WeftError, ValueError):
    """Legs cannot be joined or contracted (dimension/charge mismatch)."""


class LegOccupiedError(WeftError, ValueError):
    """Attempt to join a leg that is already connected."""


class LabelCollisionError(WeftError, ValueError):
    """A contraction result would carry two legs with the same label."""


class NotConnectedError(WeftError, ValueError):
    """Operation requires a connection that does not exist."""


class StructureError(WeftError, ValueError):
    """Geometric precondition violated (squeeze on dim>1, bad insert, ...)."""


class IncompatibleNodesError(WeftError, ValueError):
    """Node-level binary operation on structurally different nodes."""


class IncompatibleBlocksError(WeftError, ValueError):
    """Blockwise binary operation on tensors with different block structure."""


class NotCovariantError(WeftError, ValueError):
    """Operator does not shift charge by a constant amount."""


class InfeasibleSectorError(WeftError, ValueError):
    """Requested total charge cannot be realized on the given chain."""


class InvalidConfigurationError(WeftError, ValueError):
    """Bad system configuration value."""


class UnsupportedTermError(WeftError, ValueError):
    """Hamiltonian term outside the supported one-site / nearest-neighbour set."""


class UnsupportedObservableError(WeftError, ValueError):
    """Observable key not recognized by the scheduler."""


class UnsupportedSymmetryError(WeftError, ValueError):
    """Symmetry kind other than U(1) products."""


class DecompositionError(WeftError, RuntimeError):
    """Matrix factorization failed; message carries the offending shape."""


class ConvergenceError(WeftError, RuntimeError):
    """Iterative solver did not converge; carries the best residual seen."""

    def __init__(self, message, residual=None, eigenvalue=None):
        super().__init__(message)
        self.residual = residual
        self.eigenvalue = eigenvalue


class SymmetryDiscardError(WeftError, ValueError):
    """Strict mode: imposing block structure would discard weight."""


class DiscardedWeightWarning(UserWarning):
    """Imposing block structure discarded nonzero weight."""
