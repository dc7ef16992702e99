"""Exception hierarchy shared by every signbridge module."""


class SignBridgeError(Exception):
    """Base class for all package errors."""


class ShapeError(SignBridgeError, ValueError):
    """Array shapes (or index bounds) are incompatible."""


class ModeError(SignBridgeError, ValueError):
    """A mode index is outside ``[0, order)``."""


class DuplicateEntryError(SignBridgeError, ValueError):
    """Two sparse entries share the same multi-index."""


class GenerationError(SignBridgeError, RuntimeError):
    """Random instance generation kept producing degenerate draws."""


class ProblemValidationError(SignBridgeError, ValueError):
    """A problem failed structural validation.

    The individual violations are available as ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid problem")


class RootDomainError(SignBridgeError, ArithmeticError):
    """``a*x - b/x = c`` has no positive root for the given coefficients."""


class InfeasibleStructureError(RootDomainError):
    """A scaling update has no positive root at a specific (mode, index).

    The support pattern itself rules out the requested marginal value, so no
    amount of iterating can fix it.
    """

    def __init__(self, message, mode=None, index=None):
        self.mode = mode
        self.index = index
        super().__init__(message)


class AbsoluteContinuityError(SignBridgeError, ValueError):
    """Posterior puts mass where the prior has none (relative entropy is infinite)."""


class HypergraphError(SignBridgeError, ValueError):
    """Malformed hypergraph (bad node id, repeated node, duplicate hyperedge)."""


class UniformityError(SignBridgeError, ValueError):
    """Operation requires a k-uniform hypergraph."""


class RateUndefined(SignBridgeError, ValueError):
    """Residual reached exactly zero inside the fitting window."""


class OracleFailed(SignBridgeError, RuntimeError):
    """The reference optimizer did not reach its gradient tolerance."""
