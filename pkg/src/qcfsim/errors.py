"""Exception hierarchy shared by every qcfsim module."""


class QcfError(Exception):
    """Base class for all qcfsim errors."""


class CapacityError(QcfError):
    """A state or operator would exceed the dense-amplitude budget."""


class LayoutError(QcfError):
    """Register names or dimensions are inconsistent with a layout."""


class PreconditionError(QcfError):
    """An input violates a numerical precondition (hermiticity, trace, ...)."""


class ParameterError(QcfError, ValueError):
    """A scalar parameter is outside its admissible range."""


class ProtocolInvalidError(QcfError):
    """A protocol fails honest-run validation.

    ``clause`` names the violated condition so callers (and the CLI) can
    report it verbatim.
    """

    def __init__(self, clause: str, detail: str = ""):
        self.clause = clause
        self.detail = detail
        msg = clause if not detail else f"{clause}: {detail}"
        super().__init__(msg)


class StrategyError(QcfError):
    """A bias strategy is not shape-compatible with its protocol."""


class AttackPreconditionError(QcfError):
    """Strategies handed to an attack are not insensitive / outcome-certain."""


class AdversaryError(QcfError):
    """An adversary's Kraus set is not a valid instrument."""


class AttackUnavailableError(QcfError):
    """No certified witness exists, so the attack cannot be mounted."""
