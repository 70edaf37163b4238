"""Exception hierarchy shared by every frobsplit module."""


class FrobsplitError(Exception):
    """Base class for all library errors."""


class ContextMismatchError(FrobsplitError, ValueError):
    """Two values from different fields (or variable sets) were combined."""


class ResourceError(FrobsplitError):
    """A configured size ceiling or iteration budget would be exceeded."""


class IdentityCheckError(FrobsplitError):
    """A numeric identity that must hold by construction failed.

    The ``identity`` attribute names the failing check so that callers (and
    the CLI) can report it verbatim.
    """

    def __init__(self, identity: str, detail: str = ""):
        self.identity = identity
        self.detail = detail
        msg = identity if not detail else f"{identity}: {detail}"
        super().__init__(msg)


class InternalError(FrobsplitError):
    """An invariant that can only fail through a bug in this package."""


class ParseError(FrobsplitError, ValueError):
    """Malformed textual input (divisor specs, field elements, flags)."""
