"""Exception hierarchy shared by all locqubo modules."""


class LocQuboError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LocQuboError):
    """Malformed input file or serialized payload."""


class ValidationError(LocQuboError):
    """An instance field violates an invariant.

    The offending field name is available as ``field``.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class UnknownTable(LocQuboError):
    """No built-in instance table exists for the requested key."""


class UnknownFamily(LocQuboError):
    """The problem family tag is not recognised."""


class UnsupportedFamily(LocQuboError):
    """The operation is not defined for this problem family."""


class LengthMismatch(LocQuboError):
    """A bitstring does not match the model's variable count."""


class SizeMismatch(LocQuboError):
    """Two objects that must agree in size do not."""


class CapExceeded(LocQuboError):
    """Exhaustive enumeration was requested above the hard variable cap."""


class TooManyQubits(LocQuboError):
    """Statevector simulation above the memory guard."""


class Infeasible(LocQuboError):
    """The linear program has no feasible point."""


class Unbounded(LocQuboError):
    """The linear program is unbounded below."""


class ShapeMismatch(LocQuboError):
    """A matrix has the wrong shape."""


class NotNormalized(LocQuboError):
    """A lifted SDP matrix does not have a unit top-left entry."""


class EpsOutOfRange(LocQuboError):
    """The projection parameter lies outside (0, 0.5]."""
