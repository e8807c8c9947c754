"""Exception taxonomy shared by every module.

All library errors derive from :class:`ToolkitError` so callers can catch
one base class.  The CLI maps parse/validation errors to exit code 2 and
numerical-degeneracy errors to exit code 3.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatch(ToolkitError):
    """Operands have incompatible shapes or ambient dimensions."""


class NonHermitian(ToolkitError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class IllConditioned(ToolkitError):
    """A rank / clustering decision has no clear spectral gap."""


class AmbientMismatch(ToolkitError):
    """Two algebras live in different ambient matrix algebras."""


class NotSubalgebra(ToolkitError):
    """Restriction target is not compatible with the state's ambient."""


class InvalidState(ToolkitError):
    """Density is not positive semidefinite and trace one."""


class NotCommuting(ToolkitError):
    """An operation requires mutually commuting algebras."""


class InvalidIsomorphism(ToolkitError):
    """A claimed product isomorphism fails its certification checks."""


class DomainNotFull(ToolkitError):
    """Operation requires a map defined on the full matrix algebra."""


class NotPSD(ToolkitError):
    """Matrix expected to be positive semidefinite is not."""


class NotCP(ToolkitError):
    """Map expected to be completely positive is not."""


class NotUnital(ToolkitError):
    """Map expected to send the unit to the unit does not."""


class NotNonselective(ToolkitError):
    """Operation expected to be nonselective (unit preserving) is not."""


class InvalidMeasurement(ToolkitError):
    """Projection family is not an orthogonal resolution of the identity."""


class InvalidOperation(ToolkitError):
    """A map does not send its declared algebra into itself."""


class NoProductIsomorphism(ToolkitError):
    """Joint construction requires the product sense to hold but it fails."""


class UnknownFamily(ToolkitError):
    """Fuzz family name is not one of the built-in generators."""


class ParseError(ToolkitError):
    """Instance or report file could not be parsed."""


class ValidationError(ToolkitError):
    """Parsed object violates a structural invariant."""
