"""Exception types shared across the package."""


class ElastobeamError(Exception):
    """Base class for all package-specific errors."""


class FieldExpressionError(ElastobeamError):
    """A coefficient expression uses symbols or functions outside the grammar."""


class MediumFormatError(ElastobeamError):
    """A medium definition file could not be parsed."""


class MediumError(ElastobeamError):
    """The medium is physically inadmissible at an evaluated point."""


class TrappingSuspectedError(ElastobeamError):
    """A ray exceeded its arclength budget without leaving the domain."""


class ChartInversionError(ElastobeamError):
    """Newton iteration for tube coordinates failed to converge."""


class RiccatiPositivityError(ElastobeamError):
    """The imaginary part of the phase Hessian lost positive definiteness."""


class BranchTrackingError(ElastobeamError):
    """The determinant phase moved too fast to continue the square root."""


class NonPropagatingError(ElastobeamError):
    """An incident slowness vector does not describe a propagating wave."""


class NonTransversalError(ElastobeamError):
    """An incident shear polarization is not orthogonal to its slowness."""


class DegenerateConfigError(ElastobeamError):
    """A three-wave configuration is geometrically degenerate."""


class RankDeficientError(ElastobeamError):
    """A least-squares design matrix is rank deficient."""


class InconsistentDataError(ElastobeamError):
    """Fitted coefficients are incompatible with the supplied wavespeeds."""
