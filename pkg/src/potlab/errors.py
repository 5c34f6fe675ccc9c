"""Exception hierarchy shared by all potlab modules."""


class PotlabError(Exception):
    """Base class for all potlab errors."""


class DimensionMismatchError(PotlabError):
    """Inputs do not share the same spatial dimension."""


class CapabilityError(PotlabError):
    """A cost model does not expose derivatives of the requested order."""


class NonDegeneracyError(PotlabError):
    """The mixed second-derivative matrix is singular at the basepoint."""


class DegenerateInputError(PotlabError):
    """Input is degenerate for the requested operation (e.g. b1 = 0, n = 1)."""


class DomainError(PotlabError):
    """A numeric argument lies outside the admissible range."""


class CutLocusError(PotlabError):
    """A spherical operation was requested at or past the cut locus."""


class ConfigurationError(PotlabError):
    """A scenario or tuning is infeasible or malformed."""
