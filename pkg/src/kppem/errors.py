"""Exception types raised by the solver library."""


class KPPError(Exception):
    """Base class for all library errors."""


class NonFinite(KPPError, ArithmeticError):
    """A NaN showed up where a finite number was required."""


class DegenerateRow(KPPError, ArithmeticError):
    """All component densities of an observation underflowed, even in log-space."""


class OutsideDomain(KPPError, ValueError):
    """The Kullback term is undefined: t_ik(params) = 0 while t_ik(anchor) > 0."""


class NotDifferentiable(KPPError, ValueError):
    """Classical derivative requested at a kink."""


class InnerSolverFailure(KPPError, RuntimeError):
    """A block maximizer could not produce a non-decreasing step."""


class RootBracketFailure(KPPError, RuntimeError):
    """The simplex multiplier could not be bracketed."""


class InvalidInit(KPPError, ValueError):
    """Initial parameters violate the MixtureParams invariants."""


class ParseError(KPPError, ValueError):
    """Malformed CSV or config input."""


class ConstantColumn(KPPError, ValueError):
    """Standardization of a covariate with zero spread."""


class ConfigError(KPPError, ValueError):
    """Invalid run configuration."""
