"""Exception hierarchy shared by all divisorlab modules.

Two families matter for callers (and for the CLI exit codes):

* ``PreconditionError`` -- the input violates a documented precondition
  (domain, validity range, truncation order, resource budget).  CLI exit 2.
* ``SelfCheckError`` -- the inputs were legal but an internal numeric
  self-check failed (quadrature non-convergence, tail bound not achieved,
  bracketing failure, integer saturation).  CLI exit 3.
"""


class PreconditionError(ValueError):
    """Input violates a documented operation precondition."""


class DomainError(PreconditionError):
    """Argument outside the mathematical domain of a formula."""


class RangeError(PreconditionError):
    """Argument outside a bound's validity range; the message names the threshold."""


class InsufficientOrderError(PreconditionError):
    """A truncated series does not carry enough terms for the requested result."""


class MemoryBudgetError(PreconditionError):
    """A sieve request would exceed the configured memory budget."""


class ConfigError(PreconditionError):
    """Malformed run configuration (unknown key, unparsable value)."""


class SelfCheckError(RuntimeError):
    """A numeric self-check failed; results would not be trustworthy."""


class PrecisionError(SelfCheckError):
    """The requested precision cannot be certified with feasible parameters."""


class QuadratureError(SelfCheckError):
    """Quadrature self-check (panel or node doubling) did not converge."""


class BracketError(SelfCheckError):
    """Failed to bracket an extremum, or the bracket is not unimodal."""


class SieveOverflowError(SelfCheckError):
    """64-bit saturation detected in a divisor block."""
