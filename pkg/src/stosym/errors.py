"""Exception hierarchy."""


class StosymError(Exception):
    """Base class for library errors."""


class UsageError(StosymError, ValueError):
    """Invalid arguments or an unsupported combination of inputs."""


class DescriptorMismatchError(UsageError):
    """Group elements or arrays belong to different groups."""


class UnsupportedConfigurationError(UsageError):
    """The requested combination is well defined but not implemented."""


class NumericError(StosymError, ArithmeticError):
    """A numerical precondition failed at run time."""


class SingularElementError(NumericError):
    """A matrix group element is not invertible within tolerance."""


class NonIdentityError(UsageError):
    """A map expected to satisfy ``Psi(x, 1) = x`` does not."""


class FlowDivergenceError(NumericError):
    """A vector-field flow left the bounded region during integration."""


class ConfigError(UsageError):
    """Malformed experiment configuration."""
