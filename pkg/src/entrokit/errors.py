"""Exception types shared across the library."""


class InputDomainError(ValueError):
    """Raised when an evaluation point or dataset contains non-finite values."""


class ParameterError(ValueError):
    """Raised for invalid estimator or configuration parameters."""


class UnsupportedKernelError(ParameterError):
    """Raised when a kernel family other than the Gaussian one is requested."""


class MissingClassError(KeyError):
    """Raised when a conditional lookup hits a label with no fitted parameters."""


class NumericError(RuntimeError):
    """Raised when a numeric quantity becomes non-finite.

    The message carries the location (parameter name or sample index) of the
    offending value.
    """


class ConfigError(ValueError):
    """Raised by the experiment harness for malformed configuration files."""
