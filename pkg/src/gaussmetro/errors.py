class GaussMetroError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(GaussMetroError):
    """Malformed or schema-violating pipeline configuration."""

    exit_code = 2


class PhysicsError(GaussMetroError, ValueError):
    """Invalid physical input: bad transmissivity, singular covariance, blind detector..."""

    exit_code = 3


class TruncationError(GaussMetroError):
    """The Fock-space oracle's truncation gate rejected a state."""

    exit_code = 4
