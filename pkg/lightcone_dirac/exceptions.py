class LightconeError(Exception):
    """Base class for every error raised by the solver."""


class ConfigError(LightconeError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__('{}: {}'.format(path, message) if path else message)


class ModelError(LightconeError):
    pass


class DomainError(LightconeError):
    pass


class OracleError(LightconeError):
    pass


class NonIntegrableError(LightconeError):
    pass


class ConstraintViolation(LightconeError):
    pass


class ExtensionError(LightconeError):
    pass


class CFLViolation(LightconeError):
    pass


class ExtrapolationError(LightconeError):
    pass


class ToleranceFailure(LightconeError):
    """A run finished but one of its checks exceeded the configured tolerance."""

    def __init__(self, failures: dict):
        self.failures = dict(failures)
        super().__init__(', '.join(
            '{} = {:.3e} > {:.3e}'.format(name, value, limit)
            for name, (value, limit) in sorted(self.failures.items())))


class AccuracyWarning(UserWarning):
    pass
