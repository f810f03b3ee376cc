class ConfigError(ValueError):
    """Invalid or inconsistent configuration value."""


class SingularChannelError(ArithmeticError):
    """Zero-gain frequency bin with no noise regularisation."""


class PilotError(ValueError):
    """Pilot sequence unusable for channel sensing."""
