"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Invalid user-facing configuration or parameters (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """A numerical stage failed (CLI exit code 3)."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
