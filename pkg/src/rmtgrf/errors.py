"""Exception hierarchy shared by all rmtgrf modules."""


class RmtError(Exception):
    """Base class for every error raised by rmtgrf."""

    code = "rmt_error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class ConfigError(RmtError, ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    code = "config_error"

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")

    def to_dict(self):
        d = super().to_dict()
        d["field"] = self.field
        return d


class DomainError(RmtError, ValueError):
    code = "domain_error"


class DimensionError(RmtError, ValueError):
    code = "dimension_error"


class NumericalError(RmtError, ArithmeticError):
    """Linear solve failed or produced an unacceptable residual."""

    code = "numerical_error"

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")


class GenerationError(RmtError, RuntimeError):
    code = "generation_error"


class MaskPresentError(RmtError, ValueError):
    code = "mask_present"
