"""Exception hierarchy. Every error carries a ``category`` code for the CLI."""

from __future__ import annotations


class L1Error(Exception):
    category = "internal"

    def to_dict(self) -> dict:
        return {"category": self.category, "message": str(self)}


class DimensionError(L1Error, ValueError):
    category = "dimension"


class RankDeficiencyError(L1Error, ValueError):
    """Raised when a Gram matrix is not numerically positive definite."""

    category = "rank"


class ConvergenceError(L1Error, RuntimeError):
    category = "convergence"

    def __init__(self, message: str, residual: float, result=None):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
        self.result = result

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["residual"] = self.residual
        return out


class NotNearIsotropicError(L1Error, ValueError):
    category = "precondition"


class InstanceTooLargeError(L1Error, ValueError):
    category = "size"


class DegenerateInputError(L1Error, ValueError):
    category = "degenerate"


class ParseError(L1Error, ValueError):
    category = "input"

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.path = None if path is None else str(path)
        self.line = line

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["path"] = self.path
        out["line"] = self.line
        return out


class ConfigError(L1Error, ValueError):
    category = "config"
