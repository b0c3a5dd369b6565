"""Exception types raised across the package."""


class SchemaError(ValueError):
    """A schema is malformed or a file does not match it."""


class EmptyDatasetError(ValueError):
    """A dataset has no rows left to work with."""


class DimensionError(ValueError):
    """Input width does not match the fitted model."""


class DivergenceError(ArithmeticError):
    """Training produced a non-finite loss or score."""


class FeatureMismatchError(ValueError):
    """Data columns do not match the columns a model was trained on."""

    def __init__(self, missing, extra):
        self.missing = list(missing)
        self.extra = list(extra)
        parts = []
        if self.missing:
            parts.append("missing columns: " + ", ".join(self.missing))
        if self.extra:
            parts.append("extra columns: " + ", ".join(self.extra))
        super().__init__("feature mismatch (" + "; ".join(parts) + ")")


class StageError(RuntimeError):
    """Wraps a failure with the name of the pipeline stage it came from."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


def check_dimension(n_features, width):
    if width != n_features:
        raise DimensionError(f"expected {n_features} features, got {width}")
