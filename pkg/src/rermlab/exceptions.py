"""Exception types shared across the package."""


class RermlabError(Exception):
    """Base class for all package-specific errors."""


class LibsvmParseError(RermlabError, ValueError):
    """Malformed line in a libsvm-format file."""

    def __init__(self, path, line_number, message):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {message}")


class DataError(RermlabError, ValueError):
    """Dataset contents violate the requested task (e.g. non-binary labels)."""


class DivergenceError(RermlabError, RuntimeError):
    """An optimizer's regularized risk blew past the divergence threshold."""

    def __init__(self, algorithm, step_size, iteration, risk, initial_risk):
        self.algorithm = algorithm
        self.step_size = step_size
        self.iteration = iteration
        super().__init__(
            f"{algorithm} diverged at iteration {iteration} with step size "
            f"{step_size}: regularized risk {risk:.3e} exceeds 1e6 x initial "
            f"({initial_risk:.3e})"
        )


class NumericError(RermlabError, RuntimeError):
    """A numeric routine (eigen-iteration, linear solve, reference solve) failed."""


class ReferenceInconsistencyError(RermlabError, ValueError):
    """A supplied reference minimizer is beaten by the trace beyond fp noise."""


class StageError(RermlabError, RuntimeError):
    """An experiment stage failed; carries the stage name for CLI diagnostics."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
