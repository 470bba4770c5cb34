"""Exception types shared across the package."""


class CondMeanError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSampleError(CondMeanError):
    """Sample vector is malformed (too short, non-finite, wrong shape)."""


class OutOfSupportError(CondMeanError):
    """Sample coordinates fall outside the declared support."""


class DensitySpecError(CondMeanError):
    """Density specification is inconsistent with its declared constants."""


class DomainError(CondMeanError):
    """Scalar argument outside the domain of a closed-form expression."""


class ConvergenceError(CondMeanError):
    """Iterative routine failed to reach its target tolerance."""


class ConfigError(CondMeanError):
    """Run configuration failed validation.

    Carries the full list of problems so a caller can report all of
    them at once instead of fixing one key per run.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
