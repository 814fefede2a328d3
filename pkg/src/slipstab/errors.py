"""Exception types shared across the toolkit."""


class SlipstabError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SlipstabError):
    """Invalid physical or run configuration."""


class NonAdmissibleProfile(SlipstabError):
    """Profile violates the zero-endpoint admissibility condition."""


class ConvergenceFailure(SlipstabError):
    """An eigensolve or optimisation did not converge to tolerance."""


class BracketFailure(SlipstabError):
    """Root bracketing could not be established or resolved."""


class TimeStepError(SlipstabError):
    """Time integrator failure (CFL violation or singular boundary solve)."""
