"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own class;
anything carrying diagnostic payload stores it as attributes so the CLI can
render it without string parsing.
"""

from __future__ import annotations


class SmoothtailError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(SmoothtailError):
    """A model parameter violates its documented constraint."""

    def __init__(self, field: str, constraint: str):
        self.field = field
        self.constraint = constraint
        super().__init__(f"invalid parameter {field!r}: {constraint}")


class DomainError(SmoothtailError):
    """A moment was requested at an exponent outside its finiteness domain."""


class NoRootError(SmoothtailError):
    """The moment function never crosses 1; carries the observed minimum."""

    def __init__(self, min_value: float, argmin: float):
        self.min_value = min_value
        self.argmin = argmin
        super().__init__(
            f"m(s) has no root: minimum {min_value:.6g} at s = {argmin:.6g}"
        )


class SingleRootError(SmoothtailError):
    """The moment function crosses 1 exactly once (monotone or tangent case)."""

    def __init__(self, root: float, slope: float, tangent: bool = False):
        self.root = root
        self.slope = slope
        self.tangent = tangent
        kind = "tangent" if tangent else ("decreasing" if slope < 0 else "increasing")
        super().__init__(f"m(s) = 1 has a single root at s = {root:.6g} ({kind})")


class MonteCarloInconclusiveError(SmoothtailError):
    """Sampling error bars straddle 1 where a bracket decision is needed."""

    def __init__(self, s: float, estimate: float, stderr: float):
        self.s = s
        self.estimate = estimate
        self.stderr = stderr
        super().__init__(
            f"cannot bracket m(s) = 1 near s = {s:.6g}: "
            f"estimate {estimate:.6g} +/- {stderr:.2g}"
        )


class NoGammaError(SmoothtailError):
    """No per-weight moment root exists above beta."""

    def __init__(self, message: str):
        super().__init__(message)


class MeanEquationError(SmoothtailError):
    """The mean fixed-point equation has no usable solution."""


class MissingMeanError(SmoothtailError):
    """Pool initialization needs a pinned mean but none exists."""


class DivergenceError(SmoothtailError):
    """Pool values left the representable range during iteration."""

    def __init__(self, generation: int, detail: str = ""):
        self.generation = generation
        msg = f"pool diverged at generation {generation}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class TreeBudgetExceededError(SmoothtailError):
    """A branching-tree expansion outgrew its node budget."""

    def __init__(self, budget: int, depth: int):
        self.budget = budget
        self.depth = depth
        super().__init__(
            f"branching tree exceeded {budget} nodes before reaching depth {depth}"
        )


class EmptyInputError(SmoothtailError):
    """An estimator was handed an empty sample."""


class DegenerateSamplesError(SmoothtailError):
    """Order statistics needed by an estimator are all equal (or missing)."""


class GridError(SmoothtailError):
    """An integration grid is empty, unordered, or otherwise unusable."""


class ExtrapolationUnstableError(SmoothtailError):
    """A requested tail extrapolation does not converge for this exponent."""

    def __init__(self, s: float, beta_hat: float):
        self.s = s
        self.beta_hat = beta_hat
        super().__init__(
            f"tail correction at s = {s:.6g} diverges for tail index "
            f"estimate {beta_hat:.6g} (requires s < index)"
        )


class WindowTooSmallError(SmoothtailError):
    """Too few tail exceedances inside the requested scan window."""

    def __init__(self, needed: int, found: int):
        self.needed = needed
        self.found = found
        super().__init__(
            f"tail scan window holds {found} exceedances; need at least {needed}"
        )


class InapplicableError(SmoothtailError):
    """A check's precondition fails, so its verdict would be meaningless."""


class PreconditionFailedError(SmoothtailError):
    """A constructive routine was invoked outside its validity regime."""


class PoolFormatError(SmoothtailError):
    """A pool file's header or payload does not match the binary format."""


class ConfigError(SmoothtailError):
    """Base class for configuration problems (exit code 2 territory)."""


class ParseError(ConfigError):
    """The config file is syntactically or structurally malformed."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


class ValidationError(ConfigError):
    """The config parsed but a value violates its constraint."""
