"""Exception types raised across the package."""


class IgacError(Exception):
    """Base class for all package errors."""


class OutOfDomain(IgacError, ValueError):
    def __init__(self, index, value=None, bounds=None):
        self.index = index
        self.value = value
        self.bounds = bounds
        msg = f"coordinate {index} out of domain"
        if value is not None:
            msg += f": value {value!r}"
        if bounds is not None:
            msg += f" not inside open interval {bounds}"
        super().__init__(msg)


class NoAnalyticRule(IgacError):
    pass


class QuadratureNotConverged(IgacError):
    pass


class NonPositiveDeterminant(IgacError):
    pass


class SingularMetric(IgacError):
    pass


class NonInvertibleJacobian(IgacError):
    pass


class ParamOutOfRange(IgacError, ValueError):
    """A model or formula parameter violates its declared bound."""

    def __init__(self, name, value, bound):
        self.name = name
        self.value = value
        self.bound = bound
        super().__init__(f"parameter {name}={value!r} outside {bound}")


# MrE updating
class ZeroEvidence(IgacError):
    pass


class InfeasibleMoment(IgacError, ValueError):
    pass


class BetaNotBracketed(IgacError):
    def __init__(self, bracket, msg=""):
        self.bracket = bracket
        super().__init__(msg or f"could not bracket beta; last bracket tried {bracket}")


class MaxIterations(IgacError):
    pass


# geodesics
class StepUnderflow(IgacError):
    pass


class ShootingDiverged(IgacError):
    def __init__(self, best_residual, iterations):
        self.best_residual = best_residual
        self.iterations = iterations
        super().__init__(
            f"shooting did not converge after {iterations} iterations; "
            f"best endpoint residual {best_residual:.3e}"
        )


# complexity
class PathTooShort(IgacError):
    pass


class NonFiniteIntegrand(IgacError):
    pass


class WindowTooSmall(IgacError):
    pass


class DegenerateTrace(IgacError):
    pass


# scenarios
class ScenarioError(IgacError):
    pass


class ParseError(ScenarioError):
    def __init__(self, msg, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {msg}" if where else msg)


class ValidationError(ScenarioError):
    def __init__(self, errors):
        # errors: list of (field, message)
        self.errors = list(errors)
        super().__init__("; ".join(f"{f}: {m}" for f, m in self.errors))


class StageError(IgacError):
    """Wraps a module error with the pipeline stage it came from."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


class RegimeWarning(UserWarning):
    """A perturbative formula was evaluated outside its small-parameter regime."""
