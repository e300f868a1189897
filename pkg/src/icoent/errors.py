"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericalError(RuntimeError):
    """A numerical routine failed or produced an untrustworthy result."""


class DegenerateGroundStateError(NumericalError):
    """The ground manifold is degenerate; a single ground vector is ill-defined.

    Callers should fall back to a low-temperature thermal state, which
    equal-weights the degenerate manifold.
    """


class MonotonicityError(DomainError):
    """A curve that must be monotone for bisection failed the coarse scan."""


class BracketingError(DomainError):
    """A root search found no sign change inside the requested range."""
