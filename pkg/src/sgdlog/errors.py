"""Exception hierarchy shared by all modules."""


class SgdlogError(Exception):
    """Base class for every error raised by this package."""


class MalformedSpec(SgdlogError, ValueError):
    pass


class ModeUnavailable(SgdlogError):
    pass


class InsufficientSamples(SgdlogError):
    pass


class SubroutineFailure(SgdlogError):
    """Boosted quantum subroutine failed on every repetition."""


class InconsistentRho(SgdlogError):
    pass


class NotInGroup(SgdlogError):
    pass


class TokenBudgetExhausted(SgdlogError):
    pass


class CapExceeded(SgdlogError):
    pass


class NotAPower(SgdlogError):
    """The target is not a power of the base element."""


class NoSolution(SgdlogError):
    """No exponent a >= 1 with x = y g^a exists."""


class NotMember(SgdlogError):
    """The target is not in the subsemigroup spanned by the generators."""
