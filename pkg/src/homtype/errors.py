"""Exception hierarchy.

Three families map onto the CLI exit codes: malformed input (2),
violated preconditions (3) and failed checks carrying a witness (4).
"""

from __future__ import annotations


class HomTypeError(Exception):
    exit_code = 1


class InputError(HomTypeError, ValueError):
    exit_code = 2


class PreconditionError(HomTypeError, ValueError):
    exit_code = 3


class CheckFailed(HomTypeError):
    """A verified inequality or structural law failed; ``witness`` says where."""

    exit_code = 4

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# space axioms
class ZeroDistanceDistinctPoints(InputError):
    pass


class AsymmetricDistance(InputError):
    pass


class NegativeMass(InputError):
    pass


class MalformedDocument(InputError):
    pass


class NonpositiveRadius(PreconditionError):
    pass


# grids
class DegenerateDelta(PreconditionError):
    pass


# weights
class EtaOutOfRange(PreconditionError):
    pass


class InvalidNormBound(PreconditionError):
    pass


class ZeroFunction(PreconditionError):
    pass


class NonPositiveWeight(PreconditionError):
    pass


# Calderon-Zygmund machinery
class LambdaTooSmall(PreconditionError):
    pass


class SubcriticalA(PreconditionError):
    pass


class DivergentTail(PreconditionError):
    pass


class MissingLevelData(PreconditionError):
    pass


# function spaces
class NoClosedForm(PreconditionError):
    pass


class MalformedCollection(PreconditionError):
    pass
