"""Exception hierarchy shared by every module.

Each error carries an optional ``witness`` (the offending face, loop, vertex
or pair) so callers and the CLI can report it without parsing messages.
"""

from __future__ import annotations


class CirpatError(Exception):
    """Base class. ``exit_code`` is what the CLI returns for this error."""

    exit_code = 1

    def __init__(self, message: str = "", witness=None):
        super().__init__(message)
        self.witness = witness


# --- input / combinatorics -------------------------------------------------

class InputError(CirpatError):
    exit_code = 1


class NonManifold(InputError):
    pass


class DisconnectedInput(InputError):
    pass


class BadLink(InputError):
    pass


class NotADisk(InputError):
    pass


class VertexNotFound(InputError):
    pass


class EmptyBall(InputError):
    pass


class AngleOutOfRange(InputError):
    pass


class NonPositiveRadius(InputError):
    pass


class ParseError(InputError):
    pass


# --- mathematical violations -----------------------------------------------

class Violation(CirpatError):
    exit_code = 2


class DegenerateTriangle(Violation):
    pass


class ConfigurationInfeasible(Violation):
    pass


class ConditionViolated(Violation):
    pass


class HolonomyViolation(Violation):
    pass


class HypothesisUnmet(Violation):
    pass


class CircleOutsideCarrier(Violation):
    pass


class OutsideDisk(Violation):
    pass


class SeparationViolated(Violation):
    pass


class NotRCP(Violation):
    pass


class DegenerateChain(Violation):
    pass


class UnboundedFace(Violation):
    pass


class NoPath(Violation):
    pass


class SingularSystem(Violation):
    pass


# --- numerical failures ----------------------------------------------------

class NoConvergence(CirpatError):
    exit_code = 3

    def __init__(self, message: str = "", witness=None, best=None, diagnostics=None):
        super().__init__(message, witness)
        self.best = best
        self.diagnostics = diagnostics or []
