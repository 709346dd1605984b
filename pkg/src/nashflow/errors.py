"""Exception types shared across the library.

Model-level problems derive from :class:`ModelValidationError`, file-level
problems from :class:`SchemaError`; solver modules raise the more specific
classes below.  The CLI maps these onto its exit codes.
"""

from __future__ import annotations


class GameError(Exception):
    """Base class for every error raised by this package."""


class ModelValidationError(GameError):
    """A model description violates a structural invariant."""


class NonStochasticRow(ModelValidationError):
    """A transition row does not describe a probability distribution."""

    def __init__(self, state, action, total):
        self.state = state
        self.action = tuple(action)
        self.total = float(total)
        super().__init__(
            f"kernel row at state {state!r}, action {self.action!r} "
            f"sums to {self.total!r} (expected 1 within 1e-12)"
        )


class AbsorbingViolation(ModelValidationError):
    """An absorbing state leaks probability or still pays rewards/costs."""

    def __init__(self, state, action, reason):
        self.state = state
        self.action = tuple(action)
        self.reason = reason
        super().__init__(
            f"absorbing state {state!r}, action {self.action!r}: {reason}"
        )


class EmptyActionSet(ModelValidationError):
    """Some player has no admissible action at some state."""

    def __init__(self, player, state):
        self.player = player
        self.state = state
        super().__init__(f"player {player} has no admissible action at state {state!r}")


class BadDistribution(ModelValidationError):
    """A vector that must be a probability distribution is not one."""

    def __init__(self, name, detail):
        self.name = name
        self.detail = detail
        super().__init__(f"{name} is not a probability distribution: {detail}")


class ReservedIdentifier(ModelValidationError):
    """A user identifier collides with a reserved internal name."""

    def __init__(self, identifier):
        self.identifier = identifier
        super().__init__(f"identifier {identifier!r} is reserved")


class SchemaError(GameError):
    """A document does not conform to the file format."""


class ProfileModelMismatch(GameError):
    """A strategy object is inconsistent with the model it is used with."""


class NotAbsorbingUnderStrategy(GameError):
    """The chain induced by a strategy does not reach the absorbing set."""


class NotAbsorbingModel(GameError):
    """The model admits a strategy that avoids the absorbing set forever."""

    def __init__(self, witness=None):
        self.witness = witness
        detail = "" if witness is None else f" (witness component: {witness})"
        super().__init__("model is not absorbing" + detail)


class Unbounded(GameError):
    """A linear program that should be bounded is not.

    For the total-mass program this signals a non-absorbing model.
    """


class InfeasibleLP(GameError):
    """A linear program that should be feasible is not, or the solver failed."""


class ConstraintInfeasible(GameError):
    """No strategy of the player meets the constraint against these opponents."""

    def __init__(self, player, detail=""):
        self.player = player
        super().__init__(
            f"player {player} has no feasible response{': ' + detail if detail else ''}"
        )


class SlaterFailure(GameError):
    """A player cannot strictly over-satisfy the constraints."""

    def __init__(self, player, slack):
        self.player = player
        self.slack = float(slack)
        super().__init__(
            f"Slater condition fails for player {player}: best achievable "
            f"slack is {self.slack!r}"
        )


class NoConvergence(GameError):
    """The equilibrium search exhausted its budget without certifying success.

    Carries the best candidate found so the caller can inspect it.
    """

    def __init__(self, profile, certificate, trace):
        self.profile = profile
        self.certificate = certificate
        self.trace = trace
        eps = None if certificate is None else certificate.epsilon
        super().__init__(f"no certified equilibrium found (best epsilon: {eps!r})")
