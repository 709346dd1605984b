"""Finite absorbing Markov game models and the strategy objects built on them.

States and actions are identified by name; all numeric data lives in dense
numpy arrays indexed by (state, joint action).  Joint actions are flattened in
lexicographic order of the per-player action indices, player 1 most
significant; every other module relies on that flattening.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AbsorbingViolation,
    BadDistribution,
    EmptyActionSet,
    ModelValidationError,
    NonStochasticRow,
    ProfileModelMismatch,
)

#: Tolerance for stochasticity and normalization checks on input data.
#: Data violating it is rejected, never renormalized.
ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class GameModel:
    """Immutable description of a finite N-player absorbing Markov game.

    Instances are produced by :func:`build_model`; all arrays are read-only,
    so a model can be shared freely between threads.
    """

    states: tuple[str, ...]
    players: int
    actions: tuple[tuple[str, ...], ...]
    admissible: tuple[np.ndarray, ...]   # per player, bool (S, |A^i|)
    kernel: np.ndarray                   # (S, J, S)
    reward: np.ndarray                   # (N, S, J)
    cost: np.ndarray                     # (N, p, S, J)
    rho: np.ndarray                      # (N, p) constraint constants
    eta: np.ndarray                      # (S,) initial distribution
    delta: frozenset[str]                # absorbing state names
    delta_mask: np.ndarray               # bool (S,)
    joint_actions: tuple[tuple[int, ...], ...]
    joint_admissible: np.ndarray         # bool (S, J)
    reward_bound: float                  # max |reward|, |cost| over admissible pairs

    # -- basic dimensions ---------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_joint(self) -> int:
        return len(self.joint_actions)

    @property
    def n_constraints(self) -> int:
        return self.rho.shape[1]

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.actions)

    @property
    def off_delta(self) -> np.ndarray:
        """Indices of the non-absorbing states, in state order."""
        return np.flatnonzero(~self.delta_mask)

    # -- lookups ------------------------------------------------------------

    def state_index(self, name: str) -> int:
        return self.states.index(name)

    def joint_label(self, j: int) -> tuple[str, ...]:
        """Action names of the j-th joint action."""
        return tuple(self.actions[i][k] for i, k in enumerate(self.joint_actions[j]))

    def joint_index(self, indices: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(indices), self.action_counts))

    # -- canonical strategies ------------------------------------------------

    def uniform_profile(self) -> "StationaryProfile":
        """Uniform mixing over the admissible actions, independently per player."""
        tables = []
        for i in range(self.players):
            adm = self.admissible[i].astype(float)
            tables.append(adm / adm.sum(axis=1, keepdims=True))
        return StationaryProfile(tuple(tables))

    def uniform_correlated(self) -> "CorrelatedStationaryStrategy":
        adm = self.joint_admissible.astype(float)
        return CorrelatedStationaryStrategy(adm / adm.sum(axis=1, keepdims=True))


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    """One state-conditioned action distribution per player.

    ``pi[i]`` has shape (S, |A^i|); each row is a distribution supported on
    the admissible actions of player i at that state.
    """

    pi: tuple[np.ndarray, ...]

    @property
    def players(self) -> int:
        return len(self.pi)


@dataclass(frozen=True, eq=False)
class CorrelatedStationaryStrategy:
    """A state-conditioned distribution over joint actions.

    Not required to factor across players; rows of ``table`` (shape (S, J))
    are distributions supported on the jointly admissible actions.
    """

    table: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _check_names(names, what):
    names = tuple(str(n) for n in names)
    if not names:
        raise ModelValidationError(f"{what} list is empty")
    if len(set(names)) != len(names):
        raise ModelValidationError(f"duplicate {what} identifiers")
    return names


def build_model(description: Mapping) -> GameModel:
    """Validate a dense model description and freeze it into a :class:`GameModel`.

    Parameters
    ----------
    description : mapping with keys
        ``states``     sequence of state names;
        ``players``    number of players N;
        ``actions``    per-player sequence of action names;
        ``admissible`` optional per-player boolean arrays (S, |A^i|), default
                       all actions everywhere;
        ``kernel``     (S, J, S) transition probabilities, J = prod |A^i|,
                       joint actions flattened lexicographically;
        ``reward``     (N, S, J);
        ``cost``       (N, p, S, J), p may be 0;
        ``rho``        (N, p) constraint constants;
        ``eta``        (S,) initial distribution;
        ``delta``      iterable of absorbing state names.

    Entries at inadmissible (state, joint action) pairs are ignored and stored
    as zero.  Anything off by more than 1e-12 from stochasticity or
    normalization is rejected; values are never silently renormalized.

    Raises
    ------
    NonStochasticRow, AbsorbingViolation, EmptyActionSet, BadDistribution,
    ModelValidationError
    """
    states = _check_names(description["states"], "state")
    n_players = int(description["players"])
    if n_players < 1:
        raise ModelValidationError("players must be >= 1")
    actions_in = description["actions"]
    if len(actions_in) != n_players:
        raise ModelValidationError("need one action list per player")
    actions = tuple(_check_names(a, f"player {i + 1} action") for i, a in enumerate(actions_in))

    s = len(states)
    counts = tuple(len(a) for a in actions)
    n_joint = int(np.prod(counts))

    admissible_in = description.get("admissible")
    admissible = []
    for i in range(n_players):
        if admissible_in is None or admissible_in[i] is None:
            adm = np.ones((s, counts[i]), dtype=bool)
        else:
            adm = np.asarray(admissible_in[i], dtype=bool)
            if adm.shape != (s, counts[i]):
                raise ModelValidationError(
                    f"admissible mask for player {i + 1} has shape {adm.shape}, "
                    f"expected {(s, counts[i])}"
                )
        for x in range(s):
            if not adm[x].any():
                raise EmptyActionSet(i + 1, states[x])
        admissible.append(_frozen(adm))
    admissible = tuple(admissible)

    joint_actions = tuple(itertools.product(*(range(c) for c in counts)))
    joint_adm = np.ones((s, n_joint), dtype=bool)
    for i in range(n_players):
        column = np.array([t[i] for t in joint_actions])
        joint_adm &= admissible[i][:, column]

    kernel = np.array(description["kernel"], dtype=float)
    if kernel.shape != (s, n_joint, s):
        raise ModelValidationError(
            f"kernel has shape {kernel.shape}, expected {(s, n_joint, s)}"
        )
    kernel[~joint_adm] = 0.0

    reward = np.array(description["reward"], dtype=float)
    if reward.shape != (n_players, s, n_joint):
        raise ModelValidationError(
            f"reward has shape {reward.shape}, expected {(n_players, s, n_joint)}"
        )
    reward[:, ~joint_adm] = 0.0

    rho = np.array(description["rho"], dtype=float)
    if rho.ndim != 2 or rho.shape[0] != n_players:
        raise ModelValidationError("rho must have one row of constants per player")
    p = rho.shape[1]

    cost = np.array(description["cost"], dtype=float)
    if p == 0:
        cost = np.zeros((n_players, 0, s, n_joint))
    if cost.shape != (n_players, p, s, n_joint):
        raise ModelValidationError(
            f"cost has shape {cost.shape}, expected {(n_players, p, s, n_joint)}"
        )
    cost[:, :, ~joint_adm] = 0.0

    eta = np.array(description["eta"], dtype=float)
    if eta.shape != (s,):
        raise ModelValidationError(f"eta has shape {eta.shape}, expected {(s,)}")
    if eta.min(initial=0.0) < -ATOL:
        raise BadDistribution("eta", f"negative mass {eta.min()!r}")
    if abs(eta.sum() - 1.0) > ATOL:
        raise BadDistribution("eta", f"total mass {eta.sum()!r}")

    delta_names = frozenset(str(d) for d in description["delta"])
    unknown = delta_names - set(states)
    if unknown:
        raise ModelValidationError(f"delta references unknown states {sorted(unknown)}")
    delta_mask = np.array([name in delta_names for name in states])

    # Row stochasticity over admissible joint actions.
    joint_names = [tuple(actions[i][k] for i, k in enumerate(t)) for t in joint_actions]
    for x in range(s):
        for j in range(n_joint):
            if not joint_adm[x, j]:
                continue
            row = kernel[x, j]
            if row.min() < -ATOL:
                raise NonStochasticRow(states[x], joint_names[j], row.sum())
            if abs(row.sum() - 1.0) > ATOL:
                raise NonStochasticRow(states[x], joint_names[j], row.sum())

    # Absorbing states keep all mass inside delta and pay nothing.
    for x in np.flatnonzero(delta_mask):
        for j in range(n_joint):
            if not joint_adm[x, j]:
                continue
            leak = kernel[x, j][~delta_mask].sum()
            if leak > ATOL:
                raise AbsorbingViolation(
                    states[x], joint_names[j], f"probability {leak!r} leaves the absorbing set"
                )
            if np.abs(reward[:, x, j]).max(initial=0.0) > ATOL:
                raise AbsorbingViolation(states[x], joint_names[j], "nonzero reward")
            if p and np.abs(cost[:, :, x, j]).max(initial=0.0) > ATOL:
                raise AbsorbingViolation(states[x], joint_names[j], "nonzero cost")

    bound = float(np.abs(reward[:, joint_adm]).max(initial=0.0))
    if p:
        bound = max(bound, float(np.abs(cost[:, :, joint_adm]).max(initial=0.0)))

    return GameModel(
        states=states,
        players=n_players,
        actions=actions,
        admissible=admissible,
        kernel=_frozen(kernel),
        reward=_frozen(reward),
        cost=_frozen(cost),
        rho=_frozen(rho),
        eta=_frozen(eta),
        delta=delta_names,
        delta_mask=_frozen(delta_mask),
        joint_actions=joint_actions,
        joint_admissible=_frozen(joint_adm),
        reward_bound=bound,
    )


def validate_profile(model: GameModel, profile: StationaryProfile) -> None:
    """Check that ``profile`` is a valid stationary profile for ``model``."""
    if not isinstance(profile, StationaryProfile):
        raise ProfileModelMismatch(f"expected a StationaryProfile, got {type(profile).__name__}")
    if profile.players != model.players:
        raise ProfileModelMismatch(
            f"profile has {profile.players} players, model has {model.players}"
        )
    for i, table in enumerate(profile.pi):
        expected = (model.n_states, len(model.actions[i]))
        if np.shape(table) != expected:
            raise ProfileModelMismatch(
                f"player {i + 1} table has shape {np.shape(table)}, expected {expected}"
            )
        table = np.asarray(table, dtype=float)
        if table.min() < -ATOL:
            raise ProfileModelMismatch(f"player {i + 1} table has negative entries")
        off = np.abs(table[~model.admissible[i]]).max(initial=0.0)
        if off > ATOL:
            raise ProfileModelMismatch(
                f"player {i + 1} puts mass {off!r} on inadmissible actions"
            )
        bad = np.abs(table.sum(axis=1) - 1.0)
        if bad.max() > ATOL:
            x = int(bad.argmax())
            raise ProfileModelMismatch(
                f"player {i + 1} row at state {model.states[x]!r} sums to "
                f"{table[x].sum()!r}"
            )


def validate_correlated(model: GameModel, strategy: CorrelatedStationaryStrategy) -> None:
    """Check that ``strategy`` is a valid correlated strategy for ``model``."""
    if not isinstance(strategy, CorrelatedStationaryStrategy):
        raise ProfileModelMismatch(
            f"expected a CorrelatedStationaryStrategy, got {type(strategy).__name__}"
        )
    table = np.asarray(strategy.table, dtype=float)
    expected = (model.n_states, model.n_joint)
    if table.shape != expected:
        raise ProfileModelMismatch(f"table has shape {table.shape}, expected {expected}")
    if table.min() < -ATOL:
        raise ProfileModelMismatch("table has negative entries")
    off = np.abs(table[~model.joint_admissible]).max(initial=0.0)
    if off > ATOL:
        raise ProfileModelMismatch(f"mass {off!r} on inadmissible joint actions")
    bad = np.abs(table.sum(axis=1) - 1.0)
    if bad.max() > ATOL:
        x = int(bad.argmax())
        raise ProfileModelMismatch(
            f"row at state {model.states[x]!r} sums to {table[x].sum()!r}"
        )


def product_strategy(model: GameModel, profile: StationaryProfile) -> CorrelatedStationaryStrategy:
    """Combine independent per-player strategies into the joint-action kernel.

    The joint weight at (x, (a^1, ..., a^N)) is the product of the per-player
    weights pi[i][x][a^i].
    """
    validate_profile(model, profile)
    counts = model.action_counts
    table = np.ones((model.n_states,) + counts)
    for i, pi in enumerate(profile.pi):
        shape = [model.n_states] + [1] * model.players
        shape[i + 1] = counts[i]
        table = table * np.asarray(pi, dtype=float).reshape(shape)
    return CorrelatedStationaryStrategy(table.reshape(model.n_states, model.n_joint))


def induced_chain(model: GameModel, strategy: CorrelatedStationaryStrategy) -> np.ndarray:
    """Transition matrix of the state process under a stationary strategy.

    Returns the row-stochastic (S, S) matrix obtained by averaging the kernel
    over the strategy's action mix at every state.
    """
    validate_correlated(model, strategy)
    return np.einsum("xj,xjy->xy", np.asarray(strategy.table, dtype=float), model.kernel)
