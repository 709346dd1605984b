"""Occupation measures: expected visit counts of (state, action) pairs.

For a stationary strategy the state marginal of the occupation measure is the
unique solution of the flow balance equations

    mu_X(y) = eta(y) + sum_{x,a} mu(x,a) Q(y | x,a)   for y off the absorbing set,

and the full measure factors as mu(x,a) = mu_X(x) * pi(a|x).  Total expected
rewards and costs are plain integrals against the measure, which is what makes
the whole solver linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import NotAbsorbingUnderStrategy, ProfileModelMismatch
from .model import (
    CorrelatedStationaryStrategy,
    GameModel,
    StationaryProfile,
    product_strategy,
    validate_correlated,
    validate_profile,
)

#: States carrying less occupation mass than this are treated as unvisited
#: when a strategy is recovered from a measure; the fallback strategy is used
#: there instead.
OCCUPANCY_CUTOFF = 1e-12

#: Pivot magnitude below which the off-absorbing linear system counts as
#: singular, i.e. the strategy does not absorb.
SINGULAR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    """Nonnegative weights on (state, action) pairs, supported off the absorbing set.

    ``player`` is None for a joint measure, in which case ``weights`` has shape
    (S, |A^1|, ..., |A^N|); for the marginal of player i (0-based) it is i and
    ``weights`` has shape (S, |A^i|).  ``eta_ref`` records the initial
    distribution the measure was computed against.
    """

    weights: np.ndarray
    eta_ref: np.ndarray
    player: int | None = None

    @property
    def is_joint(self) -> bool:
        return self.player is None

    @property
    def support_kind(self) -> str:
        return "joint" if self.player is None else f"player_marginal({self.player + 1})"

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def state_marginal(self) -> np.ndarray:
        """Occupation mass per state, shape (S,)."""
        return self.weights.reshape(self.weights.shape[0], -1).sum(axis=1)


@dataclass(frozen=True, eq=False)
class PayoffVector:
    """Total expected reward per player and cost per player/constraint row."""

    R: np.ndarray   # (N,)
    C: np.ndarray   # (N, p)


def _as_correlated(model: GameModel, strategy) -> CorrelatedStationaryStrategy:
    if isinstance(strategy, StationaryProfile):
        return product_strategy(model, strategy)
    validate_correlated(model, strategy)
    return strategy


def _eta_or_default(model: GameModel, eta) -> np.ndarray:
    if eta is None:
        return model.eta
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (model.n_states,):
        raise ProfileModelMismatch(
            f"eta has shape {eta.shape}, expected {(model.n_states,)}"
        )
    return eta


def state_occupancy(model: GameModel, strategy, eta=None) -> np.ndarray:
    """Solve the flow balance equations for the per-state occupation mass.

    Returns the (S,) vector with zeros on the absorbing set.  Raises
    :class:`NotAbsorbingUnderStrategy` when the induced chain has an
    off-absorbing recurrent class (singular system).
    """
    from .model import induced_chain

    corr = _as_correlated(model, strategy)
    eta = _eta_or_default(model, eta)
    off = model.off_delta
    mass = np.zeros(model.n_states)
    if off.size == 0:
        return mass
    chain = induced_chain(model, corr)
    q_sub = chain[np.ix_(off, off)]
    system = np.eye(off.size) - q_sub.T
    lu, piv = lu_factor(system, check_finite=False)
    if np.abs(np.diag(lu)).min() <= SINGULAR_TOL:
        raise NotAbsorbingUnderStrategy(
            "induced chain does not absorb: flow balance system is singular"
        )
    mass[off] = lu_solve((lu, piv), eta[off], check_finite=False)
    return mass


def occupation_measure(model: GameModel, strategy, eta=None) -> OccupationMeasure:
    """Occupation measure of a stationary strategy for initial distribution eta.

    ``strategy`` may be a :class:`CorrelatedStationaryStrategy` or a
    :class:`StationaryProfile` (combined with :func:`product_strategy` first).

    Returns the joint measure with weights mu(x, a) = mu_X(x) * pi(a|x);
    the total mass equals the expected hitting time of the absorbing set.
    """
    corr = _as_correlated(model, strategy)
    eta = _eta_or_default(model, eta)
    mass = state_occupancy(model, corr, eta)
    table = np.where(model.joint_admissible, np.asarray(corr.table, dtype=float), 0.0)
    weights = mass[:, None] * table
    shape = (model.n_states,) + model.action_counts
    return OccupationMeasure(weights.reshape(shape), np.array(eta), player=None)


def measure_from_joint_weights(model: GameModel, weights, eta) -> OccupationMeasure:
    """Wrap raw (S, J) joint weights (e.g. an LP solution) as a measure."""
    weights = np.asarray(weights, dtype=float)
    shape = (model.n_states,) + model.action_counts
    return OccupationMeasure(weights.reshape(shape), np.array(eta, dtype=float), player=None)


def measure_from_marginal_weights(model: GameModel, player: int, weights, eta) -> OccupationMeasure:
    """Wrap raw (S, |A^i|) weights as the marginal measure of ``player``."""
    weights = np.asarray(weights, dtype=float)
    expected = (model.n_states, len(model.actions[player]))
    if weights.shape != expected:
        raise ProfileModelMismatch(f"weights have shape {weights.shape}, expected {expected}")
    return OccupationMeasure(weights.copy(), np.array(eta, dtype=float), player=player)


def residual(model: GameModel, mu: OccupationMeasure, eta=None) -> float:
    """Flow balance violation of a joint measure.

    The largest absolute defect of mu_X(y) = eta(y) + (mu Q)(y) over the
    non-absorbing states, plus any mass the measure puts on inadmissible
    (state, action) pairs.
    """
    if not mu.is_joint:
        raise ProfileModelMismatch("residual is defined for joint measures")
    eta = _eta_or_default(model, eta if eta is not None else mu.eta_ref)
    flat = mu.weights.reshape(model.n_states, model.n_joint)
    inflow = np.einsum("xj,xjy->y", flat, model.kernel)
    mass = flat.sum(axis=1)
    off = model.off_delta
    defect = 0.0
    if off.size:
        defect = float(np.abs(mass[off] - eta[off] - inflow[off]).max())
    stray = float(np.abs(flat[~model.joint_admissible]).sum())
    return defect + stray


def player_marginal(mu: OccupationMeasure, player: int) -> OccupationMeasure:
    """Marginal of a joint measure on (state, player-i action) pairs.

    Total mass is preserved; only the other players' action coordinates are
    summed out.
    """
    if not mu.is_joint:
        raise ProfileModelMismatch("player_marginal needs a joint measure")
    n_players = mu.weights.ndim - 1
    if not 0 <= player < n_players:
        raise ProfileModelMismatch(f"no player {player} in a {n_players}-player measure")
    axes = tuple(ax for ax in range(1, n_players + 1) if ax != player + 1)
    weights = mu.weights.sum(axis=axes) if axes else mu.weights.copy()
    return OccupationMeasure(weights, np.array(mu.eta_ref), player=player)


def _conditional_rows(weights_2d, mass, fallback_rows):
    out = np.array(fallback_rows, dtype=float)
    visited = mass > OCCUPANCY_CUTOFF
    out[visited] = weights_2d[visited] / mass[visited, None]
    return out


def disintegrate(model: GameModel, mu: OccupationMeasure, theta=None):
    """Recover a stationary strategy from an occupation measure.

    At states with occupation mass above 1e-12 the strategy is the measure
    conditioned on its state marginal, mu(x,.) / mu_X(x); everywhere else
    (absorbing states included) the fallback ``theta`` is used.  ``theta``
    defaults to uniform mixing over the admissible actions.

    For a joint measure the result is a :class:`CorrelatedStationaryStrategy`;
    for a player-i marginal it is a :class:`StationaryProfile` equal to
    ``theta`` with player i's kernel replaced.
    """
    mass = mu.state_marginal()
    if mu.is_joint:
        if theta is None:
            theta = model.uniform_correlated()
        validate_correlated(model, theta)
        flat = mu.weights.reshape(model.n_states, model.n_joint)
        table = _conditional_rows(flat, mass, theta.table)
        out = CorrelatedStationaryStrategy(table)
        validate_correlated(model, out)
        return out

    if theta is None:
        theta = model.uniform_profile()
    validate_profile(model, theta)
    i = mu.player
    tables = [np.array(t, dtype=float) for t in theta.pi]
    tables[i] = _conditional_rows(mu.weights, mass, tables[i])
    out = StationaryProfile(tuple(tables))
    validate_profile(model, out)
    return out


def payoffs(model: GameModel, mu: OccupationMeasure) -> PayoffVector:
    """Total expected reward and cost carried by a joint occupation measure."""
    if not mu.is_joint:
        raise ProfileModelMismatch("payoffs needs a joint measure")
    flat = mu.weights.reshape(model.n_states, model.n_joint)
    r = np.einsum("ixj,xj->i", model.reward, flat)
    c = np.einsum("ikxj,xj->ik", model.cost, flat)
    return PayoffVector(R=r, C=c)
