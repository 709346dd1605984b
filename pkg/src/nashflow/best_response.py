"""Constrained best responses of one player against frozen opponents.

Freezing the other players' stationary strategies turns the game into a
single-controller model whose stationary-strategy occupation measures are
exactly the nonnegative solutions of the flow balance equations.  Maximizing
the frozen expected reward over that polytope, subject to the player's
constraint rows, is therefore a finite linear program, and the optimal
strategy is read off the optimal measure by conditioning on its state
marginal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintInfeasible, InfeasibleLP, Unbounded
from .model import GameModel, StationaryProfile, build_model, validate_profile
from .occupation import (
    OCCUPANCY_CUTOFF,
    OccupationMeasure,
    _conditional_rows,
    _eta_or_default,
    measure_from_marginal_weights,
)
from .simplex import solve_standard_form


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """max objective.z  s.t.  eq rows hold with equality, ge rows with >=, z >= 0.

    ``variable_index[k]`` names variable k as a (state, action) pair.
    """

    objective: np.ndarray
    eq_rows: tuple[tuple[np.ndarray, float], ...]
    ge_rows: tuple[tuple[np.ndarray, float], ...]
    variable_index: tuple[tuple[str, str], ...]

    @property
    def n_variables(self) -> int:
        return len(self.variable_index)


@dataclass(frozen=True, eq=False)
class LinearProgramSolution:
    status: str            # "optimal" | "infeasible" | "unbounded"
    value: float
    primal: np.ndarray     # aligned with variable_index
    iterations: int


def _opponent_weights(model: GameModel, player: int, others: StationaryProfile) -> np.ndarray:
    counts = model.action_counts
    w = np.ones((model.n_states,) + counts)
    for other in range(model.players):
        if other == player:
            continue
        shape = [model.n_states] + [1] * model.players
        shape[other + 1] = counts[other]
        w = w * np.asarray(others.pi[other], dtype=float).reshape(shape)
    return w


def freeze_opponents(model: GameModel, player: int, others: StationaryProfile) -> GameModel:
    """Average the kernel, rewards and costs over the opponents' action mix.

    ``others`` is a full profile; its entry for ``player`` is ignored.  The
    result is a valid single-player model over player ``player``'s actions
    whose stationary strategies reproduce exactly the play of
    (others^{-player}, sigma) in the original game.
    """
    validate_profile(model, others)
    if not 0 <= player < model.players:
        raise ConstraintInfeasible(player + 1, "no such player")
    counts = model.action_counts
    s = model.n_states
    w = _opponent_weights(model, player, others)
    axes = "".join(chr(ord("a") + l) for l in range(model.players))
    mine = axes[player]
    kernel = np.einsum(
        f"s{axes},s{axes}y->s{mine}y", w, model.kernel.reshape((s,) + counts + (s,))
    )
    reward = np.einsum(
        f"s{axes},s{axes}->s{mine}", w, model.reward[player].reshape((s,) + counts)
    )
    cost = np.einsum(
        f"s{axes},ks{axes}->ks{mine}",
        w,
        model.cost[player].reshape((model.n_constraints, s) + counts),
    )
    return build_model(
        {
            "states": model.states,
            "players": 1,
            "actions": (model.actions[player],),
            "admissible": (model.admissible[player],),
            "kernel": np.clip(kernel, 0.0, None),
            "reward": reward[None],
            "cost": cost[None],
            "rho": model.rho[player][None],
            "eta": model.eta,
            "delta": sorted(model.delta),
        }
    )


def _lp_from_view(view: GameModel, eta: np.ndarray, rho_i) -> LinearProgram:
    off = view.off_delta
    adm = view.admissible[0]
    variables = [(int(x), int(a)) for x in off for a in np.flatnonzero(adm[x])]
    n = len(variables)
    labels = tuple(
        (view.states[x], view.actions[0][a]) for x, a in variables
    )
    kernel = view.kernel  # (S, A, S): single player, joint action = own action

    eq_rows = []
    for row_pos, y in enumerate(off):
        coeffs = np.empty(n)
        for col, (x, a) in enumerate(variables):
            coeffs[col] = (1.0 if x == y else 0.0) - kernel[x, a, y]
        eq_rows.append((coeffs, float(eta[y])))

    ge_rows = []
    if rho_i is not None:
        rho_i = np.asarray(rho_i, dtype=float).reshape(-1)
        for j in range(rho_i.size):
            coeffs = np.array([view.cost[0, j, x, a] for x, a in variables])
            ge_rows.append((coeffs, float(rho_i[j])))

    objective = np.array([view.reward[0, x, a] for x, a in variables])
    return LinearProgram(objective, tuple(eq_rows), tuple(ge_rows), labels)


def build_br_lp(model: GameModel, player: int, others: StationaryProfile, eta=None, rho_i=None) -> LinearProgram:
    """Best-response linear program of ``player`` against ``others``.

    One nonnegative variable per (off-absorbing state, admissible own action),
    one flow balance equality per off-absorbing state, and one >= row per
    constraint component of ``rho_i`` (pass None for the unconstrained
    program).  The objective is the opponent-averaged reward.
    """
    view = freeze_opponents(model, player, others)
    eta = _eta_or_default(model, eta)
    return _lp_from_view(view, eta, rho_i)


def _standard_form(lp: LinearProgram):
    n = lp.n_variables
    n_ge = len(lp.ge_rows)
    m = len(lp.eq_rows) + n_ge
    a = np.zeros((m, n + n_ge))
    b = np.zeros(m)
    for r, (coeffs, rhs) in enumerate(lp.eq_rows):
        a[r, :n] = coeffs
        b[r] = rhs
    for k, (coeffs, rhs) in enumerate(lp.ge_rows):
        r = len(lp.eq_rows) + k
        a[r, :n] = coeffs
        a[r, n + k] = -1.0   # surplus
        b[r] = rhs
    c = np.zeros(n + n_ge)
    c[:n] = lp.objective
    return c, a, b


def solve_lp(lp: LinearProgram) -> LinearProgramSolution:
    """Solve a best-response program; the optimum is a vertex of the polytope."""
    c, a, b = _standard_form(lp)
    result = solve_standard_form(c, a, b)
    primal = result.x[: lp.n_variables] if result.x.size else np.zeros(lp.n_variables)
    return LinearProgramSolution(result.status, result.value, primal, result.iterations)


def _marginal_weights(model: GameModel, player: int, lp: LinearProgram, primal: np.ndarray) -> np.ndarray:
    weights = np.zeros((model.n_states, len(model.actions[player])))
    name_to_state = {name: k for k, name in enumerate(model.states)}
    name_to_action = {name: k for k, name in enumerate(model.actions[player])}
    for value, (state, action) in zip(primal, lp.variable_index):
        weights[name_to_state[state], name_to_action[action]] = value
    return weights


def best_response(model: GameModel, player: int, others: StationaryProfile, eta=None, rho_i=None, theta=None):
    """Optimal constrained reply of ``player`` against ``others``.

    Returns (strategy, value, marginal measure) where ``strategy`` is the
    (S, |A^i|) stochastic table recovered from the optimal measure
    (``theta``, default uniform, fills the unvisited states), ``value`` is the
    LP optimum, and the measure is the optimizing marginal.

    Raises :class:`ConstraintInfeasible` when no reply meets the constraints
    against these opponents.
    """
    eta = _eta_or_default(model, eta)
    view = freeze_opponents(model, player, others)
    lp = _lp_from_view(view, eta, rho_i)
    solution = solve_lp(lp)
    if solution.status == "infeasible":
        raise ConstraintInfeasible(player + 1, "best-response program is infeasible")
    if solution.status == "unbounded":
        raise Unbounded("best-response value is unbounded: model is not absorbing")
    weights = _marginal_weights(model, player, lp, solution.primal)
    measure = measure_from_marginal_weights(model, player, weights, eta)
    if theta is None:
        adm = model.admissible[player].astype(float)
        fallback = adm / adm.sum(axis=1, keepdims=True)
    else:
        fallback = np.asarray(theta, dtype=float)
    mass = weights.sum(axis=1)
    strategy = _conditional_rows(weights, mass, fallback)
    return strategy, float(solution.value), measure


def slater_check(model: GameModel, player: int, others: StationaryProfile, eta=None, rho_i=None) -> float:
    """Largest s such that some reply satisfies every constraint row with slack s.

    A strictly positive value certifies that the player can strictly
    over-satisfy the constraints against ``others``; a negative value measures
    by how much the constraints are out of reach.  Without constraint rows
    the slack is unbounded and +inf is returned.
    """
    eta = _eta_or_default(model, eta)
    if rho_i is None:
        return math.inf
    rho_i = np.asarray(rho_i, dtype=float).reshape(-1)
    if rho_i.size == 0:
        return math.inf
    view = freeze_opponents(model, player, others)
    lp = _lp_from_view(view, eta, rho_i)
    n = lp.n_variables
    n_ge = len(lp.ge_rows)
    # Columns: mu variables, s = u - v split, one surplus per >= row.
    a = np.zeros((len(lp.eq_rows) + n_ge, n + 2 + n_ge))
    b = np.zeros(len(lp.eq_rows) + n_ge)
    for r, (coeffs, rhs) in enumerate(lp.eq_rows):
        a[r, :n] = coeffs
        b[r] = rhs
    for k, (coeffs, rhs) in enumerate(lp.ge_rows):
        r = len(lp.eq_rows) + k
        a[r, :n] = coeffs
        a[r, n] = -1.0
        a[r, n + 1] = 1.0
        a[r, n + 2 + k] = -1.0
        b[r] = rhs
    c = np.zeros(n + 2 + n_ge)
    c[n] = 1.0
    c[n + 1] = -1.0
    result = solve_standard_form(c, a, b)
    if result.status == "unbounded":
        raise Unbounded("constraint slack is unbounded: model is not absorbing")
    if result.status != "optimal":
        raise InfeasibleLP("slack program reported infeasible")
    return float(result.value)


def format_lp(lp: LinearProgram) -> str:
    """Plain-text tabular dump: objective row first, then constraint rows."""
    headers = [f"{state}/{action}" for state, action in lp.variable_index]
    width = max([len(h) for h in headers] + [12])
    lines = ["  ".join(h.rjust(width) for h in headers) + "  |  relation"]

    def fmt(coeffs, tag):
        return "  ".join(f"{v:>{width}.6g}" for v in coeffs) + f"  |  {tag}"

    lines.append(fmt(lp.objective, "max"))
    for coeffs, rhs in lp.eq_rows:
        lines.append(fmt(coeffs, f"= {rhs:.6g}"))
    for coeffs, rhs in lp.ge_rows:
        lines.append(fmt(coeffs, f">= {rhs:.6g}"))
    return "\n".join(lines)
