"""Absorption analysis: does every strategy drive the game into the absorbing set?

For finite models the question reduces to graph structure: a strategy that
avoids the absorbing set forever exists exactly when some end component of the
joint-action decision process lives entirely off the absorbing set and is
reachable from the support of the initial distribution.  The same attractor
computation that decides this also yields a geometric tail bound on the
hitting time, uniform over all strategies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InfeasibleLP, NotAbsorbingModel, NotAbsorbingUnderStrategy, Unbounded
from .model import GameModel, induced_chain
from .occupation import (
    OccupationMeasure,
    SINGULAR_TOL,
    _as_correlated,
    _eta_or_default,
    measure_from_joint_weights,
)
from .simplex import solve_standard_form

Witness = tuple[tuple[str, tuple[tuple[str, ...], ...]], ...]


@dataclass(frozen=True, eq=False)
class AbsorptionReport:
    """Outcome of the absorption check.

    ``offending_component`` is present exactly when ``is_absorbing`` is false:
    a tuple of (state name, tuple of joint-action name tuples) pairs
    describing an end component that some strategy never leaves.
    ``uniform_bound`` is the supremum of the expected hitting time over all
    stationary strategies, filled in when the model is absorbing.
    """

    is_absorbing: bool
    offending_component: Witness | None
    uniform_bound: float | None


def _reachable(model: GameModel, eta: np.ndarray) -> np.ndarray:
    """States reachable from the support of eta with positive probability."""
    positive = model.kernel.max(axis=1) > 0.0   # (S, S) ignoring action identity
    seen = eta > 0.0
    frontier = list(np.flatnonzero(seen))
    while frontier:
        x = frontier.pop()
        for y in np.flatnonzero(positive[x]):
            if not seen[y]:
                seen[y] = True
                frontier.append(y)
    return seen


def _attractor_levels(model: GameModel, reachable: np.ndarray):
    """Peel off states that are forced toward the absorbing set.

    Level k holds the states where every admissible joint action puts positive
    probability on strictly earlier levels or on the absorbing set.  States
    never peeled can stall off the absorbing set forever; they form the
    largest closed sub-process and are returned as the trap set.
    """
    drained = model.delta_mask.copy()
    pending = set(np.flatnonzero(reachable & ~model.delta_mask))
    levels: list[list[int]] = []
    while True:
        newly = [
            x
            for x in sorted(pending)
            if all(
                model.kernel[x, j][drained].sum() > 0.0
                for j in np.flatnonzero(model.joint_admissible[x])
            )
        ]
        if not newly:
            break
        levels.append(newly)
        for x in newly:
            drained[x] = True
            pending.discard(x)
    return levels, pending


def _strongly_connected(nodes, edges):
    """Iterative Tarjan over ``nodes`` with successor map ``edges``."""
    order = {}
    low = {}
    on_stack = set()
    stack = []
    components = []
    counter = 0
    for root in sorted(nodes):
        if root in order:
            continue
        work = [(root, iter(sorted(edges[root])))]
        order[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, successors = work[-1]
            advanced = False
            for succ in successors:
                if succ not in order:
                    order[succ] = low[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(sorted(edges[succ]))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], order[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == order[node]:
                comp = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.add(member)
                    if member == node:
                        break
                components.append(comp)
    return components


def _maximal_end_components(model: GameModel, trap: set[int]):
    """Maximal end components of the sub-process restricted to ``trap``.

    Returns a list of (state set, {state: tuple of joint-action indices})
    pairs; each kept action's support stays inside the component and the
    component is strongly connected under the kept actions.
    """
    def refine(states: set[int]):
        kept = {}
        current = set(states)
        while True:
            kept = {
                x: tuple(
                    j
                    for j in np.flatnonzero(model.joint_admissible[x])
                    if not model.kernel[x, j][
                        [y for y in range(model.n_states) if y not in current]
                    ].any()
                )
                for x in current
            }
            dead = {x for x in current if not kept[x]}
            if not dead:
                break
            current -= dead
            if not current:
                return []
        edges = {
            x: {
                int(y)
                for j in kept[x]
                for y in np.flatnonzero(model.kernel[x, j] > 0.0)
            }
            for x in current
        }
        components = _strongly_connected(current, edges)
        if len(components) == 1 and components[0] == current:
            # Stable only if the kept actions do not cross components.
            return [(current, {x: kept[x] for x in current})]
        result = []
        for comp in components:
            result.extend(refine(comp))
        return result

    return refine(set(trap))


def check_absorbing(model: GameModel, eta=None) -> AbsorptionReport:
    """Decide whether every strategy reaches the absorbing set from eta.

    When the model is absorbing the report also carries the uniform bound on
    the expected hitting time; otherwise it names an end component witnessing
    a strategy that never absorbs.  Passing a uniform eta checks absorption
    from every state at once.
    """
    eta = _eta_or_default(model, eta)
    reachable = _reachable(model, eta)
    _, trap = _attractor_levels(model, reachable)
    if not trap:
        return AbsorptionReport(True, None, uniform_absorption_bound(model, eta))
    mecs = _maximal_end_components(model, trap)
    states, kept = mecs[0]
    witness = tuple(
        (model.states[x], tuple(model.joint_label(j) for j in kept[x]))
        for x in sorted(states)
    )
    return AbsorptionReport(False, witness, None)


def decay_certificate(model: GameModel, eta=None) -> tuple[int, float]:
    """A uniform geometric tail bound for absorbing models.

    Returns (m, eps) such that P{T > k*m} <= (1 - eps)^k for every strategy,
    from any reachable state: within m steps the chain reaches the absorbing
    set with probability at least eps, whatever the actions.
    """
    eta = _eta_or_default(model, eta)
    reachable = _reachable(model, eta)
    levels, trap = _attractor_levels(model, reachable)
    if trap:
        raise NotAbsorbingModel()
    if not levels:
        return 1, 1.0
    drained = model.delta_mask.copy()
    step_mass = 1.0
    for level in levels:
        for x in level:
            for j in np.flatnonzero(model.joint_admissible[x]):
                step_mass = min(step_mass, float(model.kernel[x, j][drained].sum()))
        for x in level:
            drained[x] = True
    m = len(levels)
    return m, step_mass**m


def expected_hitting_time(model: GameModel, strategy, eta=None) -> float:
    """Expected number of steps before the absorbing set is entered.

    Solves (I - Q_sub) v = 1 on the non-absorbing states, where Q_sub is the
    induced chain restricted off the absorbing set, and returns eta . v.
    """
    corr = _as_correlated(model, strategy)
    eta = _eta_or_default(model, eta)
    off = model.off_delta
    if off.size == 0:
        return 0.0
    chain = induced_chain(model, corr)
    q_sub = chain[np.ix_(off, off)]
    system = np.eye(off.size) - q_sub
    lu, piv = lu_factor(system, check_finite=False)
    if np.abs(np.diag(lu)).min() <= SINGULAR_TOL:
        raise NotAbsorbingUnderStrategy(
            "induced chain does not absorb: hitting-time system is singular"
        )
    v = lu_solve((lu, piv), np.ones(off.size), check_finite=False)
    return float(eta[off] @ v)


def tail_probabilities(model: GameModel, strategy, eta=None, horizon: int = 50) -> np.ndarray:
    """P{T > t} for t = 0..horizon under a fixed stationary strategy."""
    corr = _as_correlated(model, strategy)
    eta = _eta_or_default(model, eta)
    off = model.off_delta
    out = np.zeros(horizon + 1)
    if off.size == 0:
        return out
    chain = induced_chain(model, corr)
    q_sub = chain[np.ix_(off, off)]
    u = np.ones(off.size)
    for t in range(horizon + 1):
        out[t] = eta[off] @ u
        u = q_sub @ u
    return out


def _mass_lp(model: GameModel, eta: np.ndarray):
    """Flow balance equalities over joint (state, action) weights off delta."""
    off = model.off_delta
    variables = [
        (int(x), int(j)) for x in off for j in np.flatnonzero(model.joint_admissible[x])
    ]
    n = len(variables)
    a_eq = np.zeros((off.size, n))
    for col, (x, j) in enumerate(variables):
        row = -model.kernel[x, j][off]
        a_eq[:, col] = row
        a_eq[np.flatnonzero(off == x)[0], col] += 1.0
    b_eq = eta[off]
    return variables, a_eq, b_eq


def uniform_absorption_bound(model: GameModel, eta=None) -> float:
    """Largest expected hitting time over all correlated stationary strategies.

    Computed as the maximal total mass over the polytope cut out by the flow
    balance equations.  An unbounded program means the model is not absorbing
    and raises :class:`Unbounded`.
    """
    eta = _eta_or_default(model, eta)
    variables, a_eq, b_eq = _mass_lp(model, eta)
    result = solve_standard_form(np.ones(len(variables)), a_eq, b_eq)
    if result.status == "unbounded":
        raise Unbounded("total occupation mass is unbounded: model is not absorbing")
    if result.status != "optimal":
        raise InfeasibleLP("flow balance system reported infeasible")
    return float(result.value)


def max_mass_measure(model: GameModel, eta=None) -> OccupationMeasure:
    """The occupation measure attaining :func:`uniform_absorption_bound`."""
    eta = _eta_or_default(model, eta)
    variables, a_eq, b_eq = _mass_lp(model, eta)
    result = solve_standard_form(np.ones(len(variables)), a_eq, b_eq)
    if result.status == "unbounded":
        raise Unbounded("total occupation mass is unbounded: model is not absorbing")
    if result.status != "optimal":
        raise InfeasibleLP("flow balance system reported infeasible")
    weights = np.zeros((model.n_states, model.n_joint))
    for col, (x, j) in enumerate(variables):
        weights[x, j] = result.x[col]
    return measure_from_joint_weights(model, weights, eta)
