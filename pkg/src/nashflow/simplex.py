"""Dense two-phase simplex with Bland's rule.

Solves  max c.x  subject to  A x = b, x >= 0  for small dense problems.
Bland's smallest-index pivoting cannot cycle, so termination needs no
perturbation tricks; at desk scale determinism matters more than speed.
The basis system is re-solved from scratch every pivot, which is wasteful
but numerically the most robust option for matrices this size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleLP

#: Feasibility tolerance: constraint violations below this count as satisfied.
FEAS_TOL = 1e-9
#: Optimality tolerance on reduced costs.
OPT_TOL = 1e-9
#: Pivot elements smaller than this are treated as zero.
PIVOT_TOL = 1e-11


@dataclass
class SimplexResult:
    status: str           # "optimal" | "infeasible" | "unbounded"
    value: float
    x: np.ndarray         # structural variables only
    iterations: int


def _bland_iterate(A, b, c, basis, allowed, max_iter):
    """Run Bland-rule pivots until optimal or unbounded.

    ``basis`` is mutated in place.  Returns (status, x_basic, iterations).
    Only columns in ``allowed`` may enter the basis.
    """
    m = A.shape[0]
    iterations = 0
    while True:
        B = A[:, basis]
        try:
            x_b = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            raise InfeasibleLP("singular basis matrix") from None
        reduced = c - y @ A
        entering = -1
        for j in allowed:
            if j not in basis and reduced[j] > OPT_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal", x_b, iterations
        d = np.linalg.solve(B, A[:, entering])
        ratios = np.full(m, np.inf)
        ok = d > PIVOT_TOL
        ratios[ok] = np.maximum(x_b[ok], 0.0) / d[ok]
        theta = ratios.min()
        if not np.isfinite(theta):
            return "unbounded", x_b, iterations
        # Bland tie-break: among rows achieving the minimum ratio, evict the
        # basic variable with the smallest index.
        leaving_pos = -1
        leaving_var = None
        for i in range(m):
            if ok[i] and ratios[i] <= theta + 1e-12:
                if leaving_var is None or basis[i] < leaving_var:
                    leaving_var = basis[i]
                    leaving_pos = i
        basis[leaving_pos] = entering
        iterations += 1
        if iterations > max_iter:
            raise InfeasibleLP(f"iteration limit {max_iter} exceeded")


def solve_standard_form(c, A, b) -> SimplexResult:
    """Maximize c.x over { x >= 0 : A x = b }.

    Redundant equality rows are detected in phase one and dropped.  A claimed
    optimum is re-checked against the original system; numerical failure
    raises :class:`InfeasibleLP` rather than returning a wrong "optimal".
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = c.shape[0]
    if A.size == 0:
        A = A.reshape(len(b), n)
    m = A.shape[0]
    if A.shape != (m, n) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")

    if n == 0:
        if np.abs(b).max(initial=0.0) <= FEAS_TOL:
            return SimplexResult("optimal", 0.0, np.zeros(0), 0)
        return SimplexResult("infeasible", np.nan, np.zeros(0), 0)
    if m == 0:
        if c.max(initial=0.0) > OPT_TOL:
            return SimplexResult("unbounded", np.inf, np.zeros(n), 0)
        return SimplexResult("optimal", 0.0, np.zeros(n), 0)

    A = A.copy()
    b = b.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    ext = np.hstack([A, np.eye(m)])
    basis = list(range(n, n + m))
    max_iter = 2000 + 200 * (n + m)

    # Phase one: drive the artificial variables to zero.
    c1 = np.zeros(n + m)
    c1[n:] = -1.0
    structurals = list(range(n))
    status, x_b, it1 = _bland_iterate(ext, b, c1, basis, list(range(n + m)), max_iter)
    art_mass = sum(x_b[i] for i, v in enumerate(basis) if v >= n)
    if art_mass > FEAS_TOL:
        return SimplexResult("infeasible", np.nan, np.zeros(n), it1)

    # Remove leftover basic artificials: pivot them out where possible,
    # otherwise the row is redundant and can be dropped.
    keep = np.ones(m, dtype=bool)
    for pos in range(m):
        if basis[pos] < n:
            continue
        B = ext[:, basis]
        w = np.linalg.solve(B.T, np.eye(m)[pos])
        row = w @ ext[:, :n]
        pivot_col = -1
        for j in structurals:
            if j not in basis and abs(row[j]) > 1e-9:
                pivot_col = j
                break
        if pivot_col >= 0:
            basis[pos] = pivot_col
        else:
            keep[pos] = False
    if not keep.all():
        kept_positions = [i for i in range(m) if keep[i]]
        ext = ext[keep][:, :n]
        b = b[keep]
        basis = [basis[i] for i in kept_positions]
        m = ext.shape[0]
    else:
        ext = ext[:, :n]

    # Phase two on the structural columns only.
    status, x_b, it2 = _bland_iterate(ext, b, c, basis, structurals, max_iter)
    x = np.zeros(n)
    for pos, var in enumerate(basis):
        x[var] = x_b[pos]
    iterations = it1 + it2
    if status == "unbounded":
        return SimplexResult("unbounded", np.inf, x, iterations)

    residual = np.abs(ext @ x - b).max(initial=0.0)
    if residual > 1e-8 * max(1.0, np.abs(b).max(initial=0.0)) or x.min(initial=0.0) < -1e-8:
        raise InfeasibleLP(f"numerical failure: residual {residual!r} at claimed optimum")
    return SimplexResult("optimal", float(c @ x), x, iterations)
