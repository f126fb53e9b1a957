"""Minimum-cost bipartite assignment (Hungarian method).

The core is the shortest-augmenting-path formulation with row/column
potentials, O(n^2 m), with the inner column scan vectorized in numpy.
Infeasible pairs carry an infinite cost. They are replaced by a penalty
larger than any feasible total, so the optimum first maximizes the number of
feasible pairs and then minimizes their cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

FORBIDDEN = np.inf


@dataclass(frozen=True, eq=False)
class AssignmentProblem:
    """Rows are ground-truth objects, columns hypotheses; ``inf`` marks forbidden pairs."""

    cost: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("cost must be a 2-d matrix")
        finite = c[np.isfinite(c)]
        if np.isnan(c).any() or (finite < 0).any():
            raise ValueError("feasible costs must be non-negative numbers")
        object.__setattr__(self, "cost", c)

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.cost)


def _shortest_augmenting_path(cost: np.ndarray) -> np.ndarray:
    """Full assignment of every row of a dense ``n <= m`` matrix; returns the column per row.

    Rows are inserted in ascending order and ties in the column scan go to
    the lowest column index, so the result is deterministic.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=np.int64)  # owner[j] = 1-based row holding column j, 0 if free
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            reduced = cost[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            candidates = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(candidates)) + 1
            delta = candidates[j1 - 1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    for j in range(1, m + 1):
        if owner[j]:
            col_of_row[owner[j] - 1] = j - 1
    return col_of_row


def _solve_dense(cost: np.ndarray) -> list[tuple[int, int]]:
    feasible = np.isfinite(cost)
    finite = np.where(feasible, cost, 0.0)
    penalty = 2.0 * float(np.abs(finite).sum()) + 1.0
    dense = np.where(feasible, cost, penalty)
    transposed = dense.shape[0] > dense.shape[1]
    if transposed:
        dense = dense.T
    cols = _shortest_augmenting_path(dense)
    pairs = [(c, r) if transposed else (r, c) for r, c in enumerate(cols.tolist())]
    return sorted(p for p in pairs if feasible[p])


def solve_min_cost_assignment(problem: AssignmentProblem | np.ndarray) -> list[tuple[int, int]]:
    """Maximum-cardinality matching over feasible pairs with minimum total cost.

    Returns ``(row, column)`` pairs sorted by row. The feasibility graph is
    split into connected components first; each is solved independently,
    which is exact and keeps crowded frames cheap.
    """
    if not isinstance(problem, AssignmentProblem):
        problem = AssignmentProblem(problem)
    cost = problem.cost
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    feasible = problem.feasible
    rows, cols = np.nonzero(feasible)
    if len(rows) == 0:
        return []

    row_deg = np.bincount(rows, minlength=n)
    col_deg = np.bincount(cols, minlength=m)
    if (row_deg[rows] == 1).all() and (col_deg[cols] == 1).all():
        return sorted(zip(rows.tolist(), cols.tolist()))

    graph = coo_matrix((np.ones(len(rows)), (rows, cols + n)), shape=(n + m, n + m))
    _, labels = connected_components(graph, directed=False)
    row_labels, col_labels = labels[:n], labels[n:]
    pairs: list[tuple[int, int]] = []
    for comp in np.unique(row_labels[rows]):
        r_idx = np.flatnonzero(row_labels == comp)
        c_idx = np.flatnonzero(col_labels == comp)
        if len(r_idx) == 1 and len(c_idx) == 1:
            pairs.append((int(r_idx[0]), int(c_idx[0])))
            continue
        for r, c in _solve_dense(cost[np.ix_(r_idx, c_idx)]):
            pairs.append((int(r_idx[r]), int(c_idx[c])))
    return sorted(pairs)


def assignment_cost(problem: AssignmentProblem | np.ndarray, pairs) -> float:
    cost = problem.cost if isinstance(problem, AssignmentProblem) else np.asarray(problem, dtype=np.float64)
    return float(sum(cost[r, c] for r, c in pairs))
