"""Discrete optimal transport: exact network simplex and entropic Sinkhorn.

Both solvers take a source measure ``mu`` (length n), a target measure
``nu`` (length m), and a nonnegative cost matrix (n, m), and return a
:class:`TransportPlan` whose row sums match ``mu`` and column sums match
``nu``. The exact solver runs the classic transportation simplex (u-v
potentials on a spanning-tree basis, Bland's rule under degeneracy) and
yields an optimal vertex. Sinkhorn solves the entropic relaxation in the
log domain with an epsilon-scaling warm start and reports its objective
against the original (unregularised) cost, so it upper-bounds the exact
optimum and approaches it as epsilon shrinks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_BALANCE_TOL = 1e-9


@dataclass
class TransportPlan:
    """Coupling matrix plus its transport cost under the original cost matrix."""

    matrix: np.ndarray
    objective: float
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class SolverConfig:
    """Dispatch and Sinkhorn settings for coverage-loss solves.

    Instances up to ``exact_max_cells`` cost-matrix cells go to the exact
    solver; larger ones use Sinkhorn with the settings here.
    """

    exact_max_cells: int = 4096
    epsilon: float = 0.01
    tol: float = 1e-9
    max_iter: int = 10_000


def as_measure(weights: np.ndarray) -> np.ndarray:
    """Validate a nonnegative weight vector summing to 1 (within 1e-9)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise ValueError(f"measure must be a non-empty vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("measure weights must be finite and nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > _BALANCE_TOL:
        raise ValueError(f"measure weights sum to {total}, expected 1")
    return w


def cosine_cost(embs_a: np.ndarray, embs_b: np.ndarray) -> np.ndarray:
    """Pairwise 1 - cosine similarity; entries clipped into [0, 2]."""
    a = np.asarray(embs_a, dtype=np.float64)
    b = np.asarray(embs_b, dtype=np.float64)
    norms_a = np.linalg.norm(a, axis=1)
    norms_b = np.linalg.norm(b, axis=1)
    for name, norms in (("a", norms_a), ("b", norms_b)):
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(f"zero-norm row {int(zero[0])} in embs_{name}")
    sims = (a @ b.T) / np.outer(norms_a, norms_b)
    return np.clip(1.0 - sims, 0.0, 2.0)


def euclidean_cost(points_a: np.ndarray, points_b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between two point sets."""
    a = np.asarray(points_a, dtype=np.float64)
    b = np.asarray(points_b, dtype=np.float64)
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.maximum(np.einsum("ijk,ijk->ij", diff, diff), 0.0))


def wasserstein(plan: TransportPlan, cost: np.ndarray) -> float:
    """Transport cost of ``plan`` under ``cost``: sum over cells of flow times cost."""
    return float(np.sum(plan.matrix * np.asarray(cost, dtype=np.float64)))


def _check_instance(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    if mu.ndim != 1 or nu.ndim != 1:
        raise ValueError("marginals must be vectors")
    if cost.shape != (mu.shape[0], nu.shape[0]):
        raise ValueError(f"cost shape {cost.shape} does not match marginals ({mu.shape[0]}, {nu.shape[0]})")
    if np.any(mu < 0) or np.any(nu < 0):
        raise ValueError("marginals must be nonnegative")
    if not np.all(np.isfinite(cost)) or np.any(cost < 0):
        raise ValueError("cost matrix must be finite and nonnegative")
    if abs(float(mu.sum()) - float(nu.sum())) > _BALANCE_TOL:
        raise ValueError(f"unbalanced marginals: {float(mu.sum())} vs {float(nu.sum())}")
    return mu, nu, cost


def _nw_corner(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int, float]]:
    """North-west corner start: exactly n + m - 1 basic cells, zeros included."""
    n, m = a.shape[0], b.shape[0]
    ra, rb = a.copy(), b.copy()
    i = j = 0
    cells = []
    while True:
        x = min(ra[i], rb[j])
        cells.append((i, j, x))
        ra[i] -= x
        rb[j] -= x
        if i == n - 1 and j == m - 1:
            break
        if ra[i] <= 0 and i < n - 1:
            i += 1
        else:
            j += 1
    return cells


class _BasisTree:
    """Spanning-tree basis over row nodes 0..n-1 and column nodes n..n+m-1."""

    def __init__(self, n: int, m: int, cells: list[tuple[int, int, float]]):
        self.n = n
        self.m = m
        self.flow: dict[tuple[int, int], float] = {(i, j): x for i, j, x in cells}
        self.adj: list[set[int]] = [set() for _ in range(n + m)]
        for i, j, _ in cells:
            self.adj[i].add(n + j)
            self.adj[n + j].add(i)

    def potentials(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        u = np.zeros(n)
        v = np.zeros(self.m)
        seen = [False] * (n + self.m)
        stack = [0]
        seen[0] = True
        while stack:
            node = stack.pop()
            for nxt in self.adj[node]:
                if seen[nxt]:
                    continue
                seen[nxt] = True
                if node < n:  # row -> column
                    v[nxt - n] = cost[node, nxt - n] - u[node]
                else:  # column -> row
                    u[nxt] = cost[nxt, node - n] - v[node - n]
                stack.append(nxt)
        return u, v

    def path(self, src: int, dst: int) -> list[tuple[int, int]]:
        """Arc list of the unique tree path from src node to dst node."""
        parent = {src: src}
        stack = [src]
        while stack:
            node = stack.pop()
            if node == dst:
                break
            for nxt in self.adj[node]:
                if nxt not in parent:
                    parent[nxt] = node
                    stack.append(nxt)
        arcs = []
        node = dst
        while node != src:
            prev = parent[node]
            if prev < self.n:
                arcs.append((prev, node - self.n))
            else:
                arcs.append((node, prev - self.n))
            node = prev
        arcs.reverse()
        return arcs

    def pivot(self, entering: tuple[int, int], leaving: tuple[int, int], theta: float,
              cycle: list[tuple[tuple[int, int], int]]) -> None:
        for arc, sign in cycle:
            if arc == entering:
                continue
            self.flow[arc] += sign * theta
        self.flow[entering] = theta
        self.flow.pop(leaving)
        li, lj = leaving
        self.adj[li].discard(self.n + lj)
        self.adj[self.n + lj].discard(li)
        ei, ej = entering
        self.adj[ei].add(self.n + ej)
        self.adj[self.n + ej].add(ei)


def _transport_simplex(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> tuple[np.ndarray, int]:
    n, m = cost.shape
    tree = _BasisTree(n, m, _nw_corner(a, b))
    tol = 1e-12 * max(1.0, float(cost.max(initial=0.0)))
    max_pivots = 200 * (n + m) * max(n, m) + 1000
    degenerate_streak = 0
    bland = False
    pivots = 0
    while True:
        if pivots > max_pivots:
            raise RuntimeError(f"transport simplex failed to converge within {max_pivots} pivots")
        u, v = tree.potentials(cost)
        reduced = cost - u[:, None] - v[None, :]
        for (i, j) in tree.flow:
            reduced[i, j] = np.inf  # basic cells are not candidates
        if bland:
            candidates = np.flatnonzero(reduced.ravel() < -tol)
            if candidates.size == 0:
                break
            flat = int(candidates[0])
        else:
            flat = int(np.argmin(reduced.ravel()))
            if reduced.ravel()[flat] >= -tol:
                break
        entering = (flat // m, flat % m)
        pivots += 1

        path = tree.path(entering[0], tree.n + entering[1])
        # Signs around the cycle: entering arc is +, then alternate along the path.
        cycle: list[tuple[tuple[int, int], int]] = [(entering, +1)]
        sign = -1
        for arc in reversed(path):  # walk from the entering column back to the row
            cycle.append((arc, sign))
            sign = -sign
        minus_arcs = [arc for arc, s in cycle if s < 0]
        theta = min(tree.flow[arc] for arc in minus_arcs)
        leaving = min(
            (arc for arc in minus_arcs if tree.flow[arc] <= theta),
            key=lambda arc: arc[0] * m + arc[1],
        )
        tree.pivot(entering, leaving, theta, cycle)

        if theta <= 0.0:
            degenerate_streak += 1
            if degenerate_streak > n + m:
                bland = True
        else:
            degenerate_streak = 0
            bland = False

    plan = np.zeros((n, m))
    for (i, j), x in tree.flow.items():
        plan[i, j] = max(x, 0.0)
    return plan, pivots


def _positive_support(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray):
    idx = np.flatnonzero(mu > 0)
    jdx = np.flatnonzero(nu > 0)
    if idx.size == 0 or jdx.size == 0:
        raise ValueError("marginals carry no positive mass")
    return idx, jdx, mu[idx], nu[jdx], cost[np.ix_(idx, jdx)]


def exact_ot(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray) -> TransportPlan:
    """Optimal transport plan via the transportation simplex.

    Returns a vertex solution: at most n + m - 1 positive cells, exact
    marginals, minimal objective.
    """
    mu, nu, cost = _check_instance(mu, nu, cost)
    idx, jdx, mu_r, nu_r, cost_r = _positive_support(mu, nu, cost)
    sub_plan, pivots = _transport_simplex(mu_r, nu_r, cost_r)
    plan = np.zeros_like(cost)
    plan[np.ix_(idx, jdx)] = sub_plan
    return TransportPlan(
        matrix=plan,
        objective=float(np.sum(plan * cost)),
        converged=True,
        iterations=pivots,
    )


def _logsumexp(mat: np.ndarray, axis: int) -> np.ndarray:
    mx = np.max(mat, axis=axis, keepdims=True)
    out = mx.squeeze(axis) + np.log(np.sum(np.exp(mat - mx), axis=axis))
    return out


def _round_feasible(plan: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Project an almost-feasible positive plan onto the exact marginals."""
    row = plan.sum(axis=1)
    plan = plan * np.minimum(mu / np.where(row > 0, row, 1.0), 1.0)[:, None]
    col = plan.sum(axis=0)
    plan = plan * np.minimum(nu / np.where(col > 0, col, 1.0), 1.0)[None, :]
    err_r = np.maximum(mu - plan.sum(axis=1), 0.0)
    err_c = np.maximum(nu - plan.sum(axis=0), 0.0)
    total = err_r.sum()
    if total > 0.0:
        plan = plan + np.outer(err_r, err_c) / total
    return plan


def sinkhorn(
    mu: np.ndarray,
    nu: np.ndarray,
    cost: np.ndarray,
    epsilon: float,
    max_iter: int = 10_000,
    tol: float = 1e-9,
) -> TransportPlan:
    """Entropic-regularised transport via log-domain alternating scaling.

    Runs an epsilon-scaling schedule (halving from 1.0 down to the target)
    so small regularisation stays numerically stable, then rounds the plan
    onto the exact marginals. A plan that missed ``tol`` after ``max_iter``
    total iterations comes back flagged ``converged=False``.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    mu, nu, cost = _check_instance(mu, nu, cost)
    idx, jdx, mu_r, nu_r, cost_r = _positive_support(mu, nu, cost)

    log_mu = np.log(mu_r)
    log_nu = np.log(nu_r)
    f = np.zeros_like(mu_r)
    g = np.zeros_like(nu_r)

    levels = [epsilon]
    while levels[-1] < 1.0:
        levels.append(min(levels[-1] * 2.0, 1.0))
    levels.reverse()

    iterations = 0
    converged = False
    eps_used = levels[0]
    for level_idx, eps in enumerate(levels):
        if iterations >= max_iter:
            break
        eps_used = eps
        final = level_idx == len(levels) - 1
        level_tol = tol if final else max(tol, 1e-4)
        while iterations < max_iter:
            iterations += 1
            f = eps * (log_mu - _logsumexp((g[None, :] - cost_r) / eps, axis=1))
            g = eps * (log_nu - _logsumexp((f[:, None] - cost_r) / eps, axis=0))
            plan_r = np.exp((f[:, None] + g[None, :] - cost_r) / eps)
            err = max(
                float(np.max(np.abs(plan_r.sum(axis=1) - mu_r))),
                float(np.max(np.abs(plan_r.sum(axis=0) - nu_r))),
            )
            if err < level_tol:
                if final:
                    converged = True
                break

    plan_r = np.exp((f[:, None] + g[None, :] - cost_r) / eps_used)
    plan_r = _round_feasible(plan_r, mu_r, nu_r)
    plan = np.zeros_like(cost)
    plan[np.ix_(idx, jdx)] = plan_r
    return TransportPlan(
        matrix=plan,
        objective=float(np.sum(plan * cost)),
        converged=converged,
        iterations=iterations,
    )


def solve_ot(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray, config: SolverConfig | None = None) -> TransportPlan:
    """Exact solve for desk-scale instances, Sinkhorn above the cell cap."""
    config = config or SolverConfig()
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size <= config.exact_max_cells:
        return exact_ot(mu, nu, cost)
    return sinkhorn(mu, nu, cost, config.epsilon, config.max_iter, config.tol)
