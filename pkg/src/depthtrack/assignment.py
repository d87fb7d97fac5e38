"""Optimal linear assignment with forbidden pairs and deterministic ties.

Semantics: among all matchings of maximum cardinality over the allowed
pairs, pick one of minimum total cost; among those, pick the
lexicographically smallest pair list in row-major order.  The last rule
makes tracking output identical across platforms and runs.

The optimum is found with scipy's Jonker-Volgenant solver on a matrix
where forbidden pairs carry a cost too large for any optimal solution to
touch unless unavoidable; the lexicographic representative is then
recovered by fixing pairs row by row and re-solving the remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class AssignmentResult:
    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total_cost: float


def _optimum(cost: np.ndarray, allowed: np.ndarray) -> tuple[int, float] | None:
    """(cardinality, exact total cost) of the best matching, or None if empty."""
    n, m = cost.shape
    if n == 0 or m == 0 or not allowed.any():
        return (0, 0.0)
    k = min(n, m)
    finite = cost[allowed]
    lo = finite.min()
    span = finite.max() - lo
    big = span * k + 1.0
    work = np.where(allowed, cost - lo, big)
    rows, cols = linear_sum_assignment(work)
    picked = [(r, c) for r, c in zip(rows, cols) if allowed[r, c]]
    total = math.fsum(cost[r, c] for r, c in picked)
    return len(picked), total


def solve(cost: np.ndarray, forbidden: set[tuple[int, int]] | None = None) -> AssignmentResult:
    """Solve the assignment problem described in the module docstring.

    `cost` is a rectangular (rows x cols) matrix of finite reals;
    `forbidden` pairs can never be matched.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost matrix must be 2D")
    n, m = cost.shape
    allowed = np.ones((n, m), dtype=bool)
    for r, c in (forbidden or ()):
        allowed[r, c] = False
    if not np.isfinite(cost[allowed]).all():
        raise ValueError("allowed costs must be finite")

    best_card, best_cost = _optimum(cost, allowed)
    pairs: list[tuple[int, int]] = []
    fixed_cost = 0.0
    live_cols = list(range(m))
    sub = cost
    sub_allowed = allowed
    for r in range(n):
        # Matching this row to the smallest column that preserves the optimum
        # is always lexicographically minimal; an unmatched row only happens
        # when no column can preserve it.
        chosen = None
        for ci, c in enumerate(live_cols):
            if not sub_allowed[0, ci]:
                continue
            rest = np.delete(sub[1:], ci, axis=1)
            rest_allowed = np.delete(sub_allowed[1:], ci, axis=1)
            opt = _optimum(rest, rest_allowed)
            cand_cost = math.fsum((fixed_cost, sub[0, ci], opt[1]))
            # Equality up to accumulated rounding: exact for integer-valued
            # costs, and near-ties on real data resolve lexicographically.
            close = abs(cand_cost - best_cost) <= 1e-9 * max(1.0, abs(best_cost))
            if opt[0] + len(pairs) + 1 == best_card and close:
                chosen = (ci, c)
                break
        if chosen is None:
            # Row stays unmatched; drop it and continue.
            sub = sub[1:]
            sub_allowed = sub_allowed[1:]
            continue
        ci, c = chosen
        pairs.append((r, c))
        fixed_cost = math.fsum((fixed_cost, sub[0, ci]))
        del live_cols[ci]
        sub = np.delete(sub[1:], ci, axis=1)
        sub_allowed = np.delete(sub_allowed[1:], ci, axis=1)

    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return AssignmentResult(
        pairs=tuple(pairs),
        unmatched_rows=tuple(r for r in range(n) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(m) if c not in matched_cols),
        total_cost=math.fsum(cost[r, c] for r, c in pairs),
    )
