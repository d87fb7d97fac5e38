"""Brute-force assignment oracle: enumerate every feasible matching.

Finds the lexicographically smallest pair list among maximum-cardinality,
minimum-cost matchings.  Exponential; only for small matrices in tests.
"""

import math
from itertools import combinations, permutations


def brute_solve(cost, forbidden=frozenset()):
    n = len(cost)
    m = len(cost[0]) if n else 0
    best = None  # (-cardinality, total_cost, pairs)
    rows = list(range(n))
    cols = list(range(m))
    k = min(n, m)
    for size in range(k, -1, -1):
        found_at_size = False
        for rsub in combinations(rows, size):
            for perm in permutations(cols, size):
                pairs = tuple(sorted(zip(rsub, perm)))
                if any(p in forbidden for p in pairs):
                    continue
                total = math.fsum(cost[r][c] for r, c in pairs)
                key = (total, pairs)
                if best is None or key < best:
                    best = key
                found_at_size = True
        if found_at_size:
            break
    if best is None:
        return (), 0.0
    return best[1], best[0]
