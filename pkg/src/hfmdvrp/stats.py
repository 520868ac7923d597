"""Two-sided Mann-Whitney U test."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

EXACT_MAX_N = 20


class MannWhitney(NamedTuple):
    u: float
    p_value: float


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_p(doubled: list[int], n1: int, observed: int) -> float:
    """P(|S - E[S]| >= |observed - E[S]|) over all n1-subsets, S a doubled rank sum."""
    n = len(doubled)
    center = n1 * (n + 1)  # E[S] for doubled ranks
    # ways[k][s]: subsets of size k with doubled rank sum s
    ways: list[dict[int, int]] = [dict() for _ in range(n1 + 1)]
    ways[0][0] = 1
    for r in doubled:
        for k in range(min(n1, n) - 1, -1, -1):
            row = ways[k + 1]
            for s, c in ways[k].items():
                row[s + r] = row.get(s + r, 0) + c
    dev = abs(observed - center)
    hits = sum(c for s, c in ways[n1].items() if abs(s - center) >= dev)
    return hits / math.comb(n, n1)


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> MannWhitney:
    """U statistic of ``a`` and the two-sided p-value.

    Small samples (len(a) + len(b) <= 20) get the exact permutation p-value,
    ties included; larger ones use the normal approximation with tie and
    continuity corrections.
    """
    n1, n2 = len(a), len(b)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples need at least one value")
    pooled = [float(v) for v in a] + [float(v) for v in b]
    if any(math.isnan(v) for v in pooled):
        raise ValueError("samples must not contain NaN")
    ranks = _midranks(pooled)
    r1 = sum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2
    n = n1 + n2

    if n <= EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        return MannWhitney(u, _exact_p(doubled, n1, sum(doubled[:n1])))

    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    ties = sum(t**3 - t for t in counts.values())
    var = n1 * n2 / 12 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return MannWhitney(u, 1.0)
    z = max(0.0, abs(u - n1 * n2 / 2) - 0.5) / math.sqrt(var)
    return MannWhitney(u, min(1.0, math.erfc(z / math.sqrt(2))))
