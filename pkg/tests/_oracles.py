"""Independent reference computations shared by several test modules."""

import math

from scipy.integrate import quad


def soc_oracle(prod_day, p_base, capacity, soc_init):
    """Step-by-step battery walk with quadrature of the half-sine per half hour."""
    def shape(t):
        return math.sin(math.pi * (t - 6) / 12)

    norm = quad(shape, 6, 18)[0]
    e = soc_init * capacity
    lowest_unclamped, lowest = math.inf, e
    for k in range(48):
        a, b = max(k * 0.5, 6.0), min(k * 0.5 + 0.5, 18.0)
        p = prod_day * quad(shape, a, b)[0] / norm if b > a else 0.0
        e = e + p - p_base * 0.5
        lowest_unclamped = min(lowest_unclamped, e)
        e = min(max(e, 0.0), capacity)
        lowest = min(lowest, e)
    return lowest_unclamped >= 0, lowest / capacity


def brute_force_fronts(objectives, violations):
    """Peel fronts by checking every pair; feasibility first, then Pareto dominance."""
    def better(i, j):
        if violations[i] != violations[j]:
            return violations[i] < violations[j]
        if violations[i]:
            return False
        a, b = objectives[i], objectives[j]
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    remaining = set(range(len(objectives)))
    fronts = []
    while remaining:
        front = sorted(i for i in remaining if not any(better(j, i) for j in remaining))
        fronts.append(front)
        remaining -= set(front)
    return fronts
