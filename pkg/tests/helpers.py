"""Shared test oracles and utilities, independent of the solver code paths."""

import itertools
import math

import numpy as np

from mlrfit import synth
from mlrfit.model import NoiseKind, NoiseModel
from mlrfit.rng import stable_hash


def lhat_terms(w, lam, rho, fit, y, nm):
    """Per-coordinate surrogate term, written straight from its definition."""
    if nm.kind is NoiseKind.GAUSSIAN:
        def neg_log_f(z):
            return w * (
                (y - z) ** 2 / (2.0 * nm.sigma**2)
                + 0.5 * math.log(2.0 * math.pi * nm.sigma**2)
            )
    else:
        def neg_log_f(z):
            return w * (np.abs(y - z) / nm.b + math.log(2.0 * nm.b))

    def value(z):
        return neg_log_f(z) - lam * z + 0.5 * rho * (fit - z) ** 2

    def subderivative(z):
        if nm.kind is NoiseKind.GAUSSIAN:
            data_term = w * (z - y) / nm.sigma**2
        else:
            data_term = w * np.sign(z - y) / nm.b
        return data_term - lam + rho * (z - fit)

    return value, subderivative


def minimize_lhat(w, lam, rho, fit, y, nm):
    """Numerical argmin of the per-coordinate surrogate.

    Dense grid bracketing followed by bisection on the subderivative sign;
    the function is convex, so the sign change pins the minimizer far more
    tightly than value comparisons could.
    """
    value, subderivative = lhat_terms(w, lam, rho, fit, y, nm)
    reach = abs(y - fit) + (abs(lam) + w / min(nm.b, nm.sigma**2)) / rho + abs(y) + 5.0
    lo, hi = min(y, fit) - reach, max(y, fit) + reach
    grid = np.linspace(lo, hi, 4001)
    values = value(grid)
    i = int(np.argmin(values))
    lo, hi = grid[max(0, i - 2)], grid[min(len(grid) - 1, i + 2)]
    if subderivative(lo) >= 0.0:
        return lo
    if subderivative(hi) <= 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if subderivative(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def brute_force_assignment(cost: np.ndarray):
    """Exact minimum-cost assignment by enumerating all permutations.

    Totals are reduced with the same numpy summation used on the solver
    side, so equal assignments compare bit-for-bit equal.
    """
    k = cost.shape[0]
    idx = np.arange(k)
    best_perm, best_cost = None, math.inf
    for perm in itertools.permutations(range(k)):
        total = float(cost[idx, list(perm)].sum())
        if total < best_cost:
            best_cost, best_perm = total, perm
    return best_perm, best_cost


def min_pairwise_gap(beta: np.ndarray) -> float:
    k = beta.shape[1]
    gaps = [
        float(np.linalg.norm(beta[:, i] - beta[:, j]))
        for i in range(k)
        for j in range(i + 1, k)
    ]
    return min(gaps) if gaps else math.inf


def separated_seed(k: int, d: int, nm: NoiseModel, base: int, min_gap: float = 2.0) -> int:
    """Seed whose generated true coefficients are pairwise >= min_gap apart.

    Rejection-samples over hashed candidate seeds; generating a single
    sample is enough to observe the coefficients because they are drawn
    before the data.
    """
    for attempt in range(100000):
        seed = stable_hash("sep", base, k, d, nm.kind.value, attempt)
        truth = synth.generate(k, d, 1, nm, seed).true_params
        if min_pairwise_gap(truth.beta) >= min_gap:
            return seed
    raise RuntimeError("no separated instance found")


def strip_clock_lines(text: str) -> str:
    """Drop wall-clock lines so reruns of a command compare equal."""
    kept = [
        line
        for line in text.splitlines()
        if not line.startswith(("wall_seconds = ", "started_at = ", "finished_at = "))
    ]
    return "\n".join(kept)
