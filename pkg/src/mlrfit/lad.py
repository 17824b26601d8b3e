"""Weighted least-absolute-deviations solvers.

Routes with different exactness/speed trade-offs:

* ``weighted_median`` / ``solve_1d``: exact for one-dimensional problems.
* ``irls``: iteratively reweighted least squares on the smoothed
  objective sum_i w_i sqrt(r_i^2 + delta^2); production route for d >= 2.
* ``dual_lp``: exact LP solve through the bounded dual (HiGHS simplex);
  fast enough to run once per component per iteration at benchmark scale.
* ``simplex``: self-contained dense primal simplex on the epigraph
  formulation (h_i >= +-residual); exact small-scale reference.
"""

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import IterationLimit, SingularGram, SolverStall, Unbounded

RIDGE_SCALE = 1e-10
# EM hands IRLS nearly degenerate subproblems (responsibilities collapse to
# machine-zero on many rows) whose linear convergence rate can approach 1;
# measured tails run to a few thousand reweighting passes before the
# per-step decrease flattens below the tolerance.
IRLS_MAX_ITERATIONS = 20000
IRLS_TOLERANCE = 1e-10


def ridge_gram(gram: np.ndarray) -> np.ndarray:
    """Gram matrix plus the stabilizing ridge RIDGE_SCALE * trace / d."""
    d = gram.shape[0]
    return gram + (RIDGE_SCALE * np.trace(gram) / d) * np.eye(d)


def solve_spd(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the ridge-stabilized system via Cholesky."""
    try:
        factor = scipy.linalg.cho_factor(ridge_gram(gram))
    except scipy.linalg.LinAlgError as exc:
        raise SingularGram(f"Gram matrix not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs)


def weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Lower weighted median: smallest v with cumulative weight >= half.

    Ties on the half-mass boundary resolve to the lower candidate, which
    keeps the result deterministic.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("weighted median needs positive total weight")
    order = np.argsort(values, kind="stable")
    cumulative = np.cumsum(weights[order])
    idx = int(np.searchsorted(cumulative, 0.5 * total))
    return float(values[order][idx])


def solve_1d(x: np.ndarray, y: np.ndarray, weights: np.ndarray) -> float:
    """Exact weighted LAD for a single coefficient.

    min_b sum w_i |y_i - b x_i| equals the weighted median of the ratios
    y_i / x_i under weights w_i |x_i|; samples with x_i = 0 contribute a
    constant and drop out.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    keep = (x != 0.0) & (np.asarray(weights, dtype=float) > 0.0)
    if not keep.any():
        return 0.0
    return weighted_median(y[keep] / x[keep], weights[keep] * np.abs(x[keep]))


def irls(
    x: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    delta: float,
    max_iterations: int = IRLS_MAX_ITERATIONS,
    tolerance: float = IRLS_TOLERANCE,
):
    """Minimize sum_i w_i sqrt((y_i - <b, x_i>)^2 + delta^2) by IRLS.

    Starts from the weighted least-squares solution and stops once the
    relative objective decrease falls below ``tolerance``. Raises
    SolverStall if the budget runs out while still making larger steps.

    Returns (coefficients, iterations_used).
    """

    def objective(beta):
        r = y - x @ beta
        return float(np.sum(weights * np.sqrt(r * r + delta * delta)))

    def reweighted_solve(q):
        xq = x * q[:, None]
        return solve_spd(xq.T @ x, xq.T @ y)

    beta = reweighted_solve(weights)
    prev = objective(beta)
    for iteration in range(1, max_iterations + 1):
        r = y - x @ beta
        beta = reweighted_solve(weights / np.sqrt(r * r + delta * delta))
        current = objective(beta)
        if prev - current < tolerance * max(prev, np.finfo(float).tiny):
            return beta, iteration
        prev = current
    raise SolverStall(
        f"IRLS still decreasing after {max_iterations} iterations "
        f"(last objective {prev:.6g})"
    )


def dual_lp(x: np.ndarray, y: np.ndarray, weights: np.ndarray):
    """Exact weighted LAD through the bounded dual linear program.

    The dual of min_b sum w_i h_i, h_i >= +-(y_i - <b, x_i>) is
    max y.s subject to X^T s = 0 and -w <= s <= w, whose equality
    multipliers are -b. Only d equality rows, so the simplex basis stays
    tiny no matter how large N gets.

    Returns (coefficients, objective at those coefficients).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    d = x.shape[1]
    # Presolve costs ~10x the actual solve on this problem shape.
    res = scipy.optimize.linprog(
        -y,
        A_eq=x.T,
        b_eq=np.zeros(d),
        bounds=np.column_stack([-weights, weights]),
        method="highs-ds",
        options={"presolve": False},
    )
    if res.status == 1:
        raise IterationLimit("LP iteration limit reached")
    if res.status != 0:
        raise SolverStall(f"LP solve failed: {res.message}")
    beta = -np.asarray(res.eqlin.marginals, dtype=float)
    objective = float(np.sum(weights * np.abs(y - x @ beta)))
    return beta, objective


def simplex(x: np.ndarray, y: np.ndarray, weights: np.ndarray, max_pivots: int = 50000):
    """Dense primal simplex on the epigraph LP, for test-scale instances.

    Variables are (b+, b-, h, s1, s2), all non-negative, with equality
    rows  x_i.(b+ - b-) + h_i - s1_i = y_i  and
    -x_i.(b+ - b-) + h_i - s2_i = -y_i. The all-zero coefficient point
    with h_i = |y_i| is a basic feasible start, so no phase-1 is needed.
    Bland's rule keeps the pivoting cycle-free.

    Returns (coefficients, objective) at an optimal vertex.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n, d = x.shape
    n_var = 2 * d + 3 * n
    h0, s10, s20 = 2 * d, 2 * d + n, 2 * d + 2 * n

    # Canonical tableau for the starting basis, built directly: for
    # y_i >= 0 the pair is (h_i basic in row 2i, s2_i basic in row 2i+1),
    # otherwise (s1_i in row 2i, h_i in row 2i+1).
    tableau = np.zeros((2 * n, n_var + 1))
    basis = np.empty(2 * n, dtype=np.int64)
    cost = np.zeros(n_var)
    cost[h0 : h0 + n] = weights
    for i in range(n):
        r_h, r_s = 2 * i, 2 * i + 1
        xi, yi = x[i], y[i]
        if yi >= 0.0:
            tableau[r_h, :d] = xi
            tableau[r_h, d : 2 * d] = -xi
            tableau[r_h, h0 + i] = 1.0
            tableau[r_h, s10 + i] = -1.0
            tableau[r_h, -1] = yi
            tableau[r_s, :d] = 2.0 * xi
            tableau[r_s, d : 2 * d] = -2.0 * xi
            tableau[r_s, s10 + i] = -1.0
            tableau[r_s, s20 + i] = 1.0
            tableau[r_s, -1] = 2.0 * yi
            basis[r_h] = h0 + i
            basis[r_s] = s20 + i
        else:
            tableau[r_h, :d] = -2.0 * xi
            tableau[r_h, d : 2 * d] = 2.0 * xi
            tableau[r_h, s10 + i] = 1.0
            tableau[r_h, s20 + i] = -1.0
            tableau[r_h, -1] = -2.0 * yi
            tableau[r_s, :d] = -xi
            tableau[r_s, d : 2 * d] = xi
            tableau[r_s, h0 + i] = 1.0
            tableau[r_s, s20 + i] = -1.0
            tableau[r_s, -1] = -yi
            basis[r_h] = s10 + i
            basis[r_s] = h0 + i

    reduced = cost - cost[basis] @ tableau[:, :-1]
    tol = 1e-9
    for _ in range(max_pivots):
        candidates = np.nonzero(reduced < -tol)[0]
        if candidates.size == 0:
            break
        enter = int(candidates[0])  # Bland: lowest eligible index
        column = tableau[:, enter]
        rows = np.nonzero(column > tol)[0]
        if rows.size == 0:
            raise Unbounded("LAD epigraph LP cannot be unbounded with w >= 0")
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol * (1.0 + abs(best))]
        leave = int(tied[np.argmin(basis[tied])])  # Bland: lowest basis index
        pivot_row = tableau[leave] / column[leave]
        tableau -= np.outer(column, pivot_row)
        tableau[leave] = pivot_row
        reduced -= reduced[enter] * pivot_row[:-1]
        basis[leave] = enter
    else:
        raise IterationLimit(f"simplex exceeded {max_pivots} pivots")

    solution = np.zeros(n_var)
    solution[basis] = tableau[:, -1]
    beta = solution[:d] - solution[d : 2 * d]
    objective = float(np.dot(weights, solution[h0 : h0 + n]))
    return beta, objective
