"""Independent oracle: exact minimum of the weighted group-lasso objective
over a Cartesian coefficient grid.

The objective, with G = X'X, C = X'Y and const = ||Y||_F^2, is

    f(B) = const + sum_j [G_jj ||b_j||^2 - 2 <C_j, b_j> + lam w_j ||b_j||]
                 + 2 * sum_{i<j} G_ij <b_i, b_j>

For p = 1 the grid is enumerated directly.  For p = 2 direct enumeration of
(grid^q)^2 pairs is far too large at fine steps, so the oracle computes the
same minimum exactly by bound-and-prune:

* For fixed b1 the continuum partial minimum over b2 has the closed form
  m(u) = -((||u|| - lam w2 / 2)_+)^2 / G22 with u = C_2 - G12 b1, giving a
  lower bound LB(b1) = A(b1) + m(u) for the best value in b1's column.
* An aligned coarse subgrid supplies an upper bound f_ub on the grid
  minimum (every coarse point is a fine grid point).
* Columns with LB > f_ub cannot contain the minimizer.  Inside a surviving
  column, h_u(b2) >= m(u) + G22 ||b2 - b2*(u)||^2 (strong convexity), so
  only fine points within the implied ball need evaluation.

Every skipped point is proven strictly worse than the running upper bound,
so the result equals full enumeration; ``naive_grid_min`` re-derives it by
brute force on coarse grids for validation.
"""

import numpy as np


def axis_points(lo, hi, step):
    n = int(round((hi - lo) / step))
    if abs(lo + n * step - hi) > 1e-9:
        raise ValueError("grid range must be an integer number of steps")
    return lo + step * np.arange(n + 1)


def _grid_points(axis, q):
    """All points of axis^q as an (len(axis)^q, q) array, C-ordered."""
    mesh = np.meshgrid(*([axis] * q), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _row_terms(P, g_diag, c_row, lam_w):
    """G_jj ||b||^2 - 2 <C_j, b> + lam w_j ||b|| for every grid point."""
    sq = np.einsum("ij,ij->i", P, P)
    return g_diag * sq - 2.0 * (P @ c_row) + lam_w * np.sqrt(sq)


def grid_min_objective(X, Y, weights, lam, step=0.01, lo=-3.0, hi=3.0,
                       coarse_stride=10):
    """Exact min of ||Y - XB||_F^2 + lam sum_j w_j ||b_j|| over the grid.

    Supports p in {1, 2} and any small q (intended for q <= 2).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    p = X.shape[1]
    q = Y.shape[1]
    if p not in (1, 2):
        raise ValueError("oracle supports p = 1 or p = 2 only")
    G = X.T @ X
    C = X.T @ Y
    const = float(np.sum(Y * Y))
    axis = axis_points(lo, hi, step)
    P = _grid_points(axis, q)

    if p == 1:
        vals = _row_terms(P, G[0, 0], C[0], lam * weights[0])
        return const + float(np.min(vals))

    g11, g22, g12 = G[0, 0], G[1, 1], G[0, 1]
    A = _row_terms(P, g11, C[0], lam * weights[0])
    B2 = _row_terms(P, g22, C[1], lam * weights[1])

    # upper bound from an aligned coarse subgrid (subset of the fine grid)
    n_axis = len(axis)
    stride = coarse_stride if (n_axis - 1) % coarse_stride == 0 else 1
    coarse_rows = _subgrid_rows(n_axis, q, stride)
    Pc = P[coarse_rows]
    cross = 2.0 * g12 * (Pc @ Pc.T)
    f_ub = float(np.min(A[coarse_rows][:, None] + B2[coarse_rows][None, :] + cross))

    # continuum partial minimization over b2 gives a lower bound per b1
    U = C[1][None, :] - g12 * P                    # (M, q)
    unorm = np.linalg.norm(U, axis=1)
    slack_shift = np.maximum(unorm - 0.5 * lam * weights[1], 0.0)
    LB = A - slack_shift ** 2 / g22

    slack = 1e-9 * (1.0 + abs(f_ub))
    order = np.argsort(LB)
    pad = step * np.sqrt(q) + 1e-12
    for i in order:
        if LB[i] > f_ub + slack:
            break  # sorted: everything after is pruned too
        u = U[i]
        nu = unorm[i]
        scale = max(0.0, 1.0 - 0.5 * lam * weights[1] / nu) if nu > 0 else 0.0
        center = (scale / g22) * u
        radius = np.sqrt(max(f_ub + slack - LB[i], 0.0) / g22) + pad
        cand = _ball_candidates(axis, center, radius, q)
        if cand is None:
            cand = P  # ball larger than the grid: evaluate the whole column
        if cand.size == 0:
            continue
        h = (g22 * np.einsum("ij,ij->i", cand, cand)
             + lam * weights[1] * np.linalg.norm(cand, axis=1)
             - 2.0 * (cand @ u))
        val = A[i] + float(np.min(h))
        if val < f_ub:
            f_ub = val
    return const + f_ub


def _subgrid_rows(n_axis, q, stride):
    """Row indices of the aligned coarse subgrid inside the C-ordered fine grid."""
    idx = np.arange(0, n_axis, stride)
    mesh = np.meshgrid(*([idx] * q), indexing="ij")
    flat = np.zeros_like(mesh[0].ravel())
    for m in mesh:
        flat = flat * n_axis + m.ravel()
    return flat


def _ball_candidates(axis, center, radius, q):
    """Fine grid points of the box circumscribing the ball, or None if huge."""
    lo, step = axis[0], axis[1] - axis[0]
    n_axis = len(axis)
    ranges = []
    total = 1
    for d in range(q):
        a = int(np.floor((center[d] - radius - lo) / step))
        b = int(np.ceil((center[d] + radius - lo) / step))
        a, b = max(a, 0), min(b, n_axis - 1)
        if a > b:
            return np.empty((0, q))
        ranges.append(axis[a:b + 1])
        total *= b - a + 1
    if total > 2_000_000:
        return None
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def naive_grid_min(X, Y, weights, lam, step, lo, hi):
    """Full enumeration of the same minimum; only usable on coarse grids."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    p = X.shape[1]
    q = Y.shape[1]
    G = X.T @ X
    C = X.T @ Y
    const = float(np.sum(Y * Y))
    axis = axis_points(lo, hi, step)
    P = _grid_points(axis, q)
    if p == 1:
        return const + float(np.min(_row_terms(P, G[0, 0], C[0], lam * weights[0])))
    if p != 2:
        raise ValueError("naive oracle supports p <= 2")
    A = _row_terms(P, G[0, 0], C[0], lam * weights[0])
    B2 = _row_terms(P, G[1, 1], C[1], lam * weights[1])
    best = np.inf
    chunk = 4096
    for start in range(0, len(P), chunk):
        stop = min(start + chunk, len(P))
        vals = (A[start:stop, None] + B2[None, :]
                + 2.0 * G[0, 1] * (P[start:stop] @ P.T))
        best = min(best, float(np.min(vals)))
    return const + best
