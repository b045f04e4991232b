"""Block coordinate descent for the row-weighted group lasso.

Solves

    min_B  Tr{(Y - XB)'(Y - XB)} + lam * sum_j w_j ||b_j||_2

over p x q coefficient matrices B, where b_j is the j-th row and the
weights w_j come from linearizing a concave row penalty at the current
iterate.  Each block update has the closed form

    b_j <- (1 - lam*w_j / (2||g_j||))_+  g_j / s_j,
    g_j = x_j'(Y - X B_{-j}),  s_j = x_j'x_j,

which is the unique stationary point of the single-row subproblem.  A
solution is certified by the first-order conditions:

    b_j != 0:  2 x_j'(Y - XB) = lam w_j b_j / ||b_j||
    b_j  = 0:  ||x_j'(Y - XB)|| <= lam w_j / 2

The kernel runs a whole vector of penalty levels in one pass (the residual
block is laid out (n, L*q), so each row update is a single matrix-vector
product across all levels); :func:`bcd_solve` is the single-level case and
:func:`bcd_solve_path` exposes the batched form for cross-validation.
"""

import numpy as np


class SolverError(RuntimeError):
    """Raised when a solve cannot proceed (degenerate column, non-finite state)."""


class Dataset:
    """Design matrix X (n x p) and response matrix Y (n x q)."""

    def __init__(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("X and Y must be two-dimensional arrays")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1 or Y.shape[1] < 1:
            raise ValueError("X and Y must be nonempty")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if not np.all(np.isfinite(Y)):
            raise ValueError("Y contains non-finite entries")
        self.X = X
        self.Y = Y

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.Y.shape[1]

    def subset(self, idx):
        """Dataset restricted to the given row indices."""
        return Dataset(self.X[idx], self.Y[idx])


class SolverSettings:
    """Stopping parameters for the block coordinate descent loop."""

    def __init__(self, max_sweeps=1000, tol=1e-8, kkt_tol=1e-6):
        if max_sweeps < 1:
            raise ValueError("max_sweeps must be a positive integer")
        if tol <= 0 or kkt_tol <= 0:
            raise ValueError("tol and kkt_tol must be positive")
        self.max_sweeps = int(max_sweeps)
        self.tol = float(tol)
        self.kkt_tol = float(kkt_tol)

    def tightened(self, factor):
        """Same settings with both tolerances divided by ``factor``."""
        return SolverSettings(self.max_sweeps, self.tol / factor, self.kkt_tol / factor)


def row_support(B):
    """Indices of rows with nonzero Euclidean norm."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return np.flatnonzero(np.linalg.norm(B, axis=1) > 0)


def element_support(B):
    """Boolean mask of exactly nonzero entries."""
    return np.asarray(B) != 0


def _check_problem(data, weights, lam, B=None, allow_stack=False):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (data.p,):
        raise ValueError(f"weights must have shape ({data.p},), got {weights.shape}")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("weights must be finite and nonnegative")
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)) or np.any(lam < 0):
        raise ValueError("lam must be nonnegative and finite")
    if B is not None:
        B = np.asarray(B, dtype=float)
        good_shape = (B.shape == (data.p, data.q)
                      or (allow_stack and B.ndim == 3 and B.shape[1:] == (data.p, data.q)))
        if not good_shape:
            raise ValueError(f"coefficient matrix must have shape ({data.p}, {data.q}), "
                             f"got {B.shape}")
        if not np.all(np.isfinite(B)):
            raise ValueError("coefficient matrix contains non-finite entries")
    return weights, lam, B


def objective(data, B, weights, lam):
    """Weighted group-lasso objective ||Y - XB||_F^2 + lam * sum_j w_j ||b_j||."""
    weights, lam, B = _check_problem(data, weights, float(lam), B)
    R = data.Y - data.X @ B
    return float(np.sum(R * R) + lam * weights @ np.linalg.norm(B, axis=1))


def kkt_residual(data, B, weights, lam):
    """Per-row violation of the stationarity conditions at B.

    Nonzero rows: ||2 x_j'(Y-XB) - lam w_j b_j/||b_j|| ||_2.
    Zero rows:    (||x_j'(Y-XB)|| - lam w_j / 2)_+.
    """
    weights, lam, B = _check_problem(data, weights, float(lam), B)
    G = data.X.T @ (data.Y - data.X @ B)          # p x q
    return _kkt_from_gradient(G, B, weights, float(lam))


def _kkt_from_gradient(G, B, weights, lam):
    norms = np.sqrt(np.einsum("jk,jk->j", B, B))
    nz = norms > 0
    res = np.maximum(np.sqrt(np.einsum("jk,jk->j", G, G)) - 0.5 * lam * weights, 0.0)
    if np.any(nz):
        direction = B[nz] / norms[nz, None]
        stat = 2.0 * G[nz] - (lam * weights[nz])[:, None] * direction
        res[nz] = np.sqrt(np.einsum("jk,jk->j", stat, stat))
    return res


def _kkt_per_level(G3, B3, shrink):
    """Max row residual per level; G3, B3 are (p, L, q), shrink is (p, L)."""
    gn = np.sqrt(np.einsum("plq,plq->pl", G3, G3))
    bn = np.sqrt(np.einsum("plq,plq->pl", B3, B3))
    res = np.maximum(gn - 0.5 * shrink, 0.0)
    nz = bn > 0
    if np.any(nz):
        inv = np.divide(1.0, bn, out=np.zeros_like(bn), where=nz)
        stat = 2.0 * G3 - (shrink * inv)[:, :, None] * B3
        sn = np.sqrt(np.einsum("plq,plq->pl", stat, stat))
        res = np.where(nz, sn, res)
    return res.max(axis=0)


def _column_norms_squared(X):
    col_ss = np.einsum("ij,ij->j", X, X)
    dead = np.flatnonzero(col_ss == 0.0)
    if dead.size:
        raise SolverError(f"design column {dead[0]} is identically zero (s_j = 0)")
    return col_ss


def bcd_solve_path(data, weights, lambdas, init=None, settings=None):
    """Solve the weighted problem at every penalty level in one pass.

    All levels share the design and weights; each level keeps its own
    coefficient block, updated by the same cyclic sweeps until every level
    has a flat objective and a certified solution (or max_sweeps runs out).

    Parameters
    ----------
    data : Dataset
    weights : array (p,)
    lambdas : array (L,) of nonnegative levels.
    init : array (p, q) shared start, or (L, p, q) per-level starts.
    settings : SolverSettings

    Returns
    -------
    B : ndarray (L, p, q)
    traces : list of per-level objective traces (start plus one value per sweep).
    """
    if settings is None:
        settings = SolverSettings()
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    weights, lambdas, init = _check_problem(data, weights, lambdas, init,
                                            allow_stack=True)
    X, Y = data.X, data.Y
    n, p, q = data.n, data.p, data.q
    L = len(lambdas)
    col_ss = _column_norms_squared(X)
    cols = [np.ascontiguousarray(X[:, j]) for j in range(p)]

    # work arrays cover the active levels only; solved levels retire into
    # ``out`` and the remaining blocks are compacted
    act = np.arange(L)
    B = np.zeros((p, L, q))                        # level axis in the middle
    if init is not None:
        B[:] = init.transpose(1, 0, 2) if init.ndim == 3 else init[:, None, :]
    B2 = B.reshape(p, -1)
    Yb = np.repeat(Y[:, None, :], L, axis=1).reshape(n, L * q)
    R = Yb - X @ B2                                # (n, A*q), C-contiguous
    lam_w = lambdas.copy()
    shrink = lam_w[None, :] * weights[:, None]     # (p, A)
    out = np.empty((L, p, q))

    def objectives(n_act):
        resid = np.einsum("ab,ab->b", R, R).reshape(n_act, q).sum(axis=1)
        norms = np.sqrt(np.einsum("plq,plq->pl", B, B))
        return resid + lam_w * (weights @ norms)

    obj = objectives(L)
    traces = [[float(v)] for v in obj]

    for _ in range(settings.max_sweeps):
        A = len(act)
        changed = False
        for j in range(p):
            xj = cols[j]
            b_old = B[j]                           # (A, q) view
            g = (xj @ R).reshape(A, q)
            g += col_ss[j] * b_old
            gnorm = np.sqrt(np.einsum("lq,lq->l", g, g))
            inv = np.divide(1.0, gnorm, out=np.zeros(A), where=gnorm > 0)
            factor = np.maximum(1.0 - 0.5 * shrink[j] * inv, 0.0)
            b_new = (factor / col_ss[j])[:, None] * g
            delta = b_new - b_old
            if delta.any():
                R -= xj[:, None] * delta.reshape(A * q)[None, :]
                B[j] = b_new
                changed = True
        if changed:
            if not np.all(np.isfinite(B)):
                bad = int(np.flatnonzero(~np.isfinite(B).all(axis=(1, 2)))[0])
                raise SolverError(f"non-finite update in row {bad}")
            # full refresh keeps traces free of incremental drift
            np.subtract(Yb, X @ B2, out=R)
        prev = obj
        obj = objectives(A)
        for i, l in enumerate(act):
            traces[l].append(float(obj[i]))
        rel = np.abs(prev - obj) / np.maximum(1.0, np.abs(prev))
        ready = rel < settings.tol
        if np.any(ready):
            G3 = (X.T @ R).reshape(p, A, q)
            retire = ready & (_kkt_per_level(G3, B, shrink) <= settings.kkt_tol)
            if np.any(retire):
                for i in np.flatnonzero(retire):
                    out[act[i]] = B[:, i, :]
                keep = ~retire
                act = act[keep]
                if act.size == 0:
                    return out, traces
                B = np.ascontiguousarray(B[:, keep, :])
                B2 = B.reshape(p, -1)
                Yb = np.ascontiguousarray(
                    Yb.reshape(n, A, q)[:, keep, :]).reshape(n, -1)
                R = Yb - X @ B2
                lam_w = lam_w[keep]
                shrink = np.ascontiguousarray(shrink[:, keep])
                obj = obj[keep]
    for i, l in enumerate(act):
        out[l] = B[:, i, :]
    return out, traces


def bcd_solve(data, weights, lam, init=None, settings=None):
    """Run cyclic block coordinate descent at a single penalty level.

    Parameters
    ----------
    data : Dataset
    weights : array of shape (p,)
        Nonnegative row weights; a zero weight leaves the row unpenalized.
    lam : float
        Nonnegative penalty level.
    init : array (p, q), optional
        Starting matrix; zeros when omitted.  Starting from a reference
        iterate guarantees the returned objective does not exceed the
        objective at that iterate.
    settings : SolverSettings, optional

    Returns
    -------
    B : ndarray (p, q)
        Solution with exact zeros on thresholded rows.
    trace : list of float
        Objective value at the start and after each sweep; nonincreasing.

    Raises
    ------
    SolverError
        If a design column is identically zero or the iterate becomes
        non-finite (the offending row index is named).
    """
    stack, traces = bcd_solve_path(data, weights, float(lam), init=init,
                                   settings=settings)
    return stack[0], traces[0]
