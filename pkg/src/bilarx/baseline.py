"""Naive two-step identification: segment the output, then least squares.

This is the comparison method: fit a piecewise-constant signal directly to
the measured output (exact dynamic-programming segmentation under a segment
budget), reuse that signal as the input estimate, and solve ordinary least
squares for the ARX coefficients. It ignores the system dynamics when
placing change points, which is exactly why it degrades on non-FIR systems.
"""

from __future__ import annotations

import numpy as np

from .problem import ArxOrders, ProblemSpec


def fit_piecewise_constant(y, max_segments: int):
    """Best piecewise-constant fit to ``y`` with at most ``max_segments`` pieces.

    Exact squared-error segmentation by dynamic programming; each segment
    takes the mean of its samples. Returns ``(u_hat, change_points)`` with
    1-based change points (last index of each segment but the final one).
    """
    y = np.asarray(y, dtype=float)
    N = y.shape[0]
    if max_segments < 1:
        raise ValueError(f"max_segments must be >= 1, got {max_segments}")
    if max_segments > N:
        max_segments = N

    # cost[i][j] = SSE of fitting one mean to y[i:j] (half-open, 0-based).
    csum = np.concatenate(([0.0], np.cumsum(y)))
    csum2 = np.concatenate(([0.0], np.cumsum(y * y)))

    def seg_cost(i, j):
        s = csum[j] - csum[i]
        q = csum2[j] - csum2[i]
        return q - s * s / (j - i)

    # best[k][j]: optimal SSE for y[0:j] with exactly k+1 segments.
    best = np.full((max_segments, N + 1), np.inf)
    split = np.zeros((max_segments, N + 1), dtype=int)
    for j in range(1, N + 1):
        best[0, j] = seg_cost(0, j)
    for k in range(1, max_segments):
        for j in range(k + 1, N + 1):
            costs = [best[k - 1, m] + seg_cost(m, j) for m in range(k, j)]
            m_best = int(np.argmin(costs))
            best[k, j] = costs[m_best]
            split[k, j] = m_best + k

    # Smallest segment count achieving the optimal cost (ties go to fewer).
    totals = best[:, N]
    k_opt = int(np.argmin(totals + 1e-12 * np.arange(max_segments)))
    boundaries = [N]
    k, j = k_opt, N
    while k > 0:
        j = split[k, j]
        boundaries.append(j)
        k -= 1
    boundaries.append(0)
    boundaries.reverse()

    u_hat = np.empty(N)
    for lo, hi in zip(boundaries, boundaries[1:]):
        u_hat[lo:hi] = np.mean(y[lo:hi])
    cps = [b for b in boundaries[1:-1]]
    return u_hat, cps


def least_squares_arx(y, u, orders: ArxOrders):
    """Least-squares ARX fit given both signals.

    Minimizes the summed equation errors over ``t = n..N``; rejects
    rank-deficient regressor matrices (a constant-zero input is the usual
    culprit).
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if y.shape != u.shape:
        raise ValueError(f"y and u must have equal length, got {y.shape} vs {u.shape}")
    phi, target = _regressors(y, u, orders)
    return _solve_ls(phi, target, orders)


def _regressors(y, u, orders: ArxOrders):
    n = orders.n
    N = y.shape[0]
    if N < n:
        raise ValueError(f"need at least n = {n} samples, got {N}")
    rows = N - n + 1
    phi = np.empty((rows, orders.n_b + orders.n_a))
    for idx, t in enumerate(range(n, N + 1)):
        for k1 in range(1, orders.n_b + 1):
            phi[idx, k1 - 1] = u[t - orders.n_k - k1 - 1]
        for k2 in range(1, orders.n_a + 1):
            phi[idx, orders.n_b + k2 - 1] = y[t - k2 - 1]
    return phi, y[n - 1 :]


def _solve_ls(phi, target, orders: ArxOrders):
    ncols = phi.shape[1]
    coef, _, rank, _ = np.linalg.lstsq(phi, target, rcond=None)
    if rank < ncols:
        raise ValueError(
            f"regressor matrix is rank deficient ({rank} < {ncols}); "
            "the input does not excite all coefficients"
        )
    b_est = coef[: orders.n_b]
    a_est = coef[orders.n_b :]
    return a_est, b_est


def naive_identify(spec: ProblemSpec, max_segments: int):
    """Two-step baseline on a full problem instance.

    Segments each output sequence, shifts the fitted signal onto the input
    time axis by the pure delay ``n_k + 1`` (the first lag at which the
    input can reach the output; the tail is padded with the last level), and
    fits one shared ``(a, b)`` by stacking the least-squares rows of every
    sequence. No deconvolution is attempted, so change points inherit
    whatever smearing the system response left in the output. Returns
    ``(a_est, b_est, u_hats)``.
    """
    shift = spec.orders.n_k + 1
    u_hats = []
    phis, targets = [], []
    for seq in spec.sequences:
        u_fit, _ = fit_piecewise_constant(seq.samples, max_segments)
        u_hat = np.concatenate([u_fit[shift:], np.full(shift, u_fit[-1])])
        u_hats.append(u_hat)
        phi, target = _regressors(seq.samples, u_hat, spec.orders)
        phis.append(phi)
        targets.append(target)
    a_est, b_est = _solve_ls(np.vstack(phis), np.concatenate(targets), spec.orders)
    return a_est, b_est, tuple(u_hats)
