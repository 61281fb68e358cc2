"""Rank-1 factorization of a solved lifted matrix into (input, coefficients).

The factorization is only determined up to a multiplicative scalar, so the
coefficient vector is pinned to unit 2-norm with its largest-magnitude entry
positive; all magnitude information lands in the input estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prox import thin_svd


@dataclass(frozen=True)
class FactoredModel:
    """Best rank-1 reading of the lifted matrix blocks.

    ``u_blocks[j] @ b.T`` is the best rank-1 approximation of block ``j``.
    ``rank_gap`` is ``sigma2 / sigma1`` of the stacked matrix; values near
    zero mean the solution is essentially rank one. ``scale_note`` records
    that (u, b) carry an unresolvable common scale.
    """

    u_blocks: tuple
    b: np.ndarray
    singular_values: np.ndarray
    rank_gap: float
    a: np.ndarray | None = None
    scale_note: str = "input and coefficients are determined up to a shared scalar"


def factor_rank1(X_blocks) -> FactoredModel:
    """Factor stacked blocks sharing one right factor.

    Blocks are stacked row-wise before the SVD, which is exact when they all
    share the right factor ``b``; the per-block inputs are then
    ``X_block @ b``.

    Raises
    ------
    ValueError
        If every block is zero (no identifiable component; the penalties or
        the noise bound drove the solution to zero).
    """
    blocks = [np.asarray(x, dtype=float) for x in X_blocks]
    if not blocks:
        raise ValueError("factor_rank1 needs at least one block")
    ncols = blocks[0].shape[1]
    if any(b.ndim != 2 or b.shape[1] != ncols for b in blocks):
        raise ValueError("all blocks must be 2-d with a common column count")
    stacked = np.vstack(blocks)
    dec = thin_svd(stacked)
    sigma = dec.singular_values
    if sigma[0] == 0.0:
        raise ValueError(
            "lifted matrix is identically zero: no identifiable component"
        )
    b = dec.right_vectors[:, 0].copy()
    u_blocks = tuple(block @ b for block in blocks)
    gap = float(sigma[1] / sigma[0]) if sigma.size > 1 else 0.0
    for u in u_blocks:
        u.setflags(write=False)
    b.setflags(write=False)
    return FactoredModel(
        u_blocks=u_blocks, b=b,
        singular_values=sigma, rank_gap=gap,
    )


def change_points(u, gamma: float = 0.0):
    """Indices ``i`` (1-based) where ``|u(i) - u(i+1)| > gamma``."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] < 2:
        raise ValueError("change_points needs a 1-d signal of length >= 2")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    deltas = np.abs(u[:-1] - u[1:])
    return [int(i) + 1 for i in np.nonzero(deltas > gamma)[0]]
