"""Uniqueness analysis: restricted-isometry constants and a brute-force oracle.

The restricted isometry here is taken over matrices whose consecutive
row-difference support is small, with the first and last differences pinned
to zero. On each admissible support pattern the matrices with that
difference structure form a linear subspace, so the isometry constant is
computed exactly: restrict the operator to an orthonormal basis of the
subspace and read off the extreme singular values. No sampling is involved.

The brute-force solver enumerates the same difference-support patterns and
solves the data constraints exactly on each one, which makes it an
independent ground-truth oracle for small instances: it certifies whether a
piecewise-constant, rank-one solution is unique, and finds all of them when
it is not.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .problem import ProblemSpec, build_lifted_operator


@dataclass(frozen=True)
class MatrixOperator:
    """Linear map from ``n1 x n2`` matrices to vectors, stored densely.

    ``matrix`` has shape ``(n3, n1 * n2)`` and acts on the row-major
    vectorization of its argument.
    """

    matrix: np.ndarray
    n1: int
    n2: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] != self.n1 * self.n2:
            raise ValueError(
                f"operator matrix must have {self.n1 * self.n2} columns, "
                f"got shape {m.shape}"
            )
        object.__setattr__(self, "matrix", m)

    def apply(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.shape != (self.n1, self.n2):
            raise ValueError(f"expected {self.n1} x {self.n2} matrix, got {Z.shape}")
        return self.matrix @ Z.ravel()


@dataclass(frozen=True)
class RipReport:
    """Isometry constant at one sparsity level plus the uniqueness verdict.

    ``certified_unique`` is evaluated at level ``2k``: it is True exactly
    when the constant at ``2k`` is below one.
    """

    k: int
    rip_epsilon: float
    patterns_checked: int
    certified_unique: bool


def operator_from_problem(spec: ProblemSpec) -> MatrixOperator:
    """The measurement map of a single-sequence FIR instance.

    Only instances with ``n_a = 0`` define a pure matrix-space operator (the
    autoregressive coefficients would add non-matrix unknowns), and the
    row-difference structure is only meaningful inside one sequence.
    """
    if len(spec.sequences) != 1:
        raise ValueError("matrix-space operator requires a single sequence")
    if spec.orders.n_a != 0:
        raise ValueError("matrix-space operator requires n_a = 0")
    op = build_lifted_operator(spec)
    return MatrixOperator(
        matrix=op.matrix, n1=len(spec.sequences[0]), n2=spec.orders.n_b
    )


def _interior_indices(n1: int):
    """Difference indices free to change once the boundary rows are pinned."""
    return range(2, n1 - 1)


def _count_patterns(n_indices: int, sizes) -> int:
    return sum(math.comb(n_indices, s) for s in sizes)


def _segment_basis(n1: int, n2: int, pattern) -> np.ndarray:
    """Orthonormal basis of {Z : row differences supported within pattern}.

    Rows between consecutive allowed change indices are equal, so the
    subspace is spanned by (segment indicator / sqrt(length)) x (unit
    column), giving dimension (len(pattern) + 1) * n2.
    """
    bounds = [0] + [int(i) for i in pattern] + [n1]
    cols = []
    for lo, hi in zip(bounds, bounds[1:]):
        seg = np.zeros(n1)
        seg[lo:hi] = 1.0 / np.sqrt(hi - lo)
        for c in range(n2):
            E = np.zeros((n1, n2))
            E[:, c] = seg
            cols.append(E.ravel())
    return np.column_stack(cols)


def rip_constant(operator: MatrixOperator, k: int, budget: int = 100_000) -> float:
    """Smallest constant for the restricted isometry at sparsity ``k``.

    Enumerates every difference-support pattern of 1..k interior indices,
    restricts the operator to an orthonormal subspace basis, and takes the
    worst deviation ``max(sigma_max^2 - 1, 1 - sigma_min^2)`` over all
    patterns.
    """
    if k <= 0:
        raise ValueError(f"sparsity level k must be positive, got {k}")
    n1 = operator.n1
    if n1 < 4:
        raise ValueError(f"need n1 >= 4 to pin the boundary differences, got {n1}")
    indices = list(_interior_indices(n1))
    sizes = range(1, min(k, len(indices)) + 1)
    total = _count_patterns(len(indices), sizes)
    if total > budget:
        raise ValueError(
            f"pattern enumeration needs {total} patterns, over the budget {budget}"
        )

    worst = 0.0
    for size in sizes:
        for pattern in itertools.combinations(indices, size):
            basis = _segment_basis(n1, operator.n2, pattern)
            restricted = operator.matrix @ basis
            sigma = np.linalg.svd(restricted, compute_uv=False)
            smax = float(sigma[0])
            smin = float(sigma[-1]) if restricted.shape[0] >= basis.shape[1] else 0.0
            worst = max(worst, smax * smax - 1.0, 1.0 - smin * smin)
    return worst


def rip_patterns_checked(operator: MatrixOperator, k: int) -> int:
    """How many patterns :func:`rip_constant` would enumerate at level ``k``."""
    indices = list(_interior_indices(operator.n1))
    return _count_patterns(len(indices), range(1, min(k, len(indices)) + 1))


def certify_uniqueness(operator: MatrixOperator, k: int,
                       budget: int = 100_000) -> bool:
    """True when the isometry constant at level ``2k`` is below one.

    In that regime a solution with at most ``k`` difference changes (and
    pinned boundary differences) is the only one: two distinct solutions
    would differ by a matrix the operator annihilates, yet that difference
    has at most ``2k`` changes and the isometry bound keeps its image away
    from zero.
    """
    return rip_constant(operator, 2 * k, budget=budget) < 1.0


def rip_report(operator: MatrixOperator, k: int, budget: int = 100_000) -> RipReport:
    """Bundle the constant at ``k`` with the uniqueness verdict at ``2k``."""
    eps = rip_constant(operator, k, budget=budget)
    certified = certify_uniqueness(operator, k, budget=budget)
    return RipReport(
        k=k, rip_epsilon=eps,
        patterns_checked=rip_patterns_checked(operator, k),
        certified_unique=certified,
    )


@dataclass(frozen=True)
class BruteForceSolution:
    """One exact solution found by pattern enumeration.

    ``X`` is the lifted matrix, ``a`` the autoregressive coefficients (empty
    for pure operator problems), ``change_count`` the number of nonzero
    difference rows actually present, ``pattern`` the support that produced
    it.
    """

    X: np.ndarray
    a: np.ndarray
    change_count: int
    pattern: tuple


@dataclass(frozen=True)
class BruteForceResult:
    solutions: tuple
    patterns_checked: int
    ambiguous_patterns: tuple

    @property
    def num_solutions(self) -> int:
        return len(self.solutions)


def _lstsq_with_null(A, rhs):
    """Min-norm least-squares solution and an orthonormal null-space basis."""
    u, sigma, vt = np.linalg.svd(A, full_matrices=True)
    if sigma.size:
        cutoff = sigma[0] * max(A.shape) * np.finfo(float).eps
    else:
        cutoff = 0.0
    rank = int(np.sum(sigma > cutoff))
    coef = vt[:rank].T @ ((u[:, :rank].T @ rhs) / sigma[:rank])
    null = vt[rank:].T
    return coef, null


def _chebyshev_point(A, rhs, eps, tol):
    """A point of {c : ||A c - rhs||_inf <= eps} or None (linear program)."""
    from scipy.optimize import linprog

    nrows, ncols = A.shape
    c = np.zeros(ncols + 1)
    c[-1] = 1.0
    A_ub = np.block([[A, -np.ones((nrows, 1))], [-A, -np.ones((nrows, 1))]])
    b_ub = np.concatenate([rhs, -rhs])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (ncols + 1),
                  method="highs")
    if res.success and res.x[-1] <= eps + tol:
        return res.x[:-1]
    return None


def _rank_one_in_line(C0, C1, tol):
    """Parameters t where ``C0 + t C1`` has rank <= 1, or None for "all t".

    Every 2x2 minor of the segment-level matrix must vanish; each minor is a
    quadratic in t, so candidates are common roots across row pairs. Returns
    a list of parameters (possibly empty) or None when the whole line is
    rank-deficient (no pair constrains t).
    """
    nseg = C0.shape[0]
    polys = []
    for i in range(nseg - 1):
        for j in range(i + 1, nseg):
            q2 = C1[i, 0] * C1[j, 1] - C1[i, 1] * C1[j, 0]
            q1 = (C0[i, 0] * C1[j, 1] + C1[i, 0] * C0[j, 1]
                  - C0[i, 1] * C1[j, 0] - C1[i, 1] * C0[j, 0])
            q0 = C0[i, 0] * C0[j, 1] - C0[i, 1] * C0[j, 0]
            polys.append((q2, q1, q0))
    live = [p for p in polys if max(abs(v) for v in p) > tol]
    if not live:
        return None
    q2, q1, q0 = live[0]
    roots = np.roots([q2, q1, q0]) if abs(q2) > tol else (
        np.array([-q0 / q1]) if abs(q1) > tol else np.array([])
    )
    out = []
    for r in roots:
        if abs(np.imag(r)) > 1e-8 * (1.0 + abs(r)):
            continue
        t = float(np.real(r))
        scale = 1.0 + abs(t) + abs(t) * abs(t)
        if all(abs(p2 * t * t + p1 * t + p0) <= 1e-6 * scale * (1.0 + max(map(abs, (p2, p1, p0))))
               for p2, p1, p0 in polys):
            out.append(t)
    return out


def _actual_changes(X, tol):
    diffs = X[:-1] - X[1:]
    norms = np.sqrt(np.sum(diffs * diffs, axis=1))
    return [int(i) + 1 for i in np.nonzero(norms > tol)[0]]


def brute_force_solve(problem, k_max: int, rhs=None, epsilon: float | None = None,
                      budget: int = 20_000, require_rank_one: bool = True,
                      interior_only: bool | None = None) -> BruteForceResult:
    """Enumerate all piecewise-row-constant solutions with few changes.

    ``problem`` is either a :class:`ProblemSpec` (single sequence; the
    autoregressive coefficients are solved jointly and the noise bound comes
    from the spec) or a :class:`MatrixOperator` together with ``rhs`` (and
    optional ``epsilon``, default exact).

    For a spec, patterns range over all difference indices including the
    empty pattern (a constant input is admissible); for an operator the
    boundary differences are pinned and at least one change is required,
    matching the uniqueness analysis. ``interior_only`` overrides either
    default.

    Exact data: each pattern system is solved exactly. A one-dimensional
    solution family (the generic case for these operators, whose null space
    contains constant-row matrices with zero-sum rows) is resolved
    analytically: the parameters where the family crosses the rank-one
    variety are roots of quadratic minor conditions. Families that stay
    rank-deficient for every parameter, or of dimension two and higher, are
    reported in ``ambiguous_patterns`` instead of enumerated.

    Slack data (eps > 0): the solution set is a polyhedron, so the search
    degrades to a feasibility probe returning one distinguished witness per
    pattern (the zero point if feasible, else the min-norm least-squares
    point, else a Chebyshev point from a linear program), rank-filtered.

    Returns every distinct solution with the minimal change count found;
    ``require_rank_one`` filters out higher-rank candidates first (with
    exact data and a solution family it must stay on: an affine family is
    only finite after intersecting the rank-one variety).
    """
    if k_max < 0:
        raise ValueError(f"k_max must be non-negative, got {k_max}")
    if isinstance(problem, ProblemSpec):
        if len(problem.sequences) != 1:
            raise ValueError("brute force handles single-sequence instances")
        op = build_lifted_operator(problem)
        n1 = len(problem.sequences[0])
        n2 = problem.orders.n_b
        a_cols = op.matrix[:, n1 * n2 :]
        x_matrix = op.matrix[:, : n1 * n2]
        rhs_vec = op.rhs
        eps = problem.epsilon if epsilon is None else float(epsilon)
        if interior_only is None:
            interior_only = False
    elif isinstance(problem, MatrixOperator):
        if rhs is None:
            raise ValueError("rhs is required with a MatrixOperator")
        n1, n2 = problem.n1, problem.n2
        x_matrix = problem.matrix
        a_cols = np.zeros((x_matrix.shape[0], 0))
        rhs_vec = np.asarray(rhs, dtype=float)
        eps = 0.0 if epsilon is None else float(epsilon)
        if interior_only is None:
            interior_only = True
    else:
        raise TypeError(f"unsupported problem type {type(problem)!r}")

    if interior_only:
        indices = list(_interior_indices(n1))
        sizes = range(1, min(k_max, len(indices)) + 1)
    else:
        indices = list(range(1, n1))
        sizes = range(0, min(k_max, len(indices)) + 1)
    total = _count_patterns(len(indices), sizes)
    if total > budget:
        raise ValueError(
            f"pattern enumeration needs {total} patterns, over the budget {budget}"
        )

    scale = 1.0 + float(np.max(np.abs(rhs_vec))) if rhs_vec.size else 1.0
    tol = 1e-9 * scale
    n_a = a_cols.shape[1]

    found = []
    ambiguous = []
    patterns_checked = 0
    for size in sizes:
        for pattern in itertools.combinations(indices, size):
            patterns_checked += 1
            basis = _segment_basis(n1, n2, pattern)
            A = np.hstack([x_matrix @ basis, a_cols])
            d_x = basis.shape[1]

            candidates = []
            if eps == 0.0:
                coef0, null = _lstsq_with_null(A, rhs_vec)
                if np.max(np.abs(A @ coef0 - rhs_vec)) > tol:
                    continue
                q = null.shape[1]
                if q == 0:
                    candidates.append(coef0)
                elif q == 1 and require_rank_one and n2 <= 2:
                    direction = null[:, 0]
                    C1 = direction[:d_x].reshape(-1, n2)
                    if np.max(np.abs(C1)) <= tol:
                        # Family moves only the autoregressive part.
                        ambiguous.append(tuple(pattern))
                        continue
                    if n2 == 1:
                        ambiguous.append(tuple(pattern))
                        continue
                    C0 = coef0[:d_x].reshape(-1, n2)
                    ts = _rank_one_in_line(C0, C1, tol)
                    if ts is None:
                        ambiguous.append(tuple(pattern))
                        continue
                    candidates.extend(coef0 + t * direction for t in ts)
                else:
                    ambiguous.append(tuple(pattern))
                    continue
            else:
                if np.max(np.abs(rhs_vec)) <= eps + tol:
                    candidates.append(np.zeros(A.shape[1]))
                else:
                    coef0, _ = _lstsq_with_null(A, rhs_vec)
                    if np.max(np.abs(A @ coef0 - rhs_vec)) <= eps + tol:
                        candidates.append(coef0)
                    else:
                        point = _chebyshev_point(A, rhs_vec, eps, tol)
                        if point is not None:
                            candidates.append(point)

            for coef in candidates:
                X = (basis @ coef[:d_x]).reshape(n1, n2)
                a = coef[d_x:]
                sigma = np.linalg.svd(X, compute_uv=False)
                if require_rank_one and sigma.size > 1:
                    if sigma[1] > 1e-6 * max(sigma[0], 1.0):
                        continue
                x_scale = 1.0 + float(np.max(np.abs(X)))
                changes = _actual_changes(X, 1e-7 * x_scale)
                duplicate = any(
                    np.max(np.abs(X - s.X)) <= 1e-6 * x_scale
                    and (n_a == 0 or np.max(np.abs(a - s.a)) <= 1e-6)
                    for s in found
                )
                if not duplicate:
                    found.append(BruteForceSolution(
                        X=X, a=a, change_count=len(changes),
                        pattern=tuple(pattern),
                    ))

    if found:
        least = min(s.change_count for s in found)
        found = [s for s in found if s.change_count == least]
    return BruteForceResult(
        solutions=tuple(found),
        patterns_checked=patterns_checked,
        ambiguous_patterns=tuple(ambiguous),
    )
