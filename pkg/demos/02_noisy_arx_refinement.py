"""Identify a first-order ARX system from noisy outputs, then remove bias.

The same piecewise input as the FIR demo now drives a system with one
autoregressive pole, and uniform noise in [-2, 2] corrupts every sample.
A large penalty weight pushes the solution toward few input changes; the
shrinkage it causes is then removed by re-solving with the change pattern
frozen (penalty weight zero, small differences pinned to exact zero).
"""

import numpy as np

from bilarx import SolverOptions, change_points, refine_pipeline, scenario, solve_bil

sc = scenario("scenario_arx_noisy")
print("true a:", sc.truth.a, " true b:", sc.truth.b)
print("true change points:", sc.truth.change_points[0])
print()

opts = SolverOptions(max_iters=30000)
sol = solve_bil(sc.spec, 1e7, opts)
print("-- lifted solve at penalty 1e7, noise bound 2 --")
print(f"two largest singular values: {np.round(sol.singular_values[:2], 2)}")
print(f"rank gap: {sol.rank_gap:.3f}")
print(f"change points of the raw estimate (threshold 0.5): "
      f"{change_points(sol.u_est[0], 0.5)}")
print()

refined = refine_pipeline(sc.spec, sol, gamma=0.5, options=opts)
print("-- refinement: freeze differences below 0.5, penalty off --")
print(f"two largest singular values: {np.round(refined.singular_values[:2], 2)}")
print(f"rank gap: {refined.rank_gap:.3f} (was {sol.rank_gap:.3f})")
print(f"recovered change points: {change_points(refined.u_est[0], 0.5)}")
print(f"a estimate: {refined.a_est[0]:+.4f}  (true {sc.truth.a[0]})")
b_unit = sc.truth.b / np.linalg.norm(sc.truth.b)
print(f"cosine(b_est, b_true): {abs(float(refined.b_est @ b_unit)):.4f}")
print()
print("note: the refined b still deviates slightly from the truth; the data")
print("constraints cannot see constant-row shifts of the lifted matrix with")
print("zero row sum, so part of the input offset is absorbed elsewhere. That")
print("is a property of the convex program's optimum, not of this solver.")
