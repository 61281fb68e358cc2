"""Why not just segment the output and run least squares?

The naive two-step method fits a piecewise-constant signal to the measured
output, shifts it onto the input axis by the pure delay, and estimates the
coefficients by least squares. On noise-free FIR data this is serviceable.
Once dynamics and noise enter, the output steps are smeared and delayed, the
segmentation places change points where the output moved rather than where
the input did, and the least-squares fit inherits those errors. The lifted
convex program locates the changes through the model instead.
"""

import numpy as np

from bilarx import (
    SolverOptions,
    change_points,
    naive_identify,
    refine_pipeline,
    scenario,
    solve_bil,
)


def hamming(est, truth):
    return len(set(est) ^ set(truth))


opts = SolverOptions(max_iters=6000)
print("scenario_arx_noisy across ten noise seeds, change-point accuracy")
print("(set difference size vs the planted change points; 0 is exact)")
print()
print("seed   lifted+refined   naive 2-step")
total = [0, 0]
for seed in range(1, 11):
    sc = scenario("scenario_arx_noisy", seed=seed)
    truth = list(sc.truth.change_points[0])
    refined = refine_pipeline(sc.spec, solve_bil(sc.spec, 1e7, opts), 0.5, opts)
    ham_lift = hamming(change_points(refined.u_est[0], 0.5), truth)
    _, _, u_hats = naive_identify(sc.spec, 4)
    ham_naive = hamming(change_points(u_hats[0], 0.5), truth)
    total[0] += ham_lift
    total[1] += ham_naive
    print(f"{seed:4d}   {ham_lift:14d}   {ham_naive:12d}")
print(f" sum   {total[0]:14d}   {total[1]:12d}")
