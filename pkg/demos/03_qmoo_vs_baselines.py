"""Evaluations to reach 95% of the ideal hypervolume: QMOO against NSGA-II/III.

All three algorithms keep an unbounded Pareto archive and stop as soon as
the archive reaches the threshold, so the printed numbers are classical
function evaluations to threshold (medians over five seeds).

Run: python3 demos/03_qmoo_vs_baselines.py   (under a minute)
"""

import numpy as np

from rmnkq.analysis import exact_front, lower_median, normalize_trace
from rmnkq.evolutionary import GaConfig, nsga2_run, nsga3_run
from rmnkq.landscape import RmnkConfig, generate
from rmnkq.qmoo import QmooHyperparams, optimize

BUDGET = 100_000
results = {"qmoo": [], "nsga2": [], "nsga3": []}
for seed in range(5):
    landscape = generate(RmnkConfig(n_vars=12, n_objectives=3, epistasis=1, seed=seed))
    front = exact_front(landscape)
    target = 0.95 * front.hv_ideal
    traces = {
        "qmoo": optimize(landscape, QmooHyperparams(max_iterations=10**9, max_evaluations=BUDGET, seed=seed, stop_hv=target)),
        "nsga2": nsga2_run(landscape, GaConfig(population_size=20, max_evaluations=BUDGET, seed=seed, stop_hv=target)),
        "nsga3": nsga3_run(landscape, GaConfig(divisions_outer=12, max_evaluations=BUDGET, seed=seed, stop_hv=target)),
    }
    for name, trace in traces.items():
        nt = normalize_trace(trace, front)
        results[name].append(nt.first_fevals if nt.reached else np.inf)

for name, spent in results.items():
    print(f"{name:>6}: median evaluations to 0.95 = {lower_median(spent):g}  (runs: {spent})")
