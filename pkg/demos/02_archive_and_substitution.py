"""Why the archive and substitution matter.

Runs QMOO on one five-objective instance in all four combinations of
Pareto archive and dominated-solution substitution, then prints the
normalized hypervolume at the first and last iteration and the number of
classical evaluations spent. Without an archive the reported value is the
hypervolume of the current iteration's candidates, so it can drop.

Run: python3 demos/02_archive_and_substitution.py   (about a minute)
"""

import numpy as np

from rmnkq.analysis import exact_front, normalize_trace
from rmnkq.landscape import RmnkConfig, generate
from rmnkq.qmoo import QmooHyperparams, optimize

landscape = generate(RmnkConfig(n_vars=12, n_objectives=5, epistasis=0, seed=0))
front = exact_front(landscape)
print(f"exact Pareto front: {front.n_pf} solutions, HV_ideal = {front.hv_ideal:.4f}")
print(f"{'archive':>8} {'subst.':>7} {'HV0':>6} {'HV_end':>7} {'best':>6} {'evals':>6}")
for archive in (True, False):
    for substitution in (True, False):
        hp = QmooHyperparams(max_iterations=150, seed=1, use_archive=archive, use_substitution=substitution)
        trace = optimize(landscape, hp)
        nt = normalize_trace(trace, front)
        print(
            f"{archive!s:>8} {substitution!s:>7} {nt.hv_norm[0]:6.3f} {nt.hv_norm[-1]:7.3f}"
            f" {np.max(nt.hv_norm):6.3f} {trace.total_fevals:6d}"
        )
