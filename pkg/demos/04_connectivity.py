"""Bit-flip connectivity of exact Pareto sets.

For three objectives on twelve bits, counts how many pieces the exact
Pareto set splits into when only single-bit moves are allowed. Rugged
landscapes (large K) fragment the set, which is what makes them hard for
local search.

Run: python3 demos/04_connectivity.py
"""

from rmnkq.analysis import connectivity_sweep

grid = {"n_objectives": [2, 3], "n_vars": [12], "epistasis": [0, 1, "N/2", "N-1"], "rho": [0.0]}
for row in connectivity_sweep(grid, seeds=range(10)):
    print(f"M={row.n_objectives} K={row.epistasis:2d}: median components {row.median_components:5g}   per seed {row.counts}")
