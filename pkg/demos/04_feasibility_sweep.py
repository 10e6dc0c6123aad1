"""
Feasibility over a (T, N) grid
==============================

Prints which cells of the grid each scheme can handle. Wherever the norm
scheme is feasible the set scheme is too; the converse fails for long T.
"""
import numpy as np

from reachquant.config import example_config
from reachquant.schemes import compare_schemes

A = np.array(example_config().A)
Ts = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8]
Ns = [2, 3, 4, 8, 16, 32, 64]

print("S = both feasible, s = set only, . = neither")
print("T \\ N " + "".join(f"{N:>4}" for N in Ns))
for T in Ts:
    row = ""
    for N in Ns:
        s, n = compare_schemes(A, T, N)
        row += f"{'S' if n.feasible else ('s' if s.feasible else '.'):>4}"
    print(f"{T:<6}" + row)
