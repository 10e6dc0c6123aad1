"""
Observer certificate and boundedness conditions
===============================================

Checks the bundled two-state example: the observer LMI, the gains it
implies, and whether N = 4 cells per axis keep each scheme's range bounded.
"""
import numpy as np

from reachquant import derive_gains, make_bound_functions, verify_certificate
from reachquant.config import example_config
from reachquant.schemes import SchemeKind, compare_schemes, min_feasible_N

cfg = example_config()
plant, cert = cfg.plant(), cfg.certificate()

report = verify_certificate(plant, cert)
print(report)

gains = derive_gains(cert, plant)
fns = make_bound_functions(cert, gains, plant, cfg.bounds())
print("K =", np.round(gains.K.ravel(), 4), " decay rate", round(gains.lambda_e, 4))
print("local error envelope at t = 0, 1, 5 s:",
      np.round(fns.beta_d(np.array([0.0, 1.0, 5.0])), 4))

# both conditions read lhs < 1; the set-based lhs is never the larger one
set_rep, norm_rep = compare_schemes(plant.A, cfg.T, cfg.N)
print(set_rep)
print(norm_rep)

for T in (0.1, 0.3, 0.6, 1.0):
    print(f"T={T:<4} fewest cells per axis: set {min_feasible_N(plant.A, T, SchemeKind.SET_BASED)}, "
          f"norm {min_feasible_N(plant.A, T, SchemeKind.NORM_BASED)}")
