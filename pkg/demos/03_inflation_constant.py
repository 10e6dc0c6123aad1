"""
Which inflation constant reaches the reference error levels
==========================================================

The range update adds a cube of radius c (u_b + |KH| beta_d(t_k)) with
c = exp(|A|T)/|A| by default. The exact integral of exp(|A|s) over [0, T]
gives the smaller c = (exp(|A|T) - 1)/|A|. With it the steady ranges shrink by
(1 - exp(-|A|T)) and the errors land on the reference 0.0571 / 0.0684, at
the cost of the estimate briefly leaving the region between transmissions.
"""
import numpy as np

from reachquant import run_closed_loop, steady_state_metrics
from reachquant.config import example_config
from reachquant.schemes import SchemeKind

cfg = example_config()

print(f"{'scheme':>6} {'inflation':>10} {'e_q':>7} {'e_r':>7} {'L/N':>7}  in region")
for scheme in SchemeKind:
    for inflation in ("conservative", "integral"):
        tr = run_closed_loop(cfg.plant(), cfg.bounds(), cfg.certificate(), cfg.quantizer(),
                             scheme, cfg.signals(), cfg.horizon, cfg.dt, seed=0, T=cfg.T,
                             x0=cfg.initial_state(), inflation=inflation)
        m = steady_state_metrics(tr)
        inside = np.mean(tr.containment_mask())
        print(f"{scheme.value:>6} {inflation:>10} {m.eq_inf:7.4f} {m.er_inf:7.4f} "
              f"{tr.transmissions[-1].eqbar[0]:7.4f}  {inside:.1%}")
