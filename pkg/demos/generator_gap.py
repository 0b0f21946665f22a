"""Sup gap between the finite-K and limiting generators on phi_m, versus K.

The gap decays in K for 2 < m < 3 and stays of order alpha at m = 2.

    python3 demos/generator_gap.py [n_states]
"""
import sys

from wfpd import validate_params
from wfpd.generators import fit_gap_rate
from wfpd.rng import make_rng

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
params = validate_params(1.0, 0.3)
Ks = [8, 16, 32, 64, 128, 256]
for m in (2.0, 2.5, 2.9):
    rep = fit_gap_rate(m, Ks, params, n=n, rng=make_rng(0, int(10 * m)))
    print(f"m={m}: log-log slope {rep.fit_slope:+.3f} (r2={rep.r2:.3f}), non-vanishing={rep.non_vanishing}")
    for K, gap, bound in zip(Ks, rep.sup_gaps, rep.bounds):
        print(f"  K={K:>4} gap={gap:.5f} bound={bound:.5f}")
