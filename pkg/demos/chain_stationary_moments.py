"""Ergodic phi_m averages of the Wright-Fisher chain against the closed-form moments.

    python3 demos/chain_stationary_moments.py [steps]
"""
import sys

from wfpd import validate_params
from wfpd.analysis import stationary_compare_chain
from wfpd.chain import ChainConfig
from wfpd.kernel import KernelConfig

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
params = validate_params(1.0, 0.3)
cfg = ChainConfig(KernelConfig(params, 20, 2000), seed=1, steps=steps)
print(f"K=20, N=2000, theta=1, alpha=0.3, {steps} steps")
print(f"{'m':>3} {'estimate':>9} {'stderr':>8} {'exact':>8} {'pass':>5}")
for r in stationary_compare_chain(cfg, [2, 3, 4]):
    print(f"{r.m:>3} {r.estimate:9.4f} {r.stderr:8.4f} {r.analytic:8.4f} {str(r.passed):>5}")
