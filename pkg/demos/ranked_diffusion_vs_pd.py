"""Ranked stationary diffusion sample against Poisson-Dirichlet draws.

Prints the mean of the top-5 ranked frequencies for K = 10 and K = 100 next to
the GEM oracle, with the mean absolute difference.

    python3 demos/ranked_diffusion_vs_pd.py [n_paths]
"""
import sys

import numpy as np

from wfpd import validate_params
from wfpd.analysis import ranked_top_compare, top_means
from wfpd.diffusion import DiffusionConfig, stationary_sample
from wfpd.oracle import sample_pd_many
from wfpd.rng import make_rng

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 100
params = validate_params(1.0, 0.3)
pd_top, _ = sample_pd_many(params, 5, 10_000, make_rng(0))
np.set_printoptions(precision=4, suppress=True)
print("PD oracle  ", top_means(pd_top, 5))
for K in (10, 100):
    z = stationary_sample(DiffusionConfig(params, K, seed=0), n_paths=n_paths, n_per_path=20, spacing=0.5)
    rep = ranked_top_compare(z, pd_top, 5)
    print(f"K={K:<4}     ", top_means(z, 5), f"mean abs diff {rep.value:.4f}")
