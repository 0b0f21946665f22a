"""Wright-Fisher island chains, their K-allele diffusions, and the
two-parameter Poisson-Dirichlet limit: simulators, generators, oracles."""
from .core import (
    DiscreteSimplexState, DomainError, InsufficientData, InvalidParams, InvalidPopulationSize,
    NonTermination, NumericalError, Params, RankedState, Regime, SimplexState, WFPDError,
    as_simplex, is_ranked, rank, rho_k, validate_params,
)
from .rng import make_rng
from .kernel import (
    KernelConfig, drift_b, emigration_weights, gametic_freqs, homing_ratio, mainland_freqs,
    migration_step, minimum_population, mutation_step, r_weight, r_weight_bar,
)
from .chain import ChainConfig, ChainPath, chain_step, ergodic_average, run_chain, run_replicates, uniform_counts
from .diffusion import (
    DiffusionConfig, diffusion_coeff, diffusion_step, noise_factor, ranked_path, run_diffusion,
    stationary_sample,
)
from .generators import (
    B_phi_m, B_phi_product, BK_phi_m, BK_phi_product, GapReport, PhiProduct, RankedSampler,
    apply_A_K, apriori_inequality_check, carre_du_champ, fit_gap_rate, gap_bound,
    mass_deficit_statistic, phi, sup_gap,
)
from .oracle import PdSample, gem_sticks, pd_power_sums, sample_pd, sample_pd_many, stationary_moment
from .analysis import (
    CompareReport, MomentReport, ks_distance, loglog_fit, ranked_top_compare, stationary_compare_chain,
)

__version__ = "0.1.0"
