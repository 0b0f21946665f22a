import numpy as np
import pytest

from wfpd.core import DomainError, InsufficientData, Regime, rank, validate_params
from wfpd.generators import (
    B_phi_m, B_phi_product, BK_correction, BK_phi_m, BK_phi_m_from_drift, BK_phi_product,
    PhiProduct, RankedSampler, apply_A_K, apriori_inequality_check, carre_du_champ,
    carre_du_champ_direct, fit_gap_rate, gap_bound, mass_deficit_statistic, phi, power_sum,
    sup_gap, uniform_bound_constant,
)
from wfpd.kernel import E2

from conftest import random_ranked


def vertex(K):
    z = np.zeros(K)
    z[0] = 1.0
    return z


def test_phi_examples():
    assert phi(vertex(5), 2) == 1.0
    assert phi(vertex(5), 3.7) == 1.0
    assert phi(np.full(8, 1 / 8), 2) == pytest.approx(1 / 8)
    assert phi([0.5, 0.3, 0.2], 2) == pytest.approx(0.38, abs=1e-15)
    with pytest.raises(DomainError):
        phi([0.5, 0.5], 1.5)


def test_phi_range_and_order(rng):
    z = rng.dirichlet(np.ones(6), size=500)
    p2, p3 = phi(z, 2), phi(z, 2.7)
    assert np.all((p2 >= 0) & (p2 <= 1)) and np.all(p3 <= p2)


def test_phi_zero_coordinates_contribute_nothing():
    assert power_sum(np.array([0.6, 0.4, 0.0]), 2.5) == pytest.approx(0.6**2.5 + 0.4**2.5)


def test_B_phi2_closed_form(params, rng):
    z = rng.dirichlet(np.ones(5), size=100)
    np.testing.assert_allclose(B_phi_m(z, 2, params), 1 - 0.3 - 2 * phi(z, 2), atol=1e-15)


def test_B_phi2_vanishes_at_stationary_homozygosity(params):
    # z = (a, b, b) with a + 2b = 1 and a^2 + 2b^2 = 0.35
    a = (1 + np.sqrt(0.1)) / 3
    z = np.array([a, (1 - a) / 2, (1 - a) / 2])
    assert phi(z, 2) == pytest.approx(0.35, abs=1e-15)
    assert B_phi_m(z, 2, params) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("m", [2, 2.5, 3, 5])
def test_B_at_vertex(m, params):
    assert B_phi_m(vertex(4), m, params) == pytest.approx(-(m / 2) * 1.3, abs=1e-15)


def test_B_product_phi2_squared(params, rng):
    z = rng.dirichlet(np.ones(6), size=100)
    got = B_phi_product(z, PhiProduct((2, 2)), params)
    p2, p3 = phi(z, 2), phi(z, 3)
    Bp2 = 1 - 0.3 - 2 * p2
    np.testing.assert_allclose(got, 2 * p2 * Bp2 + 4 * (p3 - p2**2), rtol=1e-12)


def test_B_product_three_factors_by_hand(params, rng):
    z = rng.dirichlet(np.ones(5), size=50)
    a, b, c = 2, 3, 2.5
    P = {m: phi(z, m) for m in (a, b, c)}
    B = {m: B_phi_m(z, m, params) for m in (a, b, c)}
    G = lambda m, n: carre_du_champ(z, m, n)  # noqa: E731
    expected = (B[a] * P[b] * P[c] + P[a] * B[b] * P[c] + P[a] * P[b] * B[c]
                + P[c] * G(a, b) + P[b] * G(a, c) + P[a] * G(b, c))
    np.testing.assert_allclose(B_phi_product(z, PhiProduct((a, b, c)), params), expected, rtol=1e-12)


def test_carre_du_champ_two_ways(rng):
    z = rng.dirichlet(np.ones(7), size=100)
    for m, n in [(2, 2), (2, 3), (2.5, 4.1)]:
        np.testing.assert_allclose(carre_du_champ(z, m, n), carre_du_champ_direct(z, m, n), atol=1e-12)


def test_linearity(params, rng):
    z = random_ranked(rng, 6, 50)
    c = rng.normal(size=3)
    terms = {PhiProduct((2,)): c[0], PhiProduct((2, 3)): c[1], PhiProduct((2.5, 2.5, 4)): c[2]}
    for op in (lambda t: B_phi_product(z, t, params), lambda t: BK_phi_product(z, t, params, 6)):
        lin = sum(ci * op(t) for t, ci in terms.items())
        np.testing.assert_allclose(op(terms), lin, rtol=1e-12, atol=1e-14)


def test_BK_vertex(params):
    assert BK_phi_m(vertex(10), 2, params, 10) == pytest.approx(-1.3, abs=1e-15)
    assert BK_phi_m(vertex(10), 2, params, 10) == pytest.approx(B_phi_m(vertex(10), 2, params), abs=1e-15)


@pytest.mark.parametrize("K", [64, 512, 4096])
def test_BK_uniform_gap_tends_to_alpha(params, K):
    z = np.full(K, 1 / K)
    gap = BK_phi_m(z, 2, params, K) - B_phi_m(z, 2, params)
    expected = 0.3 * (1 - 1 / K) ** K * (1 - 1 / K + (1 - 1 / K) * (1 - (1 - 1 / K) ** K) * K / (K * (1 - 1 / K) ** K))
    # mutation correction (phi_1 - phi_2)(theta+alpha)/(K-1) is added to the migration term
    expected += 1.3 / (K - 1) * (1 - 1 / K)
    assert gap == pytest.approx(expected, rel=1e-12)
    assert gap >= 0.9 * 0.3


@pytest.mark.parametrize("regime", list(Regime))
@pytest.mark.parametrize("m", [2, 2.5, 3, 4.2])
def test_BK_closed_form_matches_drift_form(regime, m, rng):
    params = validate_params(0.6, 0.45, regime)
    for K in (2, 7, 40):
        z = random_ranked(rng, K, 200, conc=0.7)
        np.testing.assert_allclose(BK_phi_m(z, m, params, K), BK_phi_m_from_drift(z, m, params, K),
                                   rtol=1e-12, atol=1e-13)


def test_BK_domain_checks(params):
    with pytest.raises(DomainError):
        BK_phi_m([0.3, 0.7], 2, params, 2)
    with pytest.raises(DomainError):
        BK_phi_m([0.5, 0.3], 2, params, 2)
    with pytest.raises(DomainError):
        BK_phi_m([0.25] * 4, 2, params, 3)


def test_BK_products(params, rng):
    z = random_ranked(rng, 6, 20)
    np.testing.assert_array_equal(BK_phi_product(z, PhiProduct(()), params, 6), 0.0)
    np.testing.assert_array_equal(BK_phi_product(z, PhiProduct((2.5,)), params, 6), BK_phi_m(z, 2.5, params, 6))


def tie_free_interior(rng, K, h=1e-4):
    # extrapolation evaluates f at distance 2h, so keep 20h away from ties and faces
    while True:
        z = rng.dirichlet(np.full(K, 2.0))
        s = np.sort(z)
        if s[0] > 20 * h and np.min(np.diff(s)) > 20 * h:
            return z


def test_BK_product_matches_finite_difference_A_K(params, rng):
    K = 5
    for _ in range(100):
        z = tie_free_interior(rng, K)
        f = lambda y: np.sum(y**2) * np.sum(y**3)  # noqa: E731
        fd = apply_A_K(f, z, params, K, h=1e-5, extrapolate=False)
        exact = BK_phi_product(rank(z), PhiProduct((2, 3)), params, K)
        assert abs(fd - exact) <= 1e-6 * abs(exact)


@pytest.mark.parametrize("regime", list(Regime))
@pytest.mark.parametrize("m", [2, 2.5, 3, 4])
def test_consistency_square(regime, m, rng):
    params = validate_params(1.0, 0.3, regime)
    K = 6
    for _ in range(100):
        z = tie_free_interior(rng, K)
        fd = apply_A_K(lambda y: np.sum(np.sort(y)[::-1] ** m), z, params, K)
        exact = BK_phi_m(rank(z), m, params, K)
        assert abs(fd - exact) <= 1e-8 * abs(exact)


def test_A_K_with_derivatives_and_constants(params, rng):
    z = tie_free_interior(rng, 4)
    assert apply_A_K(lambda y: 3.0 + 0 * y.sum(), z, params) == pytest.approx(0, abs=1e-9)
    m = 2.5
    g = lambda y: m * y ** (m - 1)  # noqa: E731
    H = lambda y: np.diag(m * (m - 1) * y ** (m - 2))  # noqa: E731
    val = apply_A_K(None, z, params, grad=g, hess=H)
    assert val == pytest.approx(BK_phi_m(rank(z), m, params, 4), rel=1e-12)


def test_A_K_positive_maximum_witness(params, rng):
    z0 = tie_free_interior(rng, 4)
    f = lambda y: 2 - np.sum((y - z0.astype(y.dtype)) ** 4)  # noqa: E731
    assert apply_A_K(f, z0, params) == pytest.approx(0, abs=1e-9)


def test_sup_gap_bounds(params):
    for K in (8, 32, 128):
        assert sup_gap(3, K, params, n=2000, rng=1) <= gap_bound(3, K, params)
        assert sup_gap(3, K, params, n=2000, rng=1) <= 1.5 * 1.3 / (K - 1) + 1.5 * 0.3 * (1 + 2 * E2) * K * (2 / (K + 2)) ** 2


def test_sup_gap_alpha_zero():
    params = validate_params(1.0, 0.0)
    for K in (4, 16, 64):
        for m in (2, 2.5, 3):
            assert sup_gap(m, K, params, n=500, rng=0) <= (m / 2) * 1.0 / (K - 1) + 1e-15


def test_sup_gap_uniform_state_m2(params):
    assert sup_gap(2, 2048, params, n=50, rng=0) >= 0.9 * 0.3


@pytest.mark.parametrize("eps,limit", [(0.5, -0.4), (0.9, -0.7)])
def test_gap_rate(params, eps, limit):
    rep = fit_gap_rate(2 + eps, [8, 16, 32, 64, 128, 256], params, n=5000, rng=3)
    assert rep.fit_slope <= limit
    assert all(g >= 0 for g in rep.sup_gaps) and len(rep.sup_gaps) == len(rep.K_values)
    assert not rep.non_vanishing


def test_gap_rate_m2_flat(params):
    rep = fit_gap_rate(2, [64, 128, 256, 512], params, n=3000, rng=3)
    assert abs(rep.fit_slope) < 0.1 and rep.non_vanishing


def test_gap_rate_needs_four_K(params):
    with pytest.raises(InsufficientData):
        fit_gap_rate(2.5, [8, 16, 16, 32], params)


def test_sampler_states_are_ranked_unit_mass(params, rng):
    z = RankedSampler(params)(50, 3000, rng)
    assert z.shape == (3000, 50)
    assert np.all(np.diff(z, axis=1) <= 0) and np.allclose(z.sum(axis=1), 1)
    assert np.any(np.all(np.isclose(z, 1 / 50), axis=1))


@pytest.mark.parametrize("K", [2, 8, 64])
@pytest.mark.parametrize("m", [2.1, 2.5, 2.9])
def test_apriori_inequality(params, K, m):
    z = RankedSampler(params)(K, 5000, np.random.default_rng(K))
    _, _, holds = apriori_inequality_check(z, m, params, K)
    assert holds.all()


def test_apriori_vertex_and_alpha_zero(params):
    for m in (2.1, 2.5, 2.9):
        lhs, rhs, holds = apriori_inequality_check(vertex(8), m, params, 8)
        assert lhs == pytest.approx(-1.3 + m / 2 * 1.3, abs=1e-14)
        assert holds and lhs > 0
    p0 = validate_params(1.0, 0.0)
    z = np.full(8, 1 / 8)
    lhs, rhs, _ = apriori_inequality_check(z, 2.5, p0, 8)
    by_hand = (1 - 2.5 * 1.5 / 2 * power_sum(z, 1.5) - (2 * power_sum(z, 2) - 2.5 * 2.5 / 2 * power_sum(z, 2.5))
               - 3 / (2 * 7))
    assert rhs == pytest.approx(by_hand, abs=1e-14)
    with pytest.raises(DomainError):
        apriori_inequality_check(z, 3.0, params, 8)


def test_uniform_bound(params, rng):
    Ks = [2, 8, 64, 512]
    for m in (2, 2.5, 3):
        C = uniform_bound_constant(m, params, Ks)
        for K in Ks:
            z = RankedSampler(params)(K, 2000, rng)
            assert np.max(np.abs(BK_phi_m(z, m, params, K))) <= C


def test_pointwise_limit_on_unit_mass_states(params, rng):
    for _ in range(20):
        J = rng.integers(2, 12)
        z = np.sort(rng.dirichlet(np.ones(J)))[::-1]
        for m in (2.2, 3.0):
            gaps = [abs(BK_phi_m(z, m, params, K) - B_phi_m(z, m, params)) for K in (2**8, 2**11, 2**14)]
            assert gaps[-1] < 1e-2 * 0.3 + 10 * 1.3 / 2**14
            assert gaps[-1] <= gaps[0]


def test_mass_deficit():
    full = np.tile(np.full(10, 0.1), (11, 1))
    assert abs(mass_deficit_statistic(full, dt=0.1)) < 1e-9
    J, K, t_end = 4, 10, 2.0
    trunc = np.tile(np.full(K, 1 / K)[:J], (21, 1))
    assert mass_deficit_statistic(trunc, dt=t_end / 20) == pytest.approx((1 - J / K) * t_end, rel=1e-14)


def test_mass_deficit_decreases_in_J(params):
    from wfpd.diffusion import DiffusionConfig, stationary_sample

    K = 1000
    cfg = DiffusionConfig(params, K, seed=4)
    z = stationary_sample(cfg, n_paths=4, n_per_path=5, spacing=0.5, burn_in=4.0)
    vals = [mass_deficit_statistic(z[:, :J], dt=0.5) for J in (5, 10, 20, 40)]
    assert all(v > 0 for v in vals) and np.all(np.diff(vals) < 0)
