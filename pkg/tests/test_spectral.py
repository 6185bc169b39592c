import numpy as np
import pytest

from nonlocal_sis import (
    DomainSpec,
    InvalidBracketError,
    KernelSpec,
    SolverFailure,
    assemble_dispersal,
    assemble_reaction_operator,
    basic_reproduction_number,
    build_grid,
    compute_spectral_report,
    critical_dispersal_rate,
    dispersal_principal_eigenpair,
    extreme_eigenpair,
    infection_growth_rate,
    recovery_spectral_bound,
)
from nonlocal_sis.experiments import random_instance

from conftest import const_field


def dense_extreme(B, which):
    """Oracle: full symmetric eigendecomposition in weighted coordinates."""
    w = B.weights
    S = np.sqrt(w)[:, None] * B.matrix / np.sqrt(w)[None, :]
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    idx = -1 if which == "largest" else 0
    v = vecs[:, idx] / np.sqrt(w)
    return vals[idx], v


class TestExtremeEigenpair:
    def test_two_cell_largest(self, two_cell_K):
        B = assemble_reaction_operator(two_cell_K, 1.0, np.zeros(2))
        pair = extreme_eigenpair(B, "largest")
        assert pair.value == pytest.approx(-0.5, abs=1e-12)
        np.testing.assert_allclose(pair.vector, [1.0, 1.0], atol=1e-10)

    def test_two_cell_smallest(self, two_cell_K):
        B = assemble_reaction_operator(two_cell_K, 1.0, np.zeros(2))
        pair = extreme_eigenpair(B, "smallest")
        assert pair.value == pytest.approx(-1.0, abs=1e-12)
        np.testing.assert_allclose(np.sort(pair.vector), [-1.0, 1.0], atol=1e-10)

    def test_diagonal_operator(self):
        # kernel with no off-diagonal overlap: extremes are just max/min
        # of the reaction minus the dispersal loss
        grid = build_grid(3, DomainSpec(0.0, 3.0))
        K = assemble_dispersal(grid, KernelSpec.tophat(0.25))
        c = np.array([0.3, 2.0, -1.0])
        B = assemble_reaction_operator(K, 1.0, c)
        diag = np.diag(B.matrix)
        assert extreme_eigenpair(B, "largest").value == pytest.approx(
            diag.max(), abs=1e-12)
        assert extreme_eigenpair(B, "smallest").value == pytest.approx(
            diag.min(), abs=1e-12)

    def test_residual_contract(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            inst = random_instance(rng, n_max=48)
            B = assemble_reaction_operator(inst.dispersal, inst.params.d_I,
                                           inst.gap)
            pair = extreme_eigenpair(B, "largest")
            assert pair.residual <= 1e-10
            assert np.max(np.abs(pair.vector)) == pytest.approx(1.0)

    def test_oracle_agreement_both_ends(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            inst = random_instance(rng, n_max=48)
            B = assemble_reaction_operator(inst.dispersal, inst.params.d_I,
                                           inst.gap)
            for which in ("largest", "smallest"):
                pair = extreme_eigenpair(B, which)
                val, _ = dense_extreme(B, which)
                assert pair.value == pytest.approx(val, abs=1e-10)

    def test_unreachable_tolerance_raises(self, two_cell_K):
        B = assemble_reaction_operator(two_cell_K, 1.0, np.zeros(2))
        with pytest.raises(SolverFailure) as info:
            extreme_eigenpair(B, "largest", tol_residual=1e-300)
        assert info.value.residual is not None


class TestDispersalPrincipalEigenpair:
    def test_two_cell(self, two_cell_K):
        pair = dispersal_principal_eigenpair(two_cell_K)
        assert pair.value == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(pair.vector, [1.0, 1.0], atol=1e-10)

    def test_single_cell(self):
        grid = build_grid(1, DomainSpec(0.0, 1.0))
        K = assemble_dispersal(grid, KernelSpec.tophat(1.0))
        pair = dispersal_principal_eigenpair(K)
        assert pair.value == pytest.approx(0.5, abs=1e-14)

    def test_in_unit_interval_and_positive_eigenfunction(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            inst = random_instance(rng, n_max=48)
            pair = dispersal_principal_eigenpair(inst.dispersal)
            assert 0.0 < pair.value < 1.0
            assert pair.vector.min() > 0.0


class TestInfectionGrowthRate:
    def test_constant_unit_gap(self, two_cell_K):
        pair = infection_growth_rate(two_cell_K, 1.0, np.ones(2))
        assert pair.value == pytest.approx(0.5, abs=1e-12)

    def test_hand_instance(self, two_cell_K):
        pair = infection_growth_rate(two_cell_K, 1.0, np.full(2, 1.5))
        assert pair.value == pytest.approx(1.0, abs=1e-12)

    def test_zero_gap_matches_dispersal_eigenvalue(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            inst = random_instance(rng, n_max=48)
            K = inst.dispersal
            d = inst.params.d_I
            lam = dispersal_principal_eigenpair(K).value
            mu = infection_growth_rate(K, d, np.zeros(inst.grid.n)).value
            assert mu == pytest.approx(-d * lam, abs=1e-10)


class TestRecoverySpectralBound:
    def test_hand_instance(self, two_cell_K):
        bound = recovery_spectral_bound(two_cell_K, 1.0, np.full(2, 0.5))
        assert bound == pytest.approx(-1.0, abs=1e-12)

    def test_constant_recovery_shift_structure(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            inst = random_instance(rng, n_max=48)
            K = inst.dispersal
            d = inst.params.d_I
            g = 0.7
            lam = dispersal_principal_eigenpair(K).value
            bound = recovery_spectral_bound(K, d, np.full(inst.grid.n, g))
            assert bound == pytest.approx(-d * lam - g, abs=1e-10)

    def test_dominated_by_minimum_recovery(self):
        rng = np.random.default_rng(16)
        for _ in range(15):
            inst = random_instance(rng, n_max=48)
            bound = recovery_spectral_bound(inst.dispersal, inst.params.d_I,
                                            inst.gamma)
            assert bound <= -inst.gamma.values.min() + 1e-10
            assert bound < 0


class TestBasicReproductionNumber:
    def test_hand_instance(self, two_cell_K):
        res = basic_reproduction_number(two_cell_K, 1.0, np.full(2, 2.0),
                                        np.full(2, 0.5))
        assert res.value == pytest.approx(2.0, abs=1e-10)
        assert res.vector.min() > 0

    def test_boundary_case_unity(self, two_cell_K):
        res = basic_reproduction_number(two_cell_K, 1.0, np.ones(2),
                                        np.full(2, 0.5))
        assert res.value == pytest.approx(1.0, abs=1e-10)
        mu = infection_growth_rate(two_cell_K, 1.0, np.full(2, 0.5)).value
        assert abs(mu) <= 1e-10

    def test_linear_in_transmission(self, two_cell_K):
        base = basic_reproduction_number(two_cell_K, 1.0, np.full(2, 2.0),
                                         np.full(2, 0.5)).value
        scaled = basic_reproduction_number(two_cell_K, 1.0, np.full(2, 6.0),
                                           np.full(2, 0.5)).value
        assert scaled == pytest.approx(3.0 * base, rel=1e-10)

    def test_dense_oracle_agreement(self):
        # oracle: spectral radius of the literal next-generation matrix
        rng = np.random.default_rng(17)
        for _ in range(25):
            inst = random_instance(rng, n_max=48)
            K = inst.dispersal
            d = inst.params.d_I
            res = basic_reproduction_number(K, d, inst.beta, inst.gamma)
            A = d * (K.entries - np.eye(K.n)) - np.diag(inst.gamma.values)
            M = np.diag(inst.beta.values) @ np.linalg.inv(-A)
            oracle = np.max(np.abs(np.linalg.eigvals(M)))
            assert res.value == pytest.approx(oracle, abs=1e-8)

    def test_undamped_generator_rejected(self, two_cell_K):
        # a negative "recovery" makes the damped generator unstable, so
        # the next-generation operator is undefined
        from nonlocal_sis import PreconditionError
        with pytest.raises(PreconditionError):
            basic_reproduction_number(two_cell_K, 1.0, np.ones(2),
                                      np.full(2, -1.0))

    def test_stagnation_reported(self, two_cell_K):
        # spatially varying transmission keeps the start vector off the
        # principal direction, so two power steps cannot converge
        with pytest.raises(SolverFailure):
            basic_reproduction_number(two_cell_K, 1.0, np.array([2.0, 3.0]),
                                      np.full(2, 0.5), power_cap=2)


class TestCriticalDispersalRate:
    def test_hand_instance(self, two_cell_K):
        # constant coefficients: growth is 1.5 - 0.5 d, root at 3
        res = critical_dispersal_rate(two_cell_K, np.full(2, 2.0),
                                      np.full(2, 0.5), bracket=(0.1, 10.0))
        assert res.d_critical == pytest.approx(3.0, abs=1e-5)
        assert abs(res.growth_at_critical) <= 1e-6

    def test_auto_expands_upper_end(self, two_cell_K):
        res = critical_dispersal_rate(two_cell_K, np.full(2, 2.0),
                                      np.full(2, 0.5), bracket=(0.1, 0.2))
        assert res.d_critical == pytest.approx(3.0, abs=1e-5)

    def test_low_risk_has_no_bracket(self, two_cell_K):
        # growth is -0.1 - 0.5 d < 0 for every rate
        with pytest.raises(InvalidBracketError):
            critical_dispersal_rate(two_cell_K, np.full(2, 0.4),
                                    np.full(2, 0.5), bracket=(0.1, 10.0))

    def test_threshold_separates_regimes(self, two_cell_K):
        beta, gamma = np.full(2, 2.0), np.full(2, 0.5)
        res = critical_dispersal_rate(two_cell_K, beta, gamma, (0.1, 10.0))
        below = basic_reproduction_number(two_cell_K, res.d_critical / 2,
                                          beta, gamma).value
        above = basic_reproduction_number(two_cell_K, 2 * res.d_critical,
                                          beta, gamma).value
        assert below > 1.0
        assert above < 1.0


class TestGrowthRateIdentities:
    def test_scaling_identity(self):
        rng = np.random.default_rng(18)
        for _ in range(15):
            inst = random_instance(rng, n_max=48)
            K, d, m = inst.dispersal, inst.params.d_I, inst.gap
            direct = infection_growth_rate(K, d, m).value
            scaled = d * infection_growth_rate(K, 1.0, m / d).value
            assert direct == pytest.approx(scaled, abs=1e-10)

    def test_monotone_nonincreasing(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            inst = random_instance(rng, n_max=48)
            K, m = inst.dispersal, inst.gap
            mus = [infection_growth_rate(K, d, m).value
                   for d in np.geomspace(0.05, 20.0, 10)]
            assert all(b <= a + 1e-12 for a, b in zip(mus, mus[1:]))

    def test_lipschitz_in_rate(self):
        rng = np.random.default_rng(20)
        for _ in range(10):
            inst = random_instance(rng, n_max=48)
            K, d, m = inst.dispersal, inst.params.d_I, inst.gap
            mu = infection_growth_rate(K, d, m).value
            for delta in (0.01, 0.1, 1.0):
                shifted = infection_growth_rate(K, d + delta, m).value
                assert abs(shifted - mu) <= 2.0 * delta + 1e-12

    def test_positive_gap_node_gives_growth_at_small_rate(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            inst = random_instance(rng, n_max=32, risk="high")
            mu = infection_growth_rate(inst.dispersal, 1e-3, inst.gap).value
            assert mu > 0


class TestSpectralReport:
    def test_two_cell_report(self, endemic_setup):
        grid, K, beta, gamma, lam, params = endemic_setup
        rep = compute_spectral_report(K, params, beta, gamma)
        assert rep.dispersal_eigenvalue == pytest.approx(0.5, abs=1e-12)
        assert rep.growth_rate == pytest.approx(1.0, abs=1e-12)
        assert rep.spectral_bound == pytest.approx(-1.0, abs=1e-12)
        assert rep.r0 == pytest.approx(2.0, abs=1e-10)

    def test_serializable_and_consistent(self, endemic_setup):
        grid, K, beta, gamma, lam, params = endemic_setup
        rep = compute_spectral_report(K, params, beta, gamma)
        d = rep.to_dict()
        assert d["r0"] == rep.r0
        assert len(d["dispersal_eigenvector"]) == grid.n
        # threshold consistency on this instance: r0 > 1 and growth > 0
        assert (rep.r0 - 1.0) * rep.growth_rate > 0


def test_grid_refinement_stability():
    # sanity probe, not a theorem: quantities at n and 2n within 2%
    domain = DomainSpec(0.0, 1.0)
    kernel = KernelSpec.truncated_gaussian(0.6, 2.0)
    values = {}
    for n in (32, 64):
        grid = build_grid(n, domain)
        K = assemble_dispersal(grid, kernel)
        beta = const_field(grid, 2.0)
        gamma = const_field(grid, 0.5)
        mu = infection_growth_rate(K, 1.0, beta.values - gamma.values).value
        r0 = basic_reproduction_number(K, 1.0, beta, gamma).value
        values[n] = (mu, r0)
    for a, b in zip(values[32], values[64]):
        assert abs(a - b) <= 0.02 * max(abs(a), abs(b))
