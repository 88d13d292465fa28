import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spathermo.deform import HqMap, SupraMap
from spathermo.entropy import EntropySpec, renyi
from spathermo.errors import DomainError, InfeasibleEnergyError, SolverFailure
from spathermo.maxent import (DEFAULT_CONFIG, ConstraintKind, SolverConfig, solve, solve_escort_renyi,
                              solve_linear_renyi, solve_oracle, solve_spa)
from spathermo.simplex import escort_mean, linear_mean, total_variation

LINEAR, ESCORT = ConstraintKind.LINEAR, ConstraintKind.ESCORT
ALPHAS = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0]


@st.composite
def instances(draw):
    n = draw(st.integers(2, 5))
    levels = draw(st.lists(st.floats(0.0, 2.0), min_size=n, max_size=n))
    if max(levels) - min(levels) < 0.05:
        levels[-1] = min(levels) + 0.5
    lo, hi = min(levels), max(levels)
    frac = draw(st.floats(0.05, 0.95))
    return levels, lo + frac * (hi - lo), draw(st.sampled_from(ALPHAS))


class TestExamples:
    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("kind", [LINEAR, ESCORT])
    def test_symmetric_point_is_uniform(self, alpha, kind):
        sol = solve([0.0, 1.0], 0.5, alpha, kind)
        assert sol.degenerate and sol.beta_renyi == 0.0
        np.testing.assert_allclose(sol.P_hat, [0.5, 0.5])

    def test_two_level_gibbs(self):
        sol = solve_linear_renyi([0.0, 1.0], 1 / 3, 1.0)
        np.testing.assert_allclose(sol.P_hat, [2 / 3, 1 / 3], rtol=1e-14)
        assert sol.beta_renyi == pytest.approx(math.log(2), rel=1e-14)

    def test_three_level_alpha_two(self):
        # 1 - beta*dE/2 weights with beta = 30/31, hand-checked
        sol = solve_linear_renyi([0.0, 1.0, 2.0], 0.6, 2.0)
        np.testing.assert_allclose(sol.P_hat, [8 / 15, 1 / 3, 2 / 15], rtol=1e-12)
        assert sol.beta_renyi == pytest.approx(30 / 31, rel=1e-12)

    @pytest.mark.parametrize("kind", [LINEAR, ESCORT])
    def test_three_level_matches_oracle(self, kind):
        sol = solve([0.0, 1.0, 2.0], 0.6, 2.0, kind)
        assert total_variation(sol.P_hat, solve_oracle([0.0, 1.0, 2.0], 0.6, 2.0, kind)) < 1e-6

    def test_escort_at_one_equals_linear(self):
        a = solve_linear_renyi([0.0, 0.4, 1.9], 0.7, 1.0)
        b = solve_escort_renyi([0.0, 0.4, 1.9], 0.7, 1.0)
        np.testing.assert_allclose(a.P_hat, b.P_hat, atol=1e-15)

    def test_oracle_examples(self):
        np.testing.assert_allclose(solve_oracle([0, 1], 0.5, 2.0, LINEAR), [0.5, 0.5], atol=1e-9)
        np.testing.assert_allclose(solve_oracle([0, 1], 1 / 3, 1.0, LINEAR), [2 / 3, 1 / 3], atol=1e-9)


class TestErrors:
    @pytest.mark.parametrize("U", [0.0, 1.0, 1.5, -0.2])
    def test_infeasible(self, U):
        with pytest.raises(InfeasibleEnergyError):
            solve([0.0, 1.0], U, 2.0, LINEAR)
        with pytest.raises(InfeasibleEnergyError):
            solve_oracle([0.0, 1.0], U, 2.0, LINEAR)

    def test_bracket_exhaustion(self):
        cfg = SolverConfig(beta_bracket_limit=1e-3)
        with pytest.raises(SolverFailure):
            solve([0.0, 1.0], 0.01, 1.0, LINEAR, cfg)

    def test_map_domain_violation(self):
        # uniform-ish state has R near ln 3 > 1, outside SupraMap(0.5, 2)
        with pytest.raises(DomainError):
            solve_spa([0.0, 1.0, 2.0], 0.95, EntropySpec(0.5, SupraMap(0.5, 2.0)), LINEAR)


class TestProperties:
    @given(instances(), st.sampled_from([LINEAR, ESCORT]))
    def test_constraint_met_and_R_consistent(self, inst, kind):
        levels, U, a = inst
        sol = solve(levels, U, a, kind)
        mean = linear_mean(sol.P_hat, levels) if kind is LINEAR else escort_mean(sol.P_hat, levels, a)
        assert mean == pytest.approx(U, abs=1e-10)
        assert sol.R_hat == pytest.approx(renyi(sol.P_hat, a), abs=1e-9)

    @given(instances())
    def test_escort_direct_matches_duality(self, inst):
        levels, U, a = inst
        d = solve_escort_renyi(levels, U, a, method="duality")
        e = solve_escort_renyi(levels, U, a, method="direct")
        assert total_variation(d.P_hat, e.P_hat) < 1e-9
        assert d.beta_renyi == pytest.approx(e.beta_renyi, rel=1e-8, abs=1e-12)

    @given(instances())
    def test_beta_sign_follows_uniform_mean(self, inst):
        levels, U, a = inst
        sol = solve(levels, U, a, LINEAR)
        mid = float(np.mean(levels))
        if abs(U - mid) > 1e-6:
            assert np.sign(sol.beta_renyi) == np.sign(mid - U)

    @given(instances(), st.floats(0.2, 3.0))
    def test_hq_map_leaves_distribution_unchanged(self, inst, q):
        levels, U, a = inst
        base = solve(levels, U, a, ESCORT)
        spa = solve_spa(levels, U, EntropySpec(a, HqMap(q)), ESCORT)
        np.testing.assert_array_equal(base.P_hat, spa.P_hat)

    def test_cutoff_states_zero(self):
        # alpha > 1 linear: high levels are cut off for low U
        sol = solve([0.0, 1.0, 2.0], 0.3, 2.0, LINEAR)
        assert sol.P_hat[2] == 0.0 and not sol.support_mask[2]
        np.testing.assert_allclose(sol.P_hat, [0.7, 0.3, 0.0], atol=1e-12)
        assert total_variation(sol.P_hat, solve_oracle([0.0, 1.0, 2.0], 0.3, 2.0, LINEAR)) < 1e-6


def test_default_config_values():
    assert DEFAULT_CONFIG.root_tol == 1e-12
    assert DEFAULT_CONFIG.fd_step_rel > 0
