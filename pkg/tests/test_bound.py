import math

import numpy as np
import pytest

from gapbound import (
    GroundSpace,
    HermitianOperator,
    bound_verdict,
    check_detailed_balance,
    complete_graph,
    cycle_graph,
    decompose,
    eigendecompose,
    ergodicity_report,
    ground_space,
    gsl_alpha_u,
    lambda_schedule,
    rw_bound,
    s_and_s_star,
    secular_smallest_root,
    sigma_max,
    star_graph,
    symmetrize,
    u_operator,
    weyl_check,
)
from gapbound.bound import VERDICT_FAIL, VERDICT_OK, ErgodicityError
from gapbound.generator import GeneratorError, build_generator
from gapbound.rng import derive_seed, make_rng
from conftest import random_symmetric


def uniform_ground(M: int) -> GroundSpace:
    ones = np.ones((M, 1)) / math.sqrt(M)
    return GroundSpace(energy=0.0, degeneracy=1, vectors=ones, u=np.ones((M, 1)))


def seeded_ground(M: int, seed: int) -> GroundSpace:
    """Ergodic ground space with distinct squared components."""
    rng = make_rng(seed)
    v = rng.uniform(0.2, 1.0, M) * rng.choice([-1.0, 1.0], M)
    vec = (v / np.linalg.norm(v)).reshape(-1, 1)
    return GroundSpace(energy=0.0, degeneracy=1, vectors=vec, u=math.sqrt(M) * vec)


class TestDecompose:
    def test_complete_k4(self):
        dec = decompose(complete_graph(4).matrix)
        np.testing.assert_array_equal(dec.potential, 3.0)
        off = ~np.eye(4, dtype=bool)
        np.testing.assert_array_equal(dec.sigma[off], 1.0)
        np.testing.assert_array_equal(np.diag(dec.sigma), 0.0)

    def test_diagonal_operator(self):
        dec = decompose(np.diag([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(dec.kinetic, 0.0)
        np.testing.assert_array_equal(dec.sigma, 0.0)

    def test_two_state_split(self, two_state):
        H = symmetrize(two_state, check_detailed_balance(two_state))
        dec = decompose(H)
        np.testing.assert_array_equal(dec.potential, [0.3, 0.7])
        assert dec.sigma[0, 1] == pytest.approx(math.sqrt(0.21), abs=1e-15)

    def test_exact_reconstruction(self):
        H = random_symmetric(9, 17)
        dec = decompose(H)
        np.testing.assert_array_equal(dec.operator_matrix(), H)


class TestSigmaMax:
    def test_scaled_complete_graph(self):
        H = 0.1 * complete_graph(4).matrix
        gs = ground_space(eigendecompose(H))
        assert sigma_max(decompose(H), gs) == pytest.approx(0.1, abs=1e-12)

    def test_diagonal_gives_zero(self):
        H = np.diag([0.0, 5.0, 9.0])
        gs = ground_space(eigendecompose(H))
        assert sigma_max(decompose(H), gs) == 0.0

    def test_two_state_half(self, two_state):
        H = symmetrize(two_state, check_detailed_balance(two_state))
        gs = ground_space(eigendecompose(H))
        # independent arithmetic: sqrt(0.21) / (sqrt(2*0.7) * sqrt(2*0.3)) = 1/2
        expected = math.sqrt(0.21) / (math.sqrt(1.4) * math.sqrt(0.6))
        assert expected == pytest.approx(0.5, abs=1e-15)
        assert sigma_max(decompose(H), gs) == pytest.approx(0.5, abs=1e-12)

    def test_zero_component_meets_coupling(self):
        H = np.array([[5.0, -0.4, 0.0], [-0.4, 5.0, 0.0], [0.0, 0.0, 0.0]])
        e3 = np.zeros((3, 1))
        e3[2, 0] = 1.0
        gs = GroundSpace(energy=0.0, degeneracy=1, vectors=e3, u=math.sqrt(3) * e3)
        with pytest.raises(ErgodicityError):
            sigma_max(decompose(H), gs)


class TestErgodicityReport:
    def test_uniform_is_ergodic(self):
        H = complete_graph(5).matrix
        rep = ergodicity_report(ground_space(eigendecompose(H)), decompose(H))
        assert rep.classification == "ergodic"
        assert rep.min_abs_u == pytest.approx(1.0, abs=1e-12)

    def test_tiny_coupled_component_is_non_ergodic(self):
        H = np.array([[0.0, -1e-6], [-1e-6, 10.0]])
        gs = ground_space(eigendecompose(H))
        rep = ergodicity_report(gs, decompose(H))
        assert rep.classification == "non-ergodic"
        assert rep.argmin_state == 2

    def test_decoupled_level_is_weakly_ergodic(self):
        H = np.array([[1.0, -0.4, 0.0], [-0.4, 1.0, 0.0], [0.0, 0.0, 5.0]])
        gs = ground_space(eigendecompose(H))
        rep = ergodicity_report(gs, decompose(H))
        assert rep.classification == "weakly-ergodic"
        assert rep.n_touched == 2

    def test_diagonal_is_non_ergodic(self):
        H = np.diag([0.0, 5.0, 9.0])
        rep = ergodicity_report(ground_space(eigendecompose(H)), decompose(H))
        assert rep.classification == "non-ergodic"


class TestUOperator:
    def test_uniform_is_ones_offdiagonal(self):
        U = u_operator(uniform_ground(5)).matrix
        np.testing.assert_array_equal(U, np.ones((5, 5)) - np.eye(5))

    def test_two_state_entries(self, two_state):
        H = symmetrize(two_state, check_detailed_balance(two_state))
        gs = ground_space(eigendecompose(H))
        U = u_operator(gs).matrix
        assert U[0, 1] == pytest.approx(2 * math.sqrt(0.21), abs=1e-12)
        np.testing.assert_array_equal(np.diag(U), 0.0)

    def test_degenerate_two_block(self):
        import scipy.linalg as sl

        two = sl.block_diag(complete_graph(2).matrix, complete_graph(2).matrix)
        gs = ground_space(eigendecompose(two))
        U = u_operator(gs).matrix
        np.testing.assert_array_equal(np.diag(U), 0.0)
        # direct construction oracle: sum of u u^T minus its diagonal
        expected = sum(
            np.outer(gs.u[:, i], gs.u[:, i]) for i in range(2)
        )
        np.fill_diagonal(expected, 0.0)
        np.testing.assert_allclose(U, expected, atol=1e-12)
        np.testing.assert_allclose(U, U.T, atol=1e-12)


class TestSAndSStar:
    def test_uniform(self):
        s, s_star = s_and_s_star(uniform_ground(7))
        assert s == 1.0
        assert s_star == pytest.approx(1.0, abs=1e-12)

    def test_two_state(self, two_state):
        H = symmetrize(two_state, check_detailed_balance(two_state))
        s, s_star = s_and_s_star(ground_space(eigendecompose(H)))
        assert s == pytest.approx(1.4, abs=1e-12)
        assert s_star == pytest.approx(2 * math.sqrt(0.21), abs=1e-12)

    def test_secular_cross_check_seed_11(self):
        gs = seeded_ground(8, 11)
        _, s_star = s_and_s_star(gs)
        root = secular_smallest_root((np.abs(gs.u) ** 2).ravel())
        assert abs(s_star + root) <= 1e-10

    def test_interlacing_s_star_below_s(self):
        for seed in range(20):
            gs = seeded_ground(10, derive_seed(77, seed))
            s, s_star = s_and_s_star(gs)
            assert 0.0 < s_star <= s + 1e-12
            assert (np.abs(gs.u) ** 2).min() - 1e-12 <= s <= gs.size

    def test_secular_requires_distinct_leading_components(self):
        with pytest.raises(ValueError, match="distinct"):
            secular_smallest_root(np.ones(4))


class TestGslAlphaU:
    def test_uniform_negative_branch(self):
        level = gsl_alpha_u(-2.0, uniform_ground(5))
        assert level.value == pytest.approx(-8.0, abs=1e-10)
        assert level.uniform

    def test_uniform_positive_branch(self):
        level = gsl_alpha_u(3.0, uniform_ground(5))
        assert level.value == pytest.approx(-3.0, abs=1e-10)

    def test_two_state_positive_alpha(self, two_state):
        H = symmetrize(two_state, check_detailed_balance(two_state))
        gs = ground_space(eigendecompose(H))
        level = gsl_alpha_u(1.0, gs)
        assert level.value == pytest.approx(-2 * math.sqrt(0.21), abs=1e-12)
        assert level.value == pytest.approx(-level.s_star, abs=1e-12)

    def test_general_negative_branch_reports_s_diamond(self):
        gs = seeded_ground(9, 5)
        level = gsl_alpha_u(-1.5, gs)
        assert level.value == pytest.approx(-1.5 * (gs.size - level.s_diamond), abs=1e-10)


class TestWeylCheck:
    def test_diagonal_operator_equality(self):
        H = np.diag([0.0, 2.0, 7.0])
        gs = ground_space(eigendecompose(H))
        check = weyl_check(decompose(H), gs, 1.7)
        assert check.holds
        assert check.slack == pytest.approx(0.0, abs=1e-10)

    def test_complete_k4(self):
        H = complete_graph(4).matrix
        check = weyl_check(decompose(H), ground_space(eigendecompose(H)), 1.0)
        assert check.holds and check.slack >= -1e-10

    def test_seeded_pairs(self):
        H = random_symmetric(8, 3)
        dec = decompose(H)
        gs = ground_space(eigendecompose(H))
        for lam in (0.1, 1.0, 10.0):
            check = weyl_check(dec, gs, lam)
            assert check.slack >= -1e-10
            assert check.lhs == pytest.approx(check.rhs + check.slack, abs=1e-12)


class TestLambdaSchedule:
    def test_simple_value(self):
        assert lambda_schedule(100, 1e-4) == pytest.approx(1.0, abs=1e-15)

    def test_log_squared_envelope_identity(self):
        M = 4096
        assert lambda_schedule(M, 1.0 / math.log(M) ** 2) == pytest.approx(
            M / math.log(M), rel=1e-14
        )

    def test_rejects_nonpositive_g(self):
        with pytest.raises(ValueError):
            lambda_schedule(10, 0.0)


class TestBoundVerdict:
    def test_normalized_complete_graph(self):
        M = 64
        H = complete_graph(M).matrix / (M - 1)
        report = bound_verdict(H, 0.5)
        assert report.verdict == VERDICT_OK
        assert report.profile.sigma == pytest.approx(1 / 63, abs=1e-12)
        assert report.min_V == pytest.approx(1.0, abs=1e-12)
        assert report.mu2 == pytest.approx(64 / 63, abs=1e-12)
        assert report.ratio == pytest.approx(64 / 63, abs=1e-12)

    def test_slow_cycle_fails_hypotheses(self):
        M = 64
        H = cycle_graph(M).matrix / math.log(M)
        # circulant oracle
        mu2 = (2 - 2 * math.cos(2 * math.pi / M)) / math.log(M)
        min_v = 2 / math.log(M)
        assert min_v == pytest.approx(0.4809, abs=1e-4)
        assert mu2 == pytest.approx(0.00231, abs=1e-5)
        for g in (1.0 / math.log(M), 0.2):
            report = bound_verdict(H, g)
            assert report.verdict == VERDICT_FAIL
            assert report.min_V == pytest.approx(min_v, abs=1e-12)
            assert report.mu2 == pytest.approx(mu2, abs=1e-12)

    def test_diagonal_operator_fails_ergodicity(self):
        report = bound_verdict(np.diag([0.0, 5.0, 9.0]), 0.5)
        assert report.verdict == VERDICT_FAIL
        assert report.profile.sigma == 0.0
        assert report.profile.ergodicity == "non-ergodic"

    def test_json_has_exact_key_set(self):
        report = bound_verdict(complete_graph(8).matrix / 7.0, 0.5)
        expected = {
            "M", "E1", "mu2", "k", "min_V", "ratio", "sigma", "g", "s", "s_star",
            "min_abs_u", "ergodicity", "E1_over_M", "lambda_schedule", "verdict",
        }
        assert set(report.to_json_dict()) == expected

    def test_rejects_nonpositive_g(self):
        with pytest.raises(ValueError):
            bound_verdict(complete_graph(4).matrix, 0.0)


class TestRandomWalkBound:
    def test_complete_k8(self):
        res = rw_bound(complete_graph(8))
        assert res.min_degree == 7.0
        assert res.mu2 == pytest.approx(8.0, abs=1e-10)
        assert res.ratio == pytest.approx(8 / 7, abs=1e-10)

    def test_star_graph(self):
        res = rw_bound(star_graph(5))
        assert res.min_degree == 1.0
        assert res.mu2 == pytest.approx(1.0, abs=1e-10)
        assert res.ratio == pytest.approx(1.0, abs=1e-10)

    def test_cycle_does_not_meet_bound(self):
        res = rw_bound(cycle_graph(8))
        assert res.min_degree == 2.0
        assert res.mu2 == pytest.approx(2 - math.sqrt(2), abs=1e-10)
        assert res.ratio == pytest.approx(0.2928932188134524, abs=1e-10)

    def test_rejects_asymmetric(self, two_state):
        with pytest.raises(GeneratorError, match="symmetric"):
            rw_bound(two_state)

    def test_rejects_reducible(self):
        L = build_generator(4, [(1, 2, 1.0), (2, 1, 1.0), (3, 4, 1.0), (4, 3, 1.0)])
        with pytest.raises(GeneratorError, match="irreducible"):
            rw_bound(L)
