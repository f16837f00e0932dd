import numpy as np
import pytest

from gapbound import (
    build_generator,
    complete_graph,
    cycle_graph,
    evolve,
    evolve_spectral,
    jump_process_sample,
    relaxation_rate,
    stationary_distribution,
)
from gapbound.dynamics import DynamicsError
from gapbound.rng import make_rng


def perturbed_uniform(M: int, seed: int, amplitude: float = 0.25) -> np.ndarray:
    rng = make_rng(seed)
    bump = rng.uniform(-1.0, 1.0, M)
    bump -= bump.mean()
    return np.full(M, 1.0 / M) + amplitude * bump / M


class TestEvolve:
    def test_two_state_closed_form(self, two_state):
        traj = evolve(two_state, [1.0, 0.0], [0.0, 1.0])
        assert traj.probabilities[1][0] == pytest.approx(0.7 + 0.3 * np.exp(-1), abs=1e-12)

    def test_time_zero_is_identity(self, two_state):
        traj = evolve(two_state, [0.25, 0.75], [0.0])
        np.testing.assert_array_equal(traj.probabilities[0], [0.25, 0.75])

    def test_complete_k4_single_rate(self):
        # relaxation oracle: p_1(t) = 1/4 + 3/4 exp(-M t) for K_M from a vertex
        traj = evolve(complete_graph(4), np.eye(4)[0], [0.5])
        assert traj.probabilities[0][0] == pytest.approx(0.25 + 0.75 * np.exp(-2), abs=1e-12)

    def test_rejects_descending_times(self, two_state):
        with pytest.raises(DynamicsError, match="ascending"):
            evolve(two_state, [1.0, 0.0], [1.0, 0.5])

    def test_conservation_and_positivity(self):
        L = cycle_graph(8)
        traj = evolve(L, np.eye(8)[2], np.linspace(0.0, 12.0, 25))
        np.testing.assert_allclose(traj.probabilities.sum(axis=1), 1.0, atol=1e-10)
        assert traj.probabilities.min() >= -1e-12

    def test_matches_spectral_route_for_symmetric(self):
        L = cycle_graph(8)
        p0 = perturbed_uniform(8, 5)
        times = np.array([0.0, 0.3, 1.0, 4.0, 9.0])
        a = evolve(L, p0, times).probabilities
        b = evolve_spectral(L, p0, times)
        assert np.abs(a - b).max() <= 1e-9

    def test_distance_series_monotone_for_symmetric(self):
        traj = evolve(cycle_graph(8), np.eye(8)[0], np.linspace(0.0, 5.0, 20))
        assert all(b <= a + 1e-12 for a, b in zip(traj.d2, traj.d2[1:]))
        assert traj.dtv[0] == pytest.approx(
            0.5 * np.abs(np.eye(8)[0] - traj.equilibrium).sum(), abs=1e-14
        )

    def test_spectral_route_requires_symmetry(self, two_state):
        with pytest.raises(DynamicsError, match="symmetric"):
            evolve_spectral(two_state, [1.0, 0.0], [0.1])


class TestStationary:
    def test_two_state(self, two_state):
        np.testing.assert_allclose(stationary_distribution(two_state), [0.7, 0.3], atol=1e-14)

    def test_requires_irreducible(self):
        with pytest.raises(Exception, match="irreducible"):
            stationary_distribution(build_generator(3, []))


class TestRelaxationRate:
    def test_two_state_rate_one(self, two_state):
        fit = relaxation_rate(two_state, np.array([1.0, 0.0]))
        assert fit.rate == pytest.approx(1.0, rel=0.02)
        assert not fit.flagged

    def test_cycle_c8(self):
        fit = relaxation_rate(cycle_graph(8), perturbed_uniform(8, 5))
        assert fit.rate == pytest.approx(2 - np.sqrt(2), rel=0.02)

    def test_complete_k4_from_vertex(self):
        fit = relaxation_rate(complete_graph(4), np.eye(4)[0])
        assert fit.rate == pytest.approx(4.0, rel=0.02)

    def test_equilibrium_start_rejected(self):
        with pytest.raises(DynamicsError, match="equilibrium"):
            relaxation_rate(complete_graph(4), np.full(4, 0.25))

    def test_orthogonal_start_is_flagged(self):
        # initial condition exactly along the fastest mode of C_4:
        # modes are cos/sin harmonics; the (1,-1,1,-1) direction decays at mu_max
        L = cycle_graph(4)
        p0 = np.full(4, 0.25) + 0.1 * np.array([1.0, -1.0, 1.0, -1.0])
        fit = relaxation_rate(L, p0)
        assert fit.flagged
        assert fit.rate > 1.5 * fit.spectral_mu2


class TestJumpProcess:
    def test_two_state_equilibrium(self, two_state):
        h = jump_process_sample(two_state, 1, 20.0, seed=1, repetitions=200_000)
        tol = 3 * np.sqrt(0.7 * 0.3 / 200_000)
        assert abs(h.frequencies[0] - 0.7) <= tol

    def test_time_zero_stays_put(self):
        h = jump_process_sample(complete_graph(4), 2, 0.0, seed=3, repetitions=1000)
        np.testing.assert_array_equal(h.frequencies, [0.0, 1.0, 0.0, 0.0])

    def test_matches_evolve_within_stderr(self):
        L = complete_graph(4)
        R = 200_000
        h = jump_process_sample(L, 1, 0.5, seed=1, repetitions=R)
        exact = evolve(L, np.eye(4)[0], [0.5]).probabilities[0]
        se = np.sqrt(exact * (1 - exact) / R)
        assert (np.abs(h.frequencies - exact) <= 4 * se).all()

    def test_deterministic_for_fixed_seed(self, two_state):
        a = jump_process_sample(two_state, 1, 3.0, seed=9, repetitions=5000)
        b = jump_process_sample(two_state, 1, 3.0, seed=9, repetitions=5000)
        np.testing.assert_array_equal(a.counts, b.counts)
        c = jump_process_sample(two_state, 1, 3.0, seed=10, repetitions=5000)
        assert (a.counts != c.counts).any()

    def test_absorbing_state_sits(self):
        L = build_generator(3, [(1, 2, 1.0)])  # state 2 and 3 absorbing
        h = jump_process_sample(L, 3, 50.0, seed=4, repetitions=100)
        np.testing.assert_array_equal(h.frequencies, [0.0, 0.0, 1.0])

    def test_rejects_bad_start(self, two_state):
        with pytest.raises(DynamicsError, match="start state"):
            jump_process_sample(two_state, 5, 1.0, seed=1, repetitions=10)
