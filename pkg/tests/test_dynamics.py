import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import dense_system, diag_system, random_complex_matrix

from obsframe import (
    ContinuousFinite,
    ContinuousSignal,
    DiscreteFinite,
    DiscreteInfinite,
    ContinuousInfinite,
    DiscreteSignal,
    QuadratureGrid,
    TailNotCertifiableError,
    certify_tail,
    controllability_map,
    controllability_tests,
    evolve_continuous,
    evolve_discrete,
    gauss_legendre_grid,
)
from obsframe.errors import QuadratureError


class TestQuadratureGrid:
    def test_weights_sum_to_span(self):
        for span in (0.5, 1.0, 7.3):
            grid = gauss_legendre_grid(span, panels=5, nodes_per_panel=4)
            assert abs(np.sum(grid.weights) - span) <= 1e-12 * span
            assert np.all(np.diff(grid.nodes) > 0)

    def test_polynomial_exactness(self):
        # oracle: composite 4-node Gauss-Legendre integrates degree-7 exactly
        grid = gauss_legendre_grid(2.0, panels=3, nodes_per_panel=4)
        got = float(np.sum(grid.weights * grid.nodes**7))
        assert_allclose(got, 2.0**8 / 8.0, rtol=1e-13)

    def test_rejects_bad_shapes(self):
        with pytest.raises(QuadratureError):
            QuadratureGrid(np.array([0.2, 0.1]), np.array([0.5, 0.5]), "x", 1.0)
        with pytest.raises(QuadratureError):
            QuadratureGrid(np.array([0.1, 0.2]), np.array([0.5, 0.4]), "x", 1.0)


class TestEvolveDiscrete:
    def test_homogeneous_decay(self):
        sys = diag_system([0.5], [1.0], DiscreteFinite(3))
        x = evolve_discrete(sys, [1.0], None, 3)
        assert_allclose(x, [0.125])

    def test_zero_dynamics_keeps_last_input(self):
        # only the final input survives: x(3) = sum_j 0^(2-j) u(j) = u(2)
        sys = dense_system(np.zeros((2, 2)), [np.array([1.0, 0])], DiscreteFinite(3),
                           control=np.eye(2))
        u = DiscreteSignal(np.tile(np.array([1.0, 0.0]), (3, 1)))
        x = evolve_discrete(sys, [0.0, 0.0], u, 3)
        assert_allclose(x, [1.0, 0.0])

    def test_against_stepwise_recursion(self, rng):
        a = random_complex_matrix(rng, 3)
        c = random_complex_matrix(rng, 3, 2)
        sys = dense_system(a, [np.ones(3)], DiscreteFinite(4), control=c)
        u = DiscreteSignal(rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
        x0 = rng.standard_normal(3)
        # oracle: step-by-step recursion x(k+1) = A x(k) + C u(k)
        x = x0.astype(complex)
        for j in range(4):
            x = a @ x + c @ u.values[j]
        got = evolve_discrete(sys, x0, u, 4)
        assert np.linalg.norm(got - x) <= 1e-12 * max(np.linalg.norm(x), 1.0)


class TestEvolveContinuous:
    def test_zero_dynamics_no_input(self):
        sys = dense_system(np.zeros((2, 2)), [np.array([1.0, 0])], ContinuousFinite(1.0))
        for t in (0.25, 1.0):
            assert_allclose(evolve_continuous(sys, [3.0, -1.0], None, t), [3.0, -1.0])

    def test_constant_input_integrates_to_t(self):
        # oracle: closed form x(t) = x0 + t for xdot = u, u == 1
        sys = dense_system(np.zeros((1, 1)), [np.array([1.0])], ContinuousFinite(2.0),
                           control=np.eye(1))
        grid = gauss_legendre_grid(1.5, panels=4, nodes_per_panel=4)
        u = ContinuousSignal(grid, np.ones((len(grid), 1)))
        x = evolve_continuous(sys, [2.0], u, 1.5)
        assert_allclose(x, [3.5], rtol=1e-12)

    def test_scalar_exponential_flow(self):
        sys = dense_system(np.array([[0.7]]), [np.array([1.0])], ContinuousFinite(1.0))
        x = evolve_continuous(sys, [2.0], None, 0.9)
        assert_allclose(x, [2.0 * math.exp(0.63)], rtol=1e-12)

    def test_grid_must_cover_interval(self):
        sys = dense_system(np.zeros((1, 1)), [np.array([1.0])], ContinuousFinite(2.0),
                           control=np.eye(1))
        grid = gauss_legendre_grid(1.0, panels=2, nodes_per_panel=3)
        u = ContinuousSignal(grid, np.ones((len(grid), 1)))
        with pytest.raises(QuadratureError):
            evolve_continuous(sys, [0.0], u, 1.5)


class TestControllabilityMap:
    def test_zero_input_reaches_zero(self):
        sys = dense_system(np.eye(2), [np.ones(2)], DiscreteFinite(3), control=np.eye(2))
        u = DiscreteSignal(np.zeros((4, 2)))
        assert_allclose(controllability_map(sys, u, 3), np.zeros(2))

    def test_identity_telescoping(self):
        # oracle: sum_{j=0}^{gamma} I^(gamma-j) v = (gamma+1) v
        gamma = 4
        v = np.array([2.0, -1.0])
        sys = dense_system(np.eye(2), [np.ones(2)], DiscreteFinite(gamma), control=np.eye(2))
        u = DiscreteSignal(np.tile(v, (gamma + 1, 1)))
        assert_allclose(controllability_map(sys, u, gamma), (gamma + 1) * v)

    def test_matches_evolve_from_zero(self, rng):
        a = random_complex_matrix(rng, 2)
        sys = dense_system(a, [np.ones(2)], ContinuousFinite(1.0), control=np.eye(2))
        grid = gauss_legendre_grid(1.0, panels=3, nodes_per_panel=4)
        u = ContinuousSignal(grid, rng.standard_normal((len(grid), 2)))
        theta = controllability_map(sys, u, 1.0)
        evolved = evolve_continuous(sys, np.zeros(2), u, 1.0)
        assert np.linalg.norm(theta - evolved) <= 1e-12 * max(np.linalg.norm(evolved), 1.0)

    def test_linearity(self, rng):
        a = random_complex_matrix(rng, 3)
        c = random_complex_matrix(rng, 3, 2)
        sys = dense_system(a, [np.ones(3)], DiscreteFinite(3), control=c)
        u = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        v = rng.standard_normal((4, 2))
        alpha, beta = 1.7, -0.3 + 0.4j
        combined = controllability_map(sys, DiscreteSignal(alpha * u + beta * v), 3)
        split = alpha * controllability_map(sys, DiscreteSignal(u), 3) + beta * controllability_map(
            sys, DiscreteSignal(v), 3
        )
        assert np.linalg.norm(combined - split) <= 1e-12 * max(np.linalg.norm(split), 1.0)

    def test_superposition(self, rng):
        a = random_complex_matrix(rng, 3)
        c = random_complex_matrix(rng, 3, 1)
        sys = dense_system(a, [np.ones(3)], DiscreteFinite(5), control=c)
        u = DiscreteSignal(rng.standard_normal((5, 1)))
        x0 = rng.standard_normal(3)
        full = evolve_discrete(sys, x0, u, 5)
        parts = evolve_discrete(sys, x0, None, 5) + evolve_discrete(sys, np.zeros(3), u, 5)
        assert np.linalg.norm(full - parts) <= 1e-12 * max(np.linalg.norm(full), 1.0)


class TestControllabilityTests:
    def test_identity_control_is_exactly_controllable(self):
        sys = dense_system(np.zeros((2, 2)), [np.ones(2)], DiscreteFinite(0), control=np.eye(2))
        rep = controllability_tests(sys)
        assert rep.eco and rep.aco and rep.reach_rank == 2

    def test_jordan_block_single_column(self):
        # oracle: Kalman matrix [C, AC] = [e2, e1] has rank 2
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        c = np.array([[0.0], [1.0]])
        sys = dense_system(a, [np.ones(2)], DiscreteFinite(1), control=c)
        rep = controllability_tests(sys)
        assert rep.eco and rep.reach_rank == 2

    def test_stuck_direction(self):
        # all iterates of C stay on e1
        sys = dense_system(np.zeros((2, 2)), [np.ones(2)], DiscreteFinite(5),
                           control=np.array([[1.0], [0.0]]))
        rep = controllability_tests(sys)
        assert not rep.eco and not rep.aco and rep.reach_rank == 1

    def test_reachable_space_is_affine(self, rng):
        # range of Theta is independent of x0: compare column spaces by principal angles
        from obsframe.dynamics import theta_matrix

        a = random_complex_matrix(rng, 3)
        c = random_complex_matrix(rng, 3, 2)
        sys = dense_system(a, [np.ones(3)], DiscreteFinite(2), control=c)
        theta = theta_matrix(a, c, DiscreteFinite(2))
        q1, _ = np.linalg.qr(theta)
        # the affine offset e^{tau A} x0 shifts, never rotates, the reachable set
        for _ in range(3):
            x0 = rng.standard_normal(3)
            reached = np.column_stack(
                [
                    controllability_map(sys, DiscreteSignal(rng.standard_normal((3, 2))), 2)
                    for _ in range(6)
                ]
            )
            q2, _ = np.linalg.qr(reached)
            k = min(q1.shape[1], q2.shape[1])
            angles = np.linalg.svd(q1.conj().T @ q2, compute_uv=False)
            assert np.all(1.0 - angles[:k] <= 1e-8)


class TestCertifyTail:
    def test_scalar_geometric_tail(self):
        sys = diag_system([0.5], [1.0], DiscreteInfinite(20, tail_tol=1e-10))
        cert = certify_tail(sys)
        assert cert.ok
        assert_allclose(cert.tail_bound, 3.0316490059097606e-13, rtol=1e-12)
        # oracle: the actual tail sum is below the certified bound
        actual = sum(0.25**k for k in range(21, 4000))
        assert actual <= cert.tail_bound + 1e-18

    def test_unit_spectral_radius_refused(self):
        sys = diag_system([1.0], [1.0], DiscreteInfinite(50))
        with pytest.raises(TailNotCertifiableError):
            certify_tail(sys)

    def test_scalar_exponential_tail(self):
        sys = diag_system([-1.0], [1.0], ContinuousInfinite(20.0, tail_tol=1e-10))
        cert = certify_tail(sys)
        assert cert.ok
        assert_allclose(cert.tail_bound, 2.1241771276457944e-18, rtol=1e-12)

    def test_unstable_continuous_refused(self):
        sys = diag_system([0.1], [1.0], ContinuousInfinite(10.0))
        with pytest.raises(TailNotCertifiableError):
            certify_tail(sys)

    def test_suggested_truncation_is_sufficient(self):
        sys = diag_system([0.9], [1.0], DiscreteInfinite(5, tail_tol=1e-9))
        cert = certify_tail(sys)
        assert not cert.ok
        bigger = diag_system([0.9], [1.0], DiscreteInfinite(int(cert.suggested_truncation), 1e-9))
        assert certify_tail(bigger).ok


class TestQuadratureConvergence:
    def test_doubling_panels_gains_at_least_4x(self, rng):
        # low-order rule so the error is far from the machine floor
        a = np.array([[0.3]])
        sys = dense_system(a, [np.array([1.0])], ContinuousFinite(1.0), control=np.eye(1))

        def solve(panels):
            grid = gauss_legendre_grid(1.0, panels=panels, nodes_per_panel=2)
            u = ContinuousSignal(grid, np.cos(7.0 * grid.nodes)[:, None])
            return evolve_continuous(sys, [0.0], u, 1.0)[0]

        ref_grid = gauss_legendre_grid(1.0, panels=64, nodes_per_panel=8)
        u_ref = ContinuousSignal(ref_grid, np.cos(7.0 * ref_grid.nodes)[:, None])
        ref = evolve_continuous(sys, [0.0], u_ref, 1.0)[0]

        err2 = abs(solve(2) - ref)
        err4 = abs(solve(4) - ref)
        assert err2 / err4 >= 4.0
