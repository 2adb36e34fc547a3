import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import dense_system, diag_system, random_complex_matrix, standard_basis_family

from obsframe import (
    ContinuousFinite,
    DiagonalizableSystem,
    DiscreteFinite,
    DiscreteInfinite,
    NotSelfAdjointError,
    NotStronglyStableError,
    Operator,
    Spectrum,
    SystemSpec,
    bessel_admissibility_operator,
    discretization_sweep,
    frame_report,
    grammian,
    kalman_independence,
    selfadjoint_independence,
    stable_truncation_bound,
)
from obsframe.experiments import time_sampled_bounds


def scalar_decay_fixture():
    return diag_system([-1.0], [1.0], ContinuousFinite(1.0))


class TestDiscretizationSweep:
    def test_zero_dynamics_counts_nodes(self):
        sys = SystemSpec(
            DiagonalizableSystem(Spectrum(np.zeros(2, dtype=complex))),
            standard_basis_family(2),
            ContinuousFinite(1.0),
        )
        sweep = discretization_sweep(sys, [0.25, 0.125])
        for row in sweep.rows:
            n_nodes = int(math.ceil(1.0 / row.delta - 1e-12))
            assert_allclose([row.c1, row.c2], [n_nodes * row.delta] * 2, rtol=1e-12)
            assert row.is_frame

    def test_scalar_riemann_sum_oracle(self):
        sys = scalar_decay_fixture()
        deltas = [0.25, 0.125, 0.0625, 0.03125]
        sweep = discretization_sweep(sys, deltas)
        for row in sweep.rows:
            n_nodes = int(math.ceil(1.0 / row.delta - 1e-12))
            oracle = row.delta * sum(math.exp(-2.0 * j * row.delta) for j in range(n_nodes))
            assert_allclose(row.c1, oracle, rtol=1e-12)
        # reference equals the closed-form integral
        assert_allclose(sweep.reference.c1, (1 - math.exp(-2)) / 2, rtol=1e-10)

    def test_halving_reduces_error_first_order(self):
        sys = scalar_decay_fixture()
        sweep = discretization_sweep(sys, [1 / 4, 1 / 8, 1 / 16, 1 / 32])
        gaps = [row.c1_ref_gap for row in sweep.rows]  # descending deltas
        for coarse, fine in zip(gaps, gaps[1:]):
            assert 1.5 <= coarse / fine <= 3.0
        assert sweep.all_frames and sweep.frame_threshold == 0.25

    def test_random_nonuniform_partitions_stay_frames(self, rng):
        # arbitrary partitions with small mesh still give frames
        sys = scalar_decay_fixture()
        reference = frame_report(sys)
        for _ in range(10):
            cuts = np.sort(rng.uniform(0.0, 1.0, 24))
            times = np.concatenate([[0.0], cuts])
            weights = np.diff(np.concatenate([times, [1.0]]))
            keep = weights > 1e-9
            c1, _ = time_sampled_bounds(sys, times[keep], weights[keep])
            assert c1 > 1e-10 * reference.c2


class TestKalmanIndependence:
    def test_jordan_block_top_row(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        sys = dense_system(a, [np.array([1.0, 0.0])], ContinuousFinite(1.0))
        rep = kalman_independence(sys, taus=[0.1, 1.0, 10.0])
        assert rep.kalman_rank == 2
        assert rep.ranks == (2, 2, 2)
        assert rep.discrete_rank == 2
        assert rep.all_equal

    def test_jordan_block_bottom_row(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        sys = dense_system(a, [np.array([0.0, 1.0])], ContinuousFinite(1.0))
        rep = kalman_independence(sys, taus=[0.1, 1.0, 10.0])
        assert rep.kalman_rank == 1
        assert rep.ranks == (1, 1, 1)
        assert rep.all_equal

    def test_repeated_eigenvalue_single_vector(self, rng):
        a = np.eye(2)
        b = rng.standard_normal(2)
        sys = dense_system(a, [b], ContinuousFinite(1.0))
        rep = kalman_independence(sys, taus=[0.5, 2.0])
        assert rep.ranks == (1, 1) and rep.kalman_rank == 1 and rep.all_equal

    def test_rank_stabilizes_by_cayley_hamilton(self, rng):
        from obsframe.experiments import _stacked_discrete_rows
        from obsframe.model import matrix_rank

        a = random_complex_matrix(rng, 4)
        b = np.conj(rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4)))
        ranks = [matrix_rank(_stacked_discrete_rows(a, b, k)) for k in range(8)]
        assert all(r2 >= r1 for r1, r2 in zip(ranks, ranks[1:]))
        assert len(set(ranks[3:])) == 1  # constant for k >= n-1


class TestSelfAdjointIndependence:
    def test_distinct_modes_agree_positively(self):
        sys = diag_system([-1.0, -2.0], [1.0, 1.0], ContinuousFinite(1.0))
        rep = selfadjoint_independence(sys, taus=[0.5, 1.0, 2.0])
        assert rep.frame_verdicts == (True, True, True)
        assert rep.all_agree
        assert all(c > 0 for c in rep.c1_curve)

    def test_degenerate_modes_agree_negatively(self):
        sys = diag_system([-1.0, -1.0], [1.0, 1.0], ContinuousFinite(1.0))
        rep = selfadjoint_independence(sys, taus=[0.5, 1.0, 2.0])
        assert rep.frame_verdicts == (False, False, False)
        assert rep.all_agree

    def test_non_hermitian_rejected(self, rng):
        a = random_complex_matrix(rng, 2) + np.array([[0, 1.0], [0, 0]])
        sys = dense_system(a, [np.ones(2)], ContinuousFinite(1.0))
        with pytest.raises(NotSelfAdjointError):
            selfadjoint_independence(sys, taus=[1.0])


class TestStableTruncationBound:
    def test_scalar_half(self):
        sys = diag_system([0.5], [1.0], DiscreteInfinite(64, tail_tol=1e-12))
        rep = stable_truncation_bound(sys)
        assert rep.gamma_star == 0
        assert_allclose(rep.predicted_lower, 1.0, rtol=1e-12)
        assert_allclose(rep.measured_c1, 1.0, rtol=1e-12)
        assert rep.ok

    def test_scalar_point_nine(self):
        sys = diag_system([0.9], [1.0], DiscreteInfinite(300, tail_tol=1e-12))
        rep = stable_truncation_bound(sys)
        assert rep.gamma_star == 0
        assert_allclose(rep.c1_infinite, 5.263157894736843, rtol=1e-10)
        assert_allclose(rep.predicted_lower, 1.0, rtol=1e-9)
        assert rep.ok

    def test_two_mode_against_truncated_grammian_oracle(self):
        sys = diag_system([0.5, 0.9], [1.0, 0.7], DiscreteInfinite(400, tail_tol=1e-12))
        rep = stable_truncation_bound(sys)
        # oracle: eigenvalues of the explicitly truncated Grammian at gamma*
        finite = diag_system([0.5, 0.9], [1.0, 0.7], DiscreteFinite(rep.gamma_star))
        q = grammian(finite)
        lam_min = float(np.linalg.eigvalsh(q)[0])
        assert_allclose(rep.measured_c1, lam_min, rtol=1e-12)
        assert rep.ok and rep.measured_c1 >= rep.predicted_lower * (1 - 1e-9)

    def test_contractive_norm_required(self, rng):
        # spectral radius < 1 but operator norm > 1: refused, both reported
        a = np.array([[0.5, 5.0], [0.0, 0.5]])
        sys = dense_system(a, [np.ones(2)], DiscreteInfinite(50))
        with pytest.raises(NotStronglyStableError, match="spectral radius"):
            stable_truncation_bound(sys)


class TestBesselAdmissibilityOperator:
    def test_zero_dynamics_scales_identity(self):
        sys = dense_system(np.zeros((2, 2)), [np.ones(2)], ContinuousFinite(0.7))
        rep = bessel_admissibility_operator(sys)
        assert_allclose(rep.t_matrix, 0.7 * np.eye(2), atol=1e-14)
        assert rep.invertible
        assert_allclose(rep.spectral_certificate, [0.7, 0.7], rtol=1e-12)

    def test_scalar_exponential_integral(self):
        sys = dense_system(np.array([[1.0]]), [np.ones(1)], ContinuousFinite(1.0))
        rep = bessel_admissibility_operator(sys)
        assert_allclose(rep.t_matrix[0, 0].real, 1.718281828459045, rtol=1e-12)
        assert rep.series_vs_quadrature_error <= 1e-10
        assert rep.largest_certified_tau == 1.0

    def test_full_turn_frequency_not_invertible(self):
        sys = dense_system(np.array([[2j * np.pi]]), [np.ones(1)], ContinuousFinite(1.0))
        rep = bessel_admissibility_operator(sys)
        assert not rep.invertible
        assert rep.min_abs_certificate <= 1e-10
        assert 0.0 < rep.largest_certified_tau < 1.0

    def test_series_matches_quadrature_randomly(self, rng):
        for _ in range(10):
            dim = int(rng.integers(1, 5))
            a = random_complex_matrix(rng, dim)
            tau = float(rng.uniform(0.1, 5.0 / max(np.linalg.norm(a, 2), 0.1)))
            rep = bessel_admissibility_operator(Operator(a), tau=tau)
            t_norm = np.linalg.norm(rep.t_matrix)
            assert rep.series_vs_quadrature_error <= 1e-8 * max(t_norm, 1e-300)
