"""Theorem-driven numerical experiments built on the core operations."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import gauss_legendre_grid
from .errors import (
    DomainError,
    NotApplicableError,
    NotObservableError,
    NotSelfAdjointError,
    NotStronglyStableError,
)
from .model import (
    ContinuousFinite,
    DiscreteFinite,
    DiscreteInfinite,
    SystemSpec,
    _expm_dense,
    dense_matrix,
    matrix_rank,
    operator_norm,
    stability_classification,
)
from .observability import (
    FrameReport,
    _row_blocks,
    frame_report,
    grammian,
    grammian_closed_form_diagonal,
)


def _frame_bounds_from_rows(psi: np.ndarray):
    q = psi.conj().T @ psi
    q = (q + q.conj().T) / 2.0
    eig = np.linalg.eigvalsh(q)
    return float(max(eig[0], 0.0)), float(max(eig[-1], 0.0))


def time_sampled_bounds(sys: SystemSpec, times, weights):
    """Frame bounds of the system sampled at explicit continuous times.

    Each time t contributes the rows sqrt(w_t) * B e^{tA}.
    """
    times = list(times)
    weights = np.asarray(weights, dtype=float)
    rows = [
        math.sqrt(w) * block
        for w, block in zip(weights, _row_blocks(sys, times, discrete=False))
    ]
    return _frame_bounds_from_rows(np.vstack(rows))


@dataclass(frozen=True)
class SweepRow:
    delta: float
    c1: float
    c2: float
    c1_ref_gap: float
    c2_ref_gap: float
    is_frame: bool


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    reference: FrameReport
    frame_threshold: float
    all_frames: bool


def discretization_sweep(sys: SystemSpec, deltas, tol: float | None = None) -> SweepResult:
    """Replace continuous sampling by uniform time grids of spacing delta.

    For each delta the grid {0, delta, 2 delta, ...} inside [0, tau) is
    weighted by delta per sample; the resulting frame bounds are compared
    against the continuous reference.  Requires the continuous baseline to be
    a frame.  ``frame_threshold`` is the largest tested delta below which
    every tested grid is a frame.
    """
    if not isinstance(sys.time, ContinuousFinite):
        raise NotApplicableError("discretization sweeps need a continuous finite time domain")
    reference = frame_report(sys, tol=tol)
    if not reference.verdicts.frame_eob:
        raise NotObservableError("the continuous baseline is not a frame; nothing to discretize")
    tau = sys.time.tau
    rows = []
    for delta in sorted((float(d) for d in deltas), reverse=True):
        n_nodes = int(math.ceil(tau / delta - 1e-12))
        times = [j * delta for j in range(n_nodes)]
        c1, c2 = time_sampled_bounds(sys, times, [delta] * n_nodes)
        threshold = (1e-10 * c2) if tol is None else float(tol)
        rows.append(
            SweepRow(
                delta=delta,
                c1=c1,
                c2=c2,
                c1_ref_gap=abs(c1 - reference.c1),
                c2_ref_gap=abs(c2 - reference.c2),
                is_frame=bool(c1 > threshold),
            )
        )
    frame_threshold = 0.0
    for row in rows:  # descending deltas: find the coarsest spacing after which all pass
        if all(r.is_frame for r in rows if r.delta <= row.delta):
            frame_threshold = row.delta
            break
    return SweepResult(
        rows=tuple(rows),
        reference=reference,
        frame_threshold=frame_threshold,
        all_frames=bool(all(r.is_frame for r in rows)),
    )


@dataclass(frozen=True)
class KalmanReport:
    taus: tuple
    ranks: tuple
    discrete_rank: int
    kalman_rank: int
    all_equal: bool


def _stacked_discrete_rows(a: np.ndarray, b: np.ndarray, k_max: int) -> np.ndarray:
    rows = []
    block = b.copy()
    for _ in range(k_max + 1):
        rows.append(block)
        block = block @ a
    return np.vstack(rows)


def kalman_independence(
    sys: SystemSpec, taus, truncation_K: int | None = None, rank_tol: float | None = None
) -> KalmanReport:
    """Rank of the observability Grammian is one number, however you sample.

    Computes rank(Q_tau) for each tau (via the observability matrix), the
    rank of the stacked rows B, BA, ..., BA^(n-1), and the rank of the
    discrete family truncated at K >= n-1; they must all coincide.
    """
    a = sys.dense_operator()
    b = sys.observation_matrix()
    n = a.shape[0]
    if truncation_K is None:
        truncation_K = n - 1
    if truncation_K < n - 1:
        raise NotApplicableError(f"the discrete truncation needs K >= n-1 = {n - 1}")
    ranks = []
    panels = getattr(sys.time, "panels", 8)
    nodes = getattr(sys.time, "nodes_per_panel", 8)
    for tau in taus:
        grid = gauss_legendre_grid(float(tau), panels, nodes)
        rows = [
            math.sqrt(w) * block
            for w, block in zip(
                grid.weights, _row_blocks(sys, list(grid.nodes), discrete=False)
            )
        ]
        ranks.append(matrix_rank(np.vstack(rows), rank_tol))
    kalman_rank = matrix_rank(_stacked_discrete_rows(a, b, n - 1), rank_tol)
    discrete_rank = matrix_rank(_stacked_discrete_rows(a, b, int(truncation_K)), rank_tol)
    every = ranks + [kalman_rank, discrete_rank]
    return KalmanReport(
        taus=tuple(float(t) for t in taus),
        ranks=tuple(int(r) for r in ranks),
        discrete_rank=int(discrete_rank),
        kalman_rank=int(kalman_rank),
        all_equal=bool(all(r == every[0] for r in every)),
    )


@dataclass(frozen=True)
class SelfAdjointReport:
    taus: tuple
    frame_verdicts: tuple
    c1_curve: tuple
    all_agree: bool


def selfadjoint_independence(sys: SystemSpec, taus, tol: float | None = None) -> SelfAdjointReport:
    """Frame verdicts of a self-adjoint system across sampling horizons.

    Requires ||A - A*|| <= 1e-12 ||A||; the verdict is expected to be the
    same at every tau, and the c1(tau) curve is reported for inspection.
    """
    a = sys.dense_operator()
    scale = max(float(np.linalg.norm(a)), 1e-300)
    if float(np.linalg.norm(a - a.conj().T)) > 1e-12 * scale:
        raise NotSelfAdjointError("operator is not Hermitian within 1e-12 relative")
    panels = getattr(sys.time, "panels", 8)
    nodes = getattr(sys.time, "nodes_per_panel", 8)
    verdicts = []
    c1s = []
    for tau in taus:
        work = SystemSpec(sys.operator, sys.sampling, ContinuousFinite(float(tau), panels, nodes), sys.control)
        fr = frame_report(work, tol=tol)
        verdicts.append(fr.verdicts.frame_eob)
        c1s.append(fr.c1)
    return SelfAdjointReport(
        taus=tuple(float(t) for t in taus),
        frame_verdicts=tuple(bool(v) for v in verdicts),
        c1_curve=tuple(c1s),
        all_agree=bool(len(set(verdicts)) <= 1),
    )


@dataclass(frozen=True)
class TruncationBoundReport:
    gamma_star: int
    predicted_lower: float
    measured_c1: float
    ok: bool
    c1_infinite: float
    c2_infinite: float
    operator_norm: float


def stable_truncation_bound(sys: SystemSpec, tail_tol: float = 1e-12) -> TruncationBoundReport:
    """Smallest finite horizon certified by the infinite-time frame bounds.

    With infinite-horizon bounds c1, c2 and nu = ||A|| < 1, truncating at
    gamma keeps the lower bound at least c1 - c2 nu^(2(gamma+1)); gamma_star
    is the first gamma making that positive, and the measured lambda_min of
    the truncated Grammian must not fall below it.

    The gate is the operator norm, not the spectral radius: the bound's
    mechanism needs ||A^k|| <= ||A||^k, so norms >= 1 are refused even when
    the spectral radius is below one.
    """
    nu = operator_norm(sys.operator)
    if nu >= 1.0:
        rho = stability_classification(sys.operator).spectral_radius
        raise NotStronglyStableError(
            f"||A|| = {nu:.6g} >= 1 (spectral radius {rho:.6g}); "
            "the truncation bound needs a contractive operator norm"
        )
    # infinite-horizon bounds: closed form when exact, else certified truncation
    try:
        q_inf = grammian_closed_form_diagonal(
            SystemSpec(sys.operator, sys.sampling, DiscreteInfinite(1, 1.0), sys.control)
        )
    except (NotApplicableError, DomainError):
        b_norm = float(np.linalg.norm(sys.observation_matrix(), 2))
        factor = b_norm**2 / (1.0 - nu**2)
        k_needed = max(1, math.ceil(math.log(tail_tol / factor) / (2 * math.log(nu)) - 1)) if nu > 0 else 1
        q_inf = grammian(
            SystemSpec(sys.operator, sys.sampling, DiscreteInfinite(k_needed, tail_tol), sys.control)
        )
    eig = np.linalg.eigvalsh(q_inf)
    c1, c2 = float(max(eig[0], 0.0)), float(eig[-1])
    if c1 <= 0.0:
        raise NotObservableError("infinite-horizon lower frame bound is zero; no finite horizon is certified")
    gamma = 0
    while c1 - c2 * nu ** (2 * (gamma + 1)) <= 0.0:
        gamma += 1
        if gamma > 10_000_000:
            raise NotObservableError("no finite horizon certified below the iteration cap")
    predicted = c1 - c2 * nu ** (2 * (gamma + 1))
    finite = SystemSpec(sys.operator, sys.sampling, DiscreteFinite(gamma), sys.control)
    measured = frame_report(finite).c1
    return TruncationBoundReport(
        gamma_star=int(gamma),
        predicted_lower=float(predicted),
        measured_c1=float(measured),
        ok=bool(measured >= predicted * (1.0 - 1e-9)),
        c1_infinite=c1,
        c2_infinite=c2,
        operator_norm=nu,
    )


@dataclass(frozen=True)
class BesselOperatorReport:
    t_matrix: np.ndarray
    series_vs_quadrature_error: float
    invertible: bool
    spectral_certificate: tuple
    min_abs_certificate: float
    largest_certified_tau: float


def _g_scalar(tau: float, z: complex) -> complex:
    """(e^(tau z) - 1) / z with the z -> 0 limit tau."""
    w = tau * z
    if abs(w) < 1e-8:
        return tau * (1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0)
    return (cmath.exp(w) - 1.0) / z


def _g_operator(a: np.ndarray, tau: float) -> np.ndarray:
    """integral_0^tau e^{tA} dt by scaling and doubling of the series.

    On the scaled interval h the series T_h = h sum_k (hA)^k / (k+1)! is
    summed; doubling uses T_{2h} = (I + E_h) T_h with E the exponential.
    """
    n = a.shape[0]
    norm = float(np.linalg.norm(a, 2)) * tau
    squarings = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    h = tau / (2.0**squarings)
    ha = a * h
    eye = np.eye(n, dtype=np.complex128)
    t_mat = eye / math.factorial(18)
    for k in range(16, -1, -1):
        t_mat = ha @ t_mat + eye / math.factorial(k + 1)
    t_mat = h * t_mat
    e_mat = _expm_dense(ha)
    for _ in range(squarings):
        t_mat = (eye + e_mat) @ t_mat
        e_mat = e_mat @ e_mat
    return t_mat


def bessel_admissibility_operator(
    sys_or_operator,
    tau: float | None = None,
    tol: float = 1e-10,
    tau_max: float | None = None,
    panels: int = 8,
    nodes_per_panel: int = 8,
) -> BesselOperatorReport:
    """The averaged flow T = integral_0^tau e^{tA} dt, computed two ways.

    T is evaluated by the matrix series of g(tau, z) = (e^(tau z) - 1)/z and
    by composite quadrature; their difference is reported.  T is certified
    invertible when min_i |g(tau, mu_i)| > tol over the eigenvalues of A
    (for small enough tau this always holds; the report includes the largest
    tau in [0, tau_max] a 40-step bisection can certify).
    """
    if isinstance(sys_or_operator, SystemSpec):
        a = sys_or_operator.dense_operator()
        if tau is None and isinstance(sys_or_operator.time, ContinuousFinite):
            tau = sys_or_operator.time.tau
            panels = sys_or_operator.time.panels
            nodes_per_panel = sys_or_operator.time.nodes_per_panel
    else:
        a = dense_matrix(sys_or_operator)
    if tau is None or not (tau > 0):
        raise NotApplicableError("a positive tau is required")
    tau = float(tau)
    if tau_max is None:
        tau_max = tau

    t_series = _g_operator(a, tau)
    grid = gauss_legendre_grid(tau, panels, nodes_per_panel)
    t_quad = np.zeros_like(a)
    for s, w in zip(grid.nodes, grid.weights):
        t_quad = t_quad + w * _expm_dense(a * s)
    error = float(np.linalg.norm(t_series - t_quad))

    mu = np.linalg.eigvals(a)

    def certified(t: float) -> tuple:
        vals = np.array([_g_scalar(t, z) for z in mu])
        return bool(np.min(np.abs(vals)) > tol), vals

    ok, vals = certified(tau)

    # bisect for the largest certified tau in (0, tau_max]
    if certified(tau_max)[0]:
        largest = float(tau_max)
    else:
        lo = tau_max
        found = False
        for _ in range(60):
            lo /= 2.0
            if certified(lo)[0]:
                found = True
                break
        if not found:
            largest = 0.0
        else:
            hi = tau_max
            for _ in range(40):
                mid = (lo + hi) / 2.0
                if certified(mid)[0]:
                    lo = mid
                else:
                    hi = mid
            largest = float(lo)

    return BesselOperatorReport(
        t_matrix=t_series,
        series_vs_quadrature_error=error,
        invertible=bool(ok),
        spectral_certificate=tuple(complex(v) for v in vals),
        min_abs_certificate=float(np.min(np.abs(vals))),
        largest_certified_tau=largest,
    )
