"""Observability maps, Grammians, frame bounds, reconstruction, and duality.

The observability map Psi stacks one row per (time node, sampling vector)
pair, time-major.  Continuous rows carry the square root of their quadrature
weight so that ``||Psi x||^2`` is the quadrature approximation of the time
integral of ``||B e^{tA} x||^2``; discrete rows have weight one.  Row order is
part of the contract so observation files are reproducible byte-for-byte.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DEFAULT_EOB_REL_TOL,
    TailCertificate,
    _basis_conditioning,
    _finite_horizon,
    certify_tail,
    grid_for,
    theta_matrix,
)
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    NotApplicableError,
    NotObservableError,
    ParseError,
    SchemaError,
    TailNotCertifiableError,
)
from .model import (
    ContinuousFinite,
    ContinuousInfinite,
    DiagonalizableSystem,
    DiscreteFinite,
    DiscreteInfinite,
    SystemSpec,
    as_complex_vector,
    is_continuous,
    _expm_dense,
    matrix_rank,
    operator_norm,
    stability_classification,
)


@dataclass(frozen=True)
class ObservabilityMatrix:
    """Finite matrix realization of the observability map.

    ``matrix`` has one row per (time, sample) pair; ``index_map[i]`` is the
    (time_or_step, sample_label) pair of row i; ``weighting[i]`` is the
    square-root quadrature weight already multiplied into row i (1.0 for
    discrete kinds).
    """

    matrix: np.ndarray
    index_map: tuple
    weighting: np.ndarray
    tail_certificate: TailCertificate | None = None


def _time_samples(sys: SystemSpec):
    """(times, sqrt-weights, certificate) realizing the system's time domain."""
    time = sys.time
    if isinstance(time, DiscreteFinite):
        ks = list(range(time.gamma + 1))
        return ks, np.ones(len(ks)), None
    if isinstance(time, DiscreteInfinite):
        cert = certify_tail(sys)
        if not cert.ok:
            raise TailNotCertifiableError(
                f"tail bound {cert.tail_bound:.3g} exceeds tail_tol {time.tail_tol:g}; "
                f"suggested truncation_K >= {cert.suggested_truncation:g}"
            )
        ks = list(range(time.truncation_K + 1))
        return ks, np.ones(len(ks)), cert
    if isinstance(time, ContinuousFinite):
        grid = grid_for(time)
        return list(grid.nodes), np.sqrt(grid.weights), None
    if isinstance(time, ContinuousInfinite):
        cert = certify_tail(sys)
        if not cert.ok:
            raise TailNotCertifiableError(
                f"tail bound {cert.tail_bound:.3g} exceeds tail_tol {time.tail_tol:g}; "
                f"suggested horizon_T >= {cert.suggested_truncation:g}"
            )
        grid = grid_for(time)
        return list(grid.nodes), np.sqrt(grid.weights), cert
    raise DimensionMismatchError(f"unsupported time domain {time!r}")


def _row_blocks(sys: SystemSpec, times, discrete: bool):
    """Yield the |G| x dim block B f_t(A) for each time sample, in order."""
    b = sys.observation_matrix()
    op = sys.operator
    if isinstance(op, DiagonalizableSystem):
        mu = op.spectrum.mu
        if op.basis is None:
            w, vinv = b, None
        else:
            v = op.basis.entries
            w, vinv = b @ v, np.linalg.inv(v)
        if discrete:
            powers = np.ones_like(mu)
            for k in times:
                # times are 0..K in order; advance the eigenvalue powers lazily
                block = w * powers[None, :]
                yield block if vinv is None else block @ vinv
                powers = powers * mu
        else:
            for t in times:
                block = w * np.exp(mu * t)[None, :]
                yield block if vinv is None else block @ vinv
        return
    a = sys.dense_operator()
    if discrete:
        block = b.copy()
        for k in times:
            yield block
            block = block @ a
    else:
        for t in times:
            yield b @ _expm_dense(a * t)


def observability_matrix(sys: SystemSpec) -> ObservabilityMatrix:
    """Stacked, weighted realization of the observability map (time-major rows)."""
    times, sqrt_w, cert = _time_samples(sys)
    discrete = not is_continuous(sys.time)
    labels = sys.sampling.labels
    rows = []
    index_map = []
    weighting = []
    for t, sw, block in zip(times, sqrt_w, _row_blocks(sys, times, discrete)):
        rows.append(block if sw == 1.0 else sw * block)
        for label in labels:
            index_map.append((t, label))
            weighting.append(sw)
    return ObservabilityMatrix(
        matrix=np.vstack(rows),
        index_map=tuple(index_map),
        weighting=np.array(weighting),
        tail_certificate=cert,
    )


def grammian(sys: SystemSpec) -> np.ndarray:
    """Q = Psi* Psi, symmetrized on output (Hermitian positive semidefinite)."""
    psi = observability_matrix(sys).matrix
    q = psi.conj().T @ psi
    return (q + q.conj().T) / 2.0


def grammian_closed_form_diagonal(sys: SystemSpec) -> np.ndarray:
    """Exact infinite-horizon Grammian for diagonal dynamics (no truncation).

    Requires an orthonormal eigenbasis (none given, or a unitary one).  With
    coefficients b_n^(g) = <g, phi_n> the entries are Cauchy-kernel sums

        discrete:   Q_nm = sum_g b_n conj(b_m) / (1 - conj(mu_n) mu_m)
        continuous: Q_nm = sum_g b_n conj(b_m) * (-1) / (conj(mu_n) + mu_m)

    valid when all |mu_n| < 1 (discrete) / Re mu_n < 0 (continuous); the
    result is returned in standard coordinates.
    """
    op = sys.operator
    if not isinstance(op, DiagonalizableSystem):
        raise NotApplicableError("closed-form Grammians need a diagonalizable system")
    v = None
    if op.basis is not None:
        v = op.basis.entries
        if np.linalg.norm(v.conj().T @ v - np.eye(v.shape[0])) > 1e-10:
            raise DomainError("closed-form Grammians require an orthonormal eigenbasis")
    mu = op.spectrum.mu
    time = sys.time
    if isinstance(time, DiscreteInfinite):
        if np.any(np.abs(mu) >= 1.0):
            raise ConvergenceError("geometric series needs all |mu_n| < 1")
        kernel = 1.0 / (1.0 - np.conj(mu)[:, None] * mu[None, :])
    elif isinstance(time, ContinuousInfinite):
        if np.any(mu.real >= 0.0):
            raise ConvergenceError("exponential integral needs all Re mu_n < 0")
        kernel = -1.0 / (np.conj(mu)[:, None] + mu[None, :])
    else:
        raise NotApplicableError("closed-form Grammians apply to infinite time domains")
    q = np.zeros((len(mu), len(mu)), dtype=np.complex128)
    for g in sys.sampling.vectors:
        coeff = v.conj().T @ g if v is not None else np.asarray(g)
        q += (coeff[:, None] * np.conj(coeff)[None, :]) * kernel
    if v is not None:
        q = v @ q @ v.conj().T
    return (q + q.conj().T) / 2.0


@dataclass(frozen=True)
class FrameVerdicts:
    bessel_admissible: bool
    complete_aob: bool
    frame_eob: bool


@dataclass(frozen=True)
class FrameReport:
    """Frame bounds and the dictionary verdicts they imply.

    c1/c2 are the extreme eigenvalues of the Grammian (the frame bounds);
    rank is the numerical rank of the observability matrix.
    """

    c1: float
    c2: float
    rank: int
    condition_number: float
    verdicts: FrameVerdicts
    tail_certificate: TailCertificate | None = None
    eob_threshold: float = 0.0


def frame_report(sys: SystemSpec, tol: float | None = None, rank_tol: float | None = None) -> FrameReport:
    """Frame bounds from the Grammian spectrum plus Bessel/complete/frame verdicts.

    ``tol`` is an absolute threshold on c1 for the frame (EOB) verdict; by
    default the scale-invariant rule c1 > 1e-10 * c2 is used.  ``rank_tol``
    overrides the singular-value cutoff of the completeness rank.
    """
    obs = observability_matrix(sys)
    psi = obs.matrix
    q = psi.conj().T @ psi
    q = (q + q.conj().T) / 2.0
    eig = np.linalg.eigvalsh(q)
    c1 = float(max(eig[0], 0.0))
    c2 = float(max(eig[-1], 0.0))
    rank = matrix_rank(psi, rank_tol)
    dim = sys.dim
    threshold = DEFAULT_EOB_REL_TOL * c2 if tol is None else float(tol)
    frame_eob = bool(c1 > threshold)
    complete_aob = bool(rank == dim)
    if frame_eob and not complete_aob:
        # exactness implies completeness; reconcile borderline rank estimates
        complete_aob = True
    return FrameReport(
        c1=c1,
        c2=c2,
        rank=rank,
        condition_number=float(c2 / c1) if c1 > 0 else float("inf"),
        verdicts=FrameVerdicts(
            bessel_admissible=True,
            complete_aob=complete_aob,
            frame_eob=frame_eob,
        ),
        tail_certificate=obs.tail_certificate,
        eob_threshold=float(threshold),
    )


@dataclass(frozen=True)
class AdmissibilityReport:
    c2: float
    norm_bound: float
    satisfied: bool
    horizon: str


def admissibility_bound_check(sys: SystemSpec) -> AdmissibilityReport:
    """Check the upper frame bound against the a-priori operator-norm bound.

    Finite horizon tau:   c2 <= (e^(2 ||A|| tau) - 1) / (2 ||A||) * ||B||^2
    Infinite horizon:     c2 <= ||B||^2 / (-2 omega), with omega a certified
    negative decay rate (the logarithmic norm when it is negative, else the
    spectral abscissa with the squared eigenbasis conditioning folded in).
    Discrete kinds are refused: the bound is a continuous-time statement.
    """
    if not is_continuous(sys.time):
        raise NotApplicableError("the admissibility bound applies to continuous time domains")
    b_norm = float(np.linalg.norm(sys.observation_matrix(), 2))
    a = sys.dense_operator()
    a_norm = operator_norm(a)
    report = frame_report(sys)
    c2 = report.c2
    if isinstance(sys.time, ContinuousFinite):
        tau = sys.time.tau
        if a_norm < 1e-14:
            bound = tau * b_norm**2
        else:
            bound = float(np.expm1(2.0 * a_norm * tau) / (2.0 * a_norm)) * b_norm**2
        horizon = "finite"
    else:
        stab = stability_classification(sys.operator)
        if not stab.exponentially_stable:
            raise NotApplicableError(
                "the infinite-horizon admissibility bound requires an exponentially stable operator"
            )
        candidates = []
        log_norm = float(np.linalg.eigvalsh((a + a.conj().T) / 2.0)[-1])
        if log_norm < 0:
            candidates.append(b_norm**2 / (-2.0 * log_norm))
        kappa = _basis_conditioning(sys)
        if math.isfinite(kappa):
            candidates.append(kappa**2 * b_norm**2 / (-2.0 * stab.omega))
        if not candidates:
            raise NotApplicableError("no certified decay rate is available for this operator")
        bound = min(candidates)
        horizon = "infinite"
    return AdmissibilityReport(
        c2=c2,
        norm_bound=float(bound),
        satisfied=bool(c2 <= bound * (1.0 + 1e-8)),
        horizon=horizon,
    )


@dataclass(frozen=True)
class ObservationRecord:
    """Raw (unweighted) samples y[(t, g)] in observability-matrix row order."""

    values: np.ndarray
    index_map: tuple


def observe(sys: SystemSpec, x0) -> ObservationRecord:
    """Sample the trajectory of x0: y[(t, g)] = <x(t), g>, row order as Psi."""
    obs = observability_matrix(sys)
    x0 = as_complex_vector(x0, "initial state")
    raw = (obs.matrix @ x0) / obs.weighting
    return ObservationRecord(values=raw, index_map=obs.index_map)


@dataclass(frozen=True)
class Reconstruction:
    x0: np.ndarray
    residual: float


def reconstruct(sys: SystemSpec, y, tol: float | None = None) -> Reconstruction:
    """Recover the initial state from observations via the normal equations.

    Solves Q x = Psi* (weighted y) through the eigendecomposition of Q.
    Refuses (NotObservableError) when the lower frame bound is at or below
    the EOB threshold: without exactness there is no stable inverse.
    """
    obs = observability_matrix(sys)
    psi = obs.matrix
    if isinstance(y, ObservationRecord):
        y = y.values
    y = as_complex_vector(y, "observations")
    if len(y) != psi.shape[0]:
        raise DimensionMismatchError(
            f"{len(y)} observations for an index map of {psi.shape[0]} rows"
        )
    q = psi.conj().T @ psi
    q = (q + q.conj().T) / 2.0
    eig, vecs = np.linalg.eigh(q)
    c1 = float(max(eig[0], 0.0))
    c2 = float(max(eig[-1], 0.0))
    threshold = DEFAULT_EOB_REL_TOL * c2 if tol is None else float(tol)
    if c1 <= threshold:
        raise NotObservableError(
            f"lower frame bound {c1:.3g} <= threshold {threshold:.3g}: reconstruction refused"
        )
    weighted = obs.weighting * y
    rhs = vecs.conj().T @ (psi.conj().T @ weighted)
    x0 = vecs @ (rhs / eig)
    residual = float(np.linalg.norm(psi @ x0 - weighted))
    return Reconstruction(x0=x0, residual=residual)


# --- observation CSV ----------------------------------------------------------

_CSV_HEADER = ["time_or_step", "sample_label", "re", "im"]


def write_observations_csv(record: ObservationRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for (t, label), value in zip(record.index_map, record.values):
            t_text = repr(int(t)) if isinstance(t, (int, np.integer)) else repr(float(t))
            writer.writerow([t_text, label, repr(float(value.real)), repr(float(value.imag))])


def read_observations_csv(path) -> ObservationRecord:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ParseError(f"cannot read observations: {exc}") from exc
    if not rows or rows[0] != _CSV_HEADER:
        raise SchemaError(
            f"observation files start with the header {','.join(_CSV_HEADER)}", pointer="/0"
        )
    values = []
    index_map = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != 4:
            raise SchemaError("observation rows have 4 columns", pointer=f"/{i}")
        t_text, label, re_text, im_text = row
        try:
            t = int(t_text) if "." not in t_text and "e" not in t_text else float(t_text)
            value = complex(float(re_text), float(im_text))
        except ValueError as exc:
            raise SchemaError(f"bad number: {exc}", pointer=f"/{i}") from exc
        index_map.append((t, label))
        values.append(value)
    return ObservationRecord(values=np.array(values, dtype=np.complex128), index_map=tuple(index_map))


# --- duality -------------------------------------------------------------------


@dataclass(frozen=True)
class DualityReport:
    adjoint_identity_error: float
    unreflected_identity_error: float
    reflection_needed: bool
    eob_iff_dual_eco: bool
    aob_iff_dual_aco: bool
    sigma_min_psi: float
    sigma_min_dual_theta: float
    eob: bool
    dual_eco: bool
    aob: bool
    dual_aco: bool


def duality_check(sys: SystemSpec, horizon=None, tol: float | None = None) -> DualityReport:
    """Numerically realize the observability/controllability duality.

    Builds Psi for (A, B) and the controllability matrix Theta for the dual
    pair (A*, B*) from its own definition, and reports the adjoint identity
    error both with and without time reflection of the input signal (the two
    conventions differ by a reorder of the time blocks; the verdict duality
    is unaffected either way).
    """
    time = _finite_horizon(sys, horizon)
    work = SystemSpec(sys.operator, sys.sampling, time, sys.control)
    obs = observability_matrix(work)
    psi = obs.matrix
    dim = sys.dim
    a_h = work.dense_operator().conj().T
    b_h = work.observation_matrix().conj().T  # dual control operator B*
    theta = theta_matrix(a_h, b_h, time)

    # reflect the time blocks of Theta (each block is dim x |G|)
    g = len(sys.sampling)
    n_blocks = theta.shape[1] // g
    blocks = [theta[:, i * g : (i + 1) * g] for i in range(n_blocks)]
    theta_reflected = np.hstack(blocks[::-1])

    psi_h = psi.conj().T
    scale = max(float(np.linalg.norm(psi_h)), 1e-300)
    err_reflected = float(np.linalg.norm(psi_h - theta_reflected))
    err_plain = float(np.linalg.norm(psi_h - theta))
    reflection_needed = bool(
        err_reflected <= 1e-10 * scale and err_plain > 1e-10 * scale
    )

    fr = frame_report(work, tol=tol)
    s_psi = np.linalg.svd(psi, compute_uv=False)
    sigma_min_psi = float(s_psi[dim - 1]) if len(s_psi) >= dim else 0.0
    s_theta = np.linalg.svd(theta, compute_uv=False)
    sigma_min_theta = float(s_theta[dim - 1]) if len(s_theta) >= dim else 0.0
    sigma_max_theta = float(s_theta[0]) if len(s_theta) else 0.0
    if tol is None:
        dual_eco = sigma_min_theta**2 > DEFAULT_EOB_REL_TOL * sigma_max_theta**2
    else:
        dual_eco = sigma_min_theta**2 > float(tol)
    dual_aco = matrix_rank(theta) == dim

    return DualityReport(
        adjoint_identity_error=err_reflected,
        unreflected_identity_error=err_plain,
        reflection_needed=reflection_needed,
        eob_iff_dual_eco=bool(fr.verdicts.frame_eob == dual_eco),
        aob_iff_dual_aco=bool(fr.verdicts.complete_aob == dual_aco),
        sigma_min_psi=sigma_min_psi,
        sigma_min_dual_theta=sigma_min_theta,
        eob=fr.verdicts.frame_eob,
        dual_eco=bool(dual_eco),
        aob=fr.verdicts.complete_aob,
        dual_aco=bool(dual_aco),
    )
