"""Trajectories, controllability maps, and quadrature/truncation certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    QuadratureError,
    TailNotCertifiableError,
)
from .model import (
    ContinuousFinite,
    ContinuousInfinite,
    DiagonalizableSystem,
    DiscreteFinite,
    DiscreteInfinite,
    SystemSpec,
    TimeDomain,
    _expm_dense,
    as_complex_vector,
    matrix_rank,
    operator_norm,
    spectral_decomposition,
    stability_classification,
)

DEFAULT_EOB_REL_TOL = 1e-10


@dataclass(frozen=True)
class QuadratureGrid:
    """Composite quadrature rule on [0, span].

    Nodes are strictly increasing, weights positive and summing to span
    (within 1e-12 relative).  The node values are the contract: continuous
    signals are represented by their values at exactly these nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    rule: str
    span: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DimensionMismatchError("nodes and weights must be matching 1-D arrays")
        if np.any(np.diff(nodes) <= 0):
            raise QuadratureError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise QuadratureError("quadrature weights must be positive")
        total = float(np.sum(weights))
        if abs(total - self.span) > 1e-12 * max(abs(self.span), 1.0):
            raise QuadratureError(
                f"weights sum to {total!r}, expected the span {self.span!r}"
            )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.nodes)


def gauss_legendre_grid(span: float, panels: int = 8, nodes_per_panel: int = 8) -> QuadratureGrid:
    """Composite Gauss-Legendre rule on [0, span]."""
    if not (span > 0 and math.isfinite(span)):
        raise QuadratureError("span must be positive and finite")
    if panels < 1 or nodes_per_panel < 2:
        raise QuadratureError("need panels >= 1 and nodes_per_panel >= 2")
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    h = span / panels
    nodes = []
    weights = []
    for p in range(panels):
        a = p * h
        nodes.append(a + (x + 1.0) * (h / 2.0))
        weights.append(w * (h / 2.0))
    return QuadratureGrid(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        rule=f"composite-gauss-legendre:{panels}x{nodes_per_panel}",
        span=float(span),
    )


def grid_for(time: TimeDomain) -> QuadratureGrid:
    if isinstance(time, ContinuousFinite):
        return gauss_legendre_grid(time.tau, time.panels, time.nodes_per_panel)
    if isinstance(time, ContinuousInfinite):
        return gauss_legendre_grid(time.horizon_T, time.panels, time.nodes_per_panel)
    raise QuadratureError("quadrature grids apply to continuous time domains only")


@dataclass(frozen=True)
class DiscreteSignal:
    """Control values u(0), u(1), ..., one row per step."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.values, dtype=np.complex128))
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ContinuousSignal:
    """Control values at the nodes of a quadrature grid (one row per node)."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.values, dtype=np.complex128))
        if v.shape[0] != len(self.grid):
            raise DimensionMismatchError(
                f"signal has {v.shape[0]} rows for a grid of {len(self.grid)} nodes"
            )
        object.__setattr__(self, "values", v)


def _control_matrix(sys: SystemSpec) -> np.ndarray:
    if sys.control is None:
        raise DimensionMismatchError("system has no control operator")
    return sys.control


def evolve_discrete(sys: SystemSpec, x0, u: DiscreteSignal | None, k: int) -> np.ndarray:
    """State x(k) = A^k x0 + sum_{j<k} A^(k-1-j) C u(j)."""
    if int(k) != k or k < 0:
        raise DimensionMismatchError("step index must be a nonnegative integer")
    k = int(k)
    x0 = as_complex_vector(x0, "initial state")
    a = sys.dense_operator()
    if len(x0) != a.shape[0]:
        raise DimensionMismatchError("initial state dimension mismatch")
    if u is None or np.all(u.values == 0):
        x = x0
        for _ in range(k):
            x = a @ x
        return x
    c = _control_matrix(sys)
    if u.values.shape[1] != c.shape[1]:
        raise DimensionMismatchError("control values do not match the control operator width")
    if len(u) < k:
        raise DimensionMismatchError(f"signal supplies {len(u)} steps, need {k}")
    x = x0
    for j in range(k):
        x = a @ x + c @ u.values[j]
    return x


def evolve_continuous(sys: SystemSpec, x0, u: ContinuousSignal | None, t: float) -> np.ndarray:
    """Mild solution x(t) = e^{tA} x0 + integral_0^t e^{(t-s)A} C u(s) ds.

    With u = None the result is the exact homogeneous flow (no quadrature).
    The signal's grid must span exactly [0, t].
    """
    x0 = as_complex_vector(x0, "initial state")
    a = sys.dense_operator()
    if len(x0) != a.shape[0]:
        raise DimensionMismatchError("initial state dimension mismatch")
    hom = _expm_dense(a * t) @ x0
    if u is None:
        return hom
    return hom + controllability_map(sys, u, t)


def controllability_map(sys: SystemSpec, u, horizon) -> np.ndarray:
    """Theta(horizon) u: the reachable-state contribution of the input signal."""
    c = _control_matrix(sys)
    a = sys.dense_operator()
    if isinstance(u, DiscreteSignal):
        k = int(horizon)
        if k < 0:
            raise DimensionMismatchError("horizon must be nonnegative")
        if len(u) < k + 1:
            raise DimensionMismatchError(f"signal supplies {len(u)} steps, need {k + 1}")
        if u.values.shape[1] != c.shape[1]:
            raise DimensionMismatchError("control values do not match the control operator width")
        # sum_{j=0}^{k} A^{k-j} C u(j), accumulated as x <- A x + C u(j)
        x = c @ u.values[0]
        for j in range(1, k + 1):
            x = a @ x + c @ u.values[j]
        return x
    if isinstance(u, ContinuousSignal):
        t = float(horizon)
        if abs(u.grid.span - t) > 1e-12 * max(1.0, abs(t)):
            raise QuadratureError(
                f"signal grid spans [0, {u.grid.span!r}], expected [0, {t!r}]"
            )
        if u.values.shape[1] != c.shape[1]:
            raise DimensionMismatchError("control values do not match the control operator width")
        x = np.zeros(a.shape[0], dtype=np.complex128)
        for s, w, row in zip(u.grid.nodes, u.grid.weights, u.values):
            x = x + w * (_expm_dense(a * (t - s)) @ (c @ row))
        return x
    raise DimensionMismatchError("unsupported signal type")


def theta_matrix(a: np.ndarray, c: np.ndarray, time: TimeDomain) -> np.ndarray:
    """Matrix of Theta(horizon) on the discretized control space.

    Discrete horizon gamma: blocks [A^gamma C | ... | A C | C] (time-major in j).
    Continuous horizon tau: blocks sqrt(w_j) e^{(tau - s_j) A} C, so that
    singular values are taken with respect to the discretized L^2 norm.
    """
    if isinstance(time, DiscreteFinite):
        blocks = []
        power = c
        for _ in range(time.gamma + 1):
            blocks.append(power)
            power = a @ power
        blocks.reverse()  # j runs 0..gamma: A^{gamma-j} C
        return np.hstack(blocks)
    if isinstance(time, ContinuousFinite):
        grid = grid_for(time)
        blocks = [
            math.sqrt(w) * (_expm_dense(a * (time.tau - s)) @ c)
            for s, w in zip(grid.nodes, grid.weights)
        ]
        return np.hstack(blocks)
    raise DimensionMismatchError("controllability matrices require a finite horizon")


@dataclass(frozen=True)
class ControllabilityReport:
    eco: bool
    aco: bool
    reach_rank: int
    sigma_min: float
    sigma_max: float


def _finite_horizon(sys: SystemSpec, horizon) -> TimeDomain:
    if horizon is None:
        time = sys.time
        if isinstance(time, (DiscreteFinite, ContinuousFinite)):
            return time
        raise DimensionMismatchError("an explicit finite horizon is required for infinite time domains")
    if isinstance(sys.time, (DiscreteFinite, DiscreteInfinite)):
        return DiscreteFinite(int(horizon))
    panels = getattr(sys.time, "panels", 8)
    nodes = getattr(sys.time, "nodes_per_panel", 8)
    return ContinuousFinite(float(horizon), panels, nodes)


def controllability_tests(
    sys: SystemSpec, horizon=None, tol: float | None = None, rank_tol: float | None = None
) -> ControllabilityReport:
    """Exact/approximate controllability of (A, C) at a finite horizon.

    eco <=> the dim-th singular value of the Theta matrix is positive:
    sigma_dim^2 > tol_rel * sigma_max^2 with tol_rel defaulting to the
    frame-bound tolerance (so dual verdicts use one rule).  An explicit
    ``tol`` is an absolute threshold on sigma_dim instead.
    aco <=> row rank equals the state dimension (``rank_tol`` overrides the
    singular-value cutoff).  At finite dimension the two verdicts coincide;
    both are reported.
    """
    time = _finite_horizon(sys, horizon)
    a = sys.dense_operator()
    c = _control_matrix(sys)
    theta = theta_matrix(a, c, time)
    s = np.linalg.svd(theta, compute_uv=False)
    dim = a.shape[0]
    sigma_min = float(s[dim - 1]) if len(s) >= dim else 0.0
    sigma_max = float(s[0]) if len(s) else 0.0
    if tol is None:
        eco = sigma_min**2 > DEFAULT_EOB_REL_TOL * sigma_max**2
    else:
        eco = sigma_min > tol
    rank = matrix_rank(theta, rank_tol)
    return ControllabilityReport(
        eco=bool(eco),
        aco=bool(rank == dim),
        reach_rank=rank,
        sigma_min=sigma_min,
        sigma_max=sigma_max,
    )


@dataclass(frozen=True)
class TailCertificate:
    """Certified bound on the truncated part of an infinite-horizon Grammian."""

    ok: bool
    tail_bound: float
    suggested_truncation: float
    method: str
    conditioning: float


def _basis_conditioning(sys: SystemSpec) -> float:
    op = sys.operator
    if isinstance(op, DiagonalizableSystem):
        return op.condition_number
    try:
        return spectral_decomposition(op).condition_number
    except Exception:
        return float("nan")


def certify_tail(sys: SystemSpec, time: TimeDomain | None = None) -> TailCertificate:
    """Certify that truncating the infinite horizon stays below tail_tol.

    Discrete (spectral radius rho < 1):
        tail <= ||B||^2 * kappa^2 * rho^(2(K+1)) / (1 - rho^2)
    Continuous (spectral abscissa omega < 0):
        tail <= ||B||^2 * kappa^2 * e^(2 omega T) / (-2 omega)
    where kappa is the eigenbasis condition number (1 for orthonormal).
    Unstable operators are refused: quadrature/truncation is never silent.
    """
    time = sys.time if time is None else time
    b_norm = float(np.linalg.norm(sys.observation_matrix(), 2))
    stab = stability_classification(sys.operator)
    kappa = _basis_conditioning(sys)

    if isinstance(time, DiscreteInfinite):
        rho = stab.spectral_radius
        if rho < 1.0 and math.isfinite(kappa):
            factor = b_norm**2 * kappa**2 / (1.0 - rho**2)
            tail = factor * rho ** (2 * (time.truncation_K + 1))
            if factor > 0 and rho > 0:
                k_needed = max(1, math.ceil(math.log(time.tail_tol / factor) / (2 * math.log(rho)) - 1))
            else:
                k_needed = 1
            return TailCertificate(
                ok=bool(tail <= time.tail_tol),
                tail_bound=float(tail),
                suggested_truncation=float(k_needed),
                method="geometric-tail",
                conditioning=kappa,
            )
        norm = operator_norm(sys.operator)
        if norm < 1.0:
            factor = b_norm**2 / (1.0 - norm**2)
            tail = factor * norm ** (2 * (time.truncation_K + 1))
            k_needed = max(1, math.ceil(math.log(time.tail_tol / factor) / (2 * math.log(norm)) - 1)) if norm > 0 else 1
            return TailCertificate(
                ok=bool(tail <= time.tail_tol),
                tail_bound=float(tail),
                suggested_truncation=float(k_needed),
                method="norm-tail",
                conditioning=1.0,
            )
        raise TailNotCertifiableError(
            f"spectral radius {rho:.6g} >= 1: the discrete infinite horizon has no certified truncation"
        )

    if isinstance(time, ContinuousInfinite):
        omega = stab.omega
        if omega < 0.0 and math.isfinite(kappa):
            factor = b_norm**2 * kappa**2 / (-2.0 * omega)
            tail = factor * math.exp(2.0 * omega * time.horizon_T)
            t_needed = math.log(time.tail_tol / factor) / (2.0 * omega) if factor > 0 else 1.0
            return TailCertificate(
                ok=bool(tail <= time.tail_tol),
                tail_bound=float(tail),
                suggested_truncation=float(max(t_needed, 0.0)),
                method="exponential-tail",
                conditioning=kappa,
            )
        raise TailNotCertifiableError(
            f"spectral abscissa {omega:.6g} >= 0: the continuous infinite horizon has no certified truncation"
        )

    raise TailNotCertifiableError("tail certificates apply to infinite time domains only")
