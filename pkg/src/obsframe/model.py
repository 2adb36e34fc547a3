"""System model types and the dense linear-algebra substrate.

All data is complex double precision and validated to be finite at
construction.  Values are immutable after construction (arrays are marked
non-writeable), so they can be shared freely across threads.

Sign convention for eigenvalues: :class:`Spectrum` stores the eigenvalues of
the dynamic operator directly (``A @ phi_n == mu[n] * phi_n``) and exposes the
negated view ``lambda_view = -mu`` that all spectral criteria consume (they
are stated for ``A @ phi_n == -lambda_n * phi_n``).  Keeping both in one place
makes silent sign errors structurally impossible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    NotDiagonalizableError,
)

# Truncated-series order for the scaled exponential: with ||M|| <= 1/2 the
# remainder after k = 0..17 is below 1e-20, comfortably under the 1e-16 target.
_EXP_SERIES_TERMS = 18
# exp of a larger argument overflows float64 entries even after squaring.
_EXP_SAFE_NORM = 700.0

DEFAULT_DIAG_TOL = 1e-8


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def as_complex_matrix(entries, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex128 array (copy, read-only)."""
    a = np.array(entries, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return _freeze(a)


def as_complex_vector(entries, name: str = "vector") -> np.ndarray:
    a = np.array(entries, dtype=np.complex128)
    if a.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return _freeze(a)


@dataclass(frozen=True)
class Operator:
    """A dense square operator on C^dim."""

    entries: np.ndarray

    def __post_init__(self):
        a = as_complex_matrix(self.entries, "operator")
        if a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatchError(f"operator must be square, got shape {a.shape}")
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenvalue list of the dynamic operator.

    ``mu[n]`` is the direct eigenvalue (``A phi_n = mu_n phi_n``);
    ``lambda_view`` is the negated view consumed by every spectral criterion.
    Negation of IEEE doubles is exact, so the round trip mu -> lambda -> mu
    is bit-exact.
    """

    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", as_complex_vector(self.mu, "spectrum"))

    @property
    def lambda_view(self) -> np.ndarray:
        return _freeze(-self.mu)

    def __len__(self) -> int:
        return len(self.mu)


@dataclass(frozen=True)
class DiagonalizableSystem:
    """Dynamic operator given by its eigenvalues and (optional) eigenbasis.

    Without a basis the operator is diagonal in the standard orthonormal
    basis.  With a basis, column n of ``basis`` is the eigenvector phi_n; the
    columns may form a non-orthonormal Riesz basis.  ``basis_norms[n]`` is
    always the Euclidean norm of phi_n (1.0 when no basis is given).
    """

    spectrum: Spectrum
    basis: Operator | None = None
    basis_norms: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.spectrum)
        if self.basis is not None:
            if self.basis.dim != n:
                raise DimensionMismatchError(
                    f"basis dim {self.basis.dim} != spectrum length {n}"
                )
            sing = np.linalg.svd(self.basis.entries, compute_uv=False)
            tol = max(self.basis.entries.shape) * np.finfo(float).eps * sing[0]
            if sing[-1] <= tol:
                raise NotDiagonalizableError(
                    "eigenvector basis is numerically singular",
                    condition_number=float("inf"),
                )
            norms = np.linalg.norm(self.basis.entries, axis=0)
        else:
            norms = np.ones(n)
        if self.basis_norms is not None:
            given = np.asarray(self.basis_norms, dtype=float)
            if given.shape != norms.shape or np.any(
                np.abs(given - norms) > 1e-12 * np.maximum(norms, 1e-300)
            ):
                raise DimensionMismatchError(
                    "basis_norms disagree with the actual eigenvector column norms"
                )
        object.__setattr__(self, "basis_norms", _freeze(norms))

    @property
    def dim(self) -> int:
        return len(self.spectrum)

    @property
    def condition_number(self) -> float:
        if self.basis is None:
            return 1.0
        s = np.linalg.svd(self.basis.entries, compute_uv=False)
        return float(s[0] / s[-1])

    def dense(self) -> np.ndarray:
        if self.basis is None:
            return np.diag(self.spectrum.mu)
        v = self.basis.entries
        return v @ np.diag(self.spectrum.mu) @ np.linalg.inv(v)


DynamicOperator = Union[Operator, DiagonalizableSystem]


def dense_matrix(op: DynamicOperator | np.ndarray) -> np.ndarray:
    """Dense ndarray view of any operator representation."""
    if isinstance(op, Operator):
        return op.entries
    if isinstance(op, DiagonalizableSystem):
        return op.dense()
    return as_complex_matrix(op, "operator")


def operator_dim(op: DynamicOperator) -> int:
    return op.dim


@dataclass(frozen=True)
class SamplingFamily:
    """The finite set G of sampling vectors, with stable labels."""

    vectors: tuple
    labels: tuple = None

    def __post_init__(self):
        vecs = tuple(as_complex_vector(v, f"sampling vector {i}") for i, v in enumerate(self.vectors))
        if not vecs:
            raise DimensionMismatchError("sampling family must contain at least one vector")
        d = len(vecs[0])
        for i, v in enumerate(vecs):
            if len(v) != d:
                raise DimensionMismatchError(
                    f"sampling vector {i} has length {len(v)}, expected {d}"
                )
        labels = self.labels
        if labels is None:
            labels = tuple(f"g{i}" for i in range(len(vecs)))
        else:
            labels = tuple(str(s) for s in labels)
            if len(labels) != len(vecs):
                raise DimensionMismatchError("labels and vectors differ in length")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return len(self.vectors[0])

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class ObservationOperator:
    """Analysis operator of a sampling family: (Bx)_g = <x, g>.

    Row i is the conjugate of sampling vector i, so that ``matrix @ x`` yields
    the inner products against the family in label order.
    """

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_complex_matrix(self.matrix, "observation operator"))

    @classmethod
    def from_family(cls, family: SamplingFamily) -> "ObservationOperator":
        rows = np.vstack([np.conj(v) for v in family.vectors])
        return cls(rows)

    def to_family(self, labels=None) -> SamplingFamily:
        vectors = tuple(np.conj(row) for row in self.matrix)
        return SamplingFamily(vectors, labels)


# --- time domains -----------------------------------------------------------


@dataclass(frozen=True)
class DiscreteFinite:
    gamma: int

    def __post_init__(self):
        if int(self.gamma) != self.gamma or self.gamma < 0:
            raise DimensionMismatchError("gamma must be a nonnegative integer")
        object.__setattr__(self, "gamma", int(self.gamma))


@dataclass(frozen=True)
class DiscreteInfinite:
    truncation_K: int
    tail_tol: float = 1e-10

    def __post_init__(self):
        if int(self.truncation_K) != self.truncation_K or self.truncation_K < 1:
            raise DimensionMismatchError("truncation_K must be a positive integer")
        if not (self.tail_tol > 0):
            raise DimensionMismatchError("tail_tol must be positive")
        object.__setattr__(self, "truncation_K", int(self.truncation_K))


@dataclass(frozen=True)
class ContinuousFinite:
    tau: float
    panels: int = 8
    nodes_per_panel: int = 8

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise DimensionMismatchError("tau must be positive and finite")
        if self.panels < 1 or self.nodes_per_panel < 2:
            raise DimensionMismatchError("need panels >= 1 and nodes_per_panel >= 2")


@dataclass(frozen=True)
class ContinuousInfinite:
    horizon_T: float
    panels: int = 8
    nodes_per_panel: int = 8
    tail_tol: float = 1e-10

    def __post_init__(self):
        if not (self.horizon_T > 0 and math.isfinite(self.horizon_T)):
            raise DimensionMismatchError("horizon_T must be positive and finite")
        if self.panels < 1 or self.nodes_per_panel < 2:
            raise DimensionMismatchError("need panels >= 1 and nodes_per_panel >= 2")
        if not (self.tail_tol > 0):
            raise DimensionMismatchError("tail_tol must be positive")


TimeDomain = Union[DiscreteFinite, DiscreteInfinite, ContinuousFinite, ContinuousInfinite]


def is_discrete(time: TimeDomain) -> bool:
    return isinstance(time, (DiscreteFinite, DiscreteInfinite))


def is_continuous(time: TimeDomain) -> bool:
    return isinstance(time, (ContinuousFinite, ContinuousInfinite))


def is_infinite(time: TimeDomain) -> bool:
    return isinstance(time, (DiscreteInfinite, ContinuousInfinite))


@dataclass(frozen=True)
class SystemSpec:
    """A complete system: dynamics, sampling family, time domain, optional control.

    ``control`` is the dim x m control-to-state matrix (columns are control
    directions); it is only required by the controllability operations.
    """

    operator: DynamicOperator
    sampling: SamplingFamily
    time: TimeDomain
    control: np.ndarray | None = None

    def __post_init__(self):
        d = operator_dim(self.operator)
        if self.sampling.dim != d:
            raise DimensionMismatchError(
                f"sampling vectors have length {self.sampling.dim}, operator dim is {d}"
            )
        if self.control is not None:
            c = as_complex_matrix(self.control, "control")
            if c.shape[0] != d:
                raise DimensionMismatchError(
                    f"control matrix has {c.shape[0]} rows, operator dim is {d}"
                )
            object.__setattr__(self, "control", c)

    @property
    def dim(self) -> int:
        return operator_dim(self.operator)

    def dense_operator(self) -> np.ndarray:
        return dense_matrix(self.operator)

    def observation_matrix(self) -> np.ndarray:
        return ObservationOperator.from_family(self.sampling).matrix


# --- operations --------------------------------------------------------------


def _expm_dense(m: np.ndarray) -> np.ndarray:
    """exp(m) by scaling-and-squaring over the truncated power series."""
    norm = float(np.linalg.norm(m, 2))
    if not math.isfinite(norm):
        raise NonFiniteError("matrix exponential of a non-finite matrix")
    if norm > _EXP_SAFE_NORM:
        raise OverflowError(
            f"||tA|| = {norm:.3g} exceeds the safe argument bound {_EXP_SAFE_NORM:g}"
        )
    squarings = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    scaled = m / (2.0**squarings)
    n = m.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    # Horner evaluation of sum_{k=0}^{K} scaled^k / k!
    acc = eye / math.factorial(_EXP_SERIES_TERMS - 1)
    for k in range(_EXP_SERIES_TERMS - 2, -1, -1):
        acc = scaled @ acc + eye / math.factorial(k)
    for _ in range(squarings):
        acc = acc @ acc
    return acc


def matrix_exponential(a: DynamicOperator | np.ndarray, t: float) -> Operator:
    """exp(t*A) as an Operator.

    Accurate to ~1e-12 relative for ||tA|| <= 30; raises OverflowError once
    ||tA|| exceeds the float64-safe bound, NonFiniteError on NaN input.
    """
    if not math.isfinite(t):
        raise NonFiniteError("time argument must be finite")
    m = dense_matrix(a)
    return Operator(_expm_dense(m * t))


def operator_power(a: DynamicOperator | np.ndarray, k: int) -> Operator:
    """A**k by repeated squaring; A**0 is the identity."""
    if int(k) != k or k < 0:
        raise DimensionMismatchError("power must be a nonnegative integer")
    m = dense_matrix(a)
    result = np.eye(m.shape[0], dtype=np.complex128)
    base = m.copy()
    k = int(k)
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return Operator(result)


def spectral_decomposition(a: DynamicOperator | np.ndarray, tol: float = DEFAULT_DIAG_TOL) -> DiagonalizableSystem:
    """Eigendecomposition with a diagonalizability certificate.

    Certifies cond(V) <= 1/tol and || V diag(mu) V^-1 - A ||_F <= tol * ||A||_F;
    raises NotDiagonalizableError (carrying the condition number) otherwise.
    """
    m = dense_matrix(a)
    mu, v = np.linalg.eig(m)
    sing = np.linalg.svd(v, compute_uv=False)
    cond = float(sing[0] / sing[-1]) if sing[-1] > 0 else float("inf")
    if cond > 1.0 / tol:
        raise NotDiagonalizableError(
            f"eigenvector basis condition number {cond:.3g} exceeds {1.0 / tol:.3g}",
            condition_number=cond,
        )
    recon = v @ np.diag(mu) @ np.linalg.inv(v)
    err = float(np.linalg.norm(recon - m))
    scale = float(np.linalg.norm(m))
    if err > tol * max(scale, 1e-300) and scale > 0:
        raise NotDiagonalizableError(
            f"eigendecomposition residual {err:.3g} exceeds {tol:g} * ||A||",
            condition_number=cond,
        )
    return DiagonalizableSystem(Spectrum(mu), Operator(v))


@dataclass(frozen=True)
class StabilityReport:
    exponentially_stable: bool
    omega: float
    strongly_stable: bool
    spectral_radius: float


def stability_classification(a: DynamicOperator | Spectrum | np.ndarray) -> StabilityReport:
    """Spectral stability classes of the dynamics.

    exponentially_stable <=> max Re(spectrum) < 0 (omega = that max);
    strongly_stable      <=> spectral radius < 1.
    """
    if isinstance(a, Spectrum):
        mu = a.mu
    elif isinstance(a, DiagonalizableSystem):
        mu = a.spectrum.mu
    else:
        mu = np.linalg.eigvals(dense_matrix(a))
    omega = float(np.max(mu.real))
    rho = float(np.max(np.abs(mu)))
    return StabilityReport(
        exponentially_stable=bool(omega < 0.0),
        omega=omega,
        strongly_stable=bool(rho < 1.0),
        spectral_radius=rho,
    )


def operator_norm(a: DynamicOperator | np.ndarray) -> float:
    """Spectral (2-)norm."""
    return float(np.linalg.norm(dense_matrix(a), 2))


def rank_from_singular_values(s: np.ndarray, shape: tuple, tol: float | None = None) -> int:
    """Numerical rank with the standard max(shape)*eps*sigma_max cutoff."""
    if s.size == 0:
        return 0
    if tol is None:
        tol = max(shape) * np.finfo(float).eps * float(s[0])
    return int(np.sum(s > tol))


def matrix_rank(m: np.ndarray, tol: float | None = None) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    return rank_from_singular_values(s, m.shape, tol)
