"""Infinite-time exact-observability criteria for diagonalizable systems.

Everything here works on the negated eigenvalue convention: the inputs are
sequences lambda_n with ``A phi_n = -lambda_n phi_n`` (see
:attr:`obsframe.model.Spectrum.lambda_view`), paired with the sampling
coefficients <b, phi_n> and the eigenvector norms.

All "infinite sequence" statements are evaluated on the supplied finite
prefix; a report is finite-section evidence, never a proof.  Boundary
accumulation (conditions 2) has no finite certificate, so it is tested by a
windowed trend heuristic, documented on the checkers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, GuardViolationError, NotApplicableError
from .model import (
    DiagonalizableSystem,
    SystemSpec,
    as_complex_vector,
)

REGIME_DISC = "disc"
REGIME_HALFPLANE = "halfplane"
REGIME_FINITE = "finite"

DEFAULT_DELTA_FLOOR = 1e-6
DEFAULT_RATIO_FLOOR = 1e-6
DEFAULT_RATIO_CAP = 1e6
DEFAULT_EPSILON_GUARD = 1e-6
# Trend tolerance for the boundary-accumulation proxy is adaptive in the
# closest approach, clipped into [1e-12, 0.25] so it neither degenerates at
# an exact boundary point nor auto-passes sequences far from the boundary.
_TREND_CLIP_LO = 1e-12
_TREND_CLIP_HI = 0.25


@dataclass(frozen=True)
class EigenSamplePair:
    """(lambda_n, <b, phi_n>, ||phi_n||) triples feeding the criteria."""

    lambdas: np.ndarray
    coeffs: np.ndarray
    norms: np.ndarray

    def __post_init__(self):
        lam = as_complex_vector(self.lambdas, "lambdas")
        coeff = as_complex_vector(self.coeffs, "coeffs")
        norms = np.asarray(self.norms, dtype=float)
        if not (len(lam) == len(coeff) == len(norms)) or len(lam) < 1:
            raise DomainError("lambdas, coeffs, and norms must have equal length >= 1")
        if np.any(norms <= 0) or not np.all(np.isfinite(norms)):
            raise DomainError("eigenvector norms must be positive and finite")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "coeffs", coeff)
        object.__setattr__(self, "norms", norms)

    def __len__(self) -> int:
        return len(self.lambdas)


def derive_pair(sys: SystemSpec) -> EigenSamplePair:
    """EigenSamplePair of a diagonalizable system with one sampling vector."""
    op = sys.operator
    if not isinstance(op, DiagonalizableSystem):
        raise NotApplicableError("criteria pairs require a diagonalizable system")
    if len(sys.sampling) != 1:
        raise NotApplicableError("criteria pairs are stated for a single sampling vector")
    b = sys.sampling.vectors[0]
    if op.basis is None:
        coeffs = np.asarray(b)
    else:
        coeffs = op.basis.entries.conj().T @ b  # <b, phi_n> columnwise
    return EigenSamplePair(op.spectrum.lambda_view, coeffs, op.basis_norms)


# --- Carleson products ---------------------------------------------------------


def _log_products(nums: np.ndarray, dens: np.ndarray, n_points: int) -> np.ndarray:
    """Per-index products of |num/den| factors, accumulated in log magnitude.

    ``nums``/``dens`` are full n x n factor matrices; the diagonal is skipped.
    An exact-zero numerator short-circuits that index's product to 0.
    """
    products = np.empty(n_points)
    for n in range(n_points):
        num = np.abs(np.delete(nums[n], n))
        den = np.abs(np.delete(dens[n], n))
        if num.size == 0:
            products[n] = 1.0  # empty product
            continue
        if np.any(num == 0.0) or np.any(den == 0.0):
            products[n] = 0.0
            continue
        log_mag = float(np.sum(np.log(num)) - np.sum(np.log(den)))
        products[n] = math.exp(log_mag) if log_mag > -745.0 else 0.0
    return products


def _disc_products(lam: np.ndarray) -> np.ndarray:
    nums = lam[:, None] - lam[None, :]
    dens = 1.0 - np.conj(lam)[:, None] * lam[None, :]
    return _log_products(nums, dens, len(lam))


def _halfplane_products(lam: np.ndarray) -> np.ndarray:
    nums = lam[:, None] - lam[None, :]
    dens = lam[:, None] + np.conj(lam)[None, :]
    return _log_products(nums, dens, len(lam))


@dataclass(frozen=True)
class CarlesonResult:
    inf_product: float
    argmin_index: int
    passed: bool
    products: np.ndarray


def carleson_disc(lambdas, delta_floor: float = DEFAULT_DELTA_FLOOR) -> CarlesonResult:
    """inf_n prod_{k != n} |(l_n - l_k) / (1 - conj(l_n) l_k)| >= delta_floor.

    All points must lie strictly inside the unit disc.
    """
    lam = as_complex_vector(lambdas, "lambdas")
    if np.any(np.abs(lam) >= 1.0):
        raise DomainError("the disc Carleson condition needs all |lambda_n| < 1")
    products = _disc_products(lam)
    idx = int(np.argmin(products))
    return CarlesonResult(
        inf_product=float(products[idx]),
        argmin_index=idx,
        passed=bool(products[idx] >= delta_floor),
        products=products,
    )


def carleson_halfplane(lambdas, delta_floor: float = DEFAULT_DELTA_FLOOR) -> CarlesonResult:
    """inf_n prod_{k != n} |(l_n - l_k) / (l_n + conj(l_k))| >= delta_floor.

    All points must lie in the open right half-plane.  The denominator
    l_n + conj(l_k) is the reflection pairing that makes each factor the
    pseudo-hyperbolic distance there (it equals the disc factor under the
    Cayley map, factor by factor).
    """
    lam = as_complex_vector(lambdas, "lambdas")
    if np.any(lam.real <= 0.0):
        raise DomainError("the half-plane Carleson condition needs all Re lambda_n > 0")
    products = _halfplane_products(lam)
    idx = int(np.argmin(products))
    return CarlesonResult(
        inf_product=float(products[idx]),
        argmin_index=idx,
        passed=bool(products[idx] >= delta_floor),
        products=products,
    )


# --- norm-ratio condition ------------------------------------------------------


@dataclass(frozen=True)
class NormRatioResult:
    ratios: np.ndarray
    c1_hat: float
    c2_hat: float
    passed: bool
    auxiliary: dict


def _ratio_weights(lam: np.ndarray, regime: str) -> np.ndarray:
    if regime == REGIME_DISC:
        if np.any(np.abs(lam) >= 1.0):
            raise DomainError(
                "norm-ratio weights sqrt(1 - |lambda|^2) need all |lambda_n| < 1 "
                "(the first discrete condition is the failed premise)"
            )
        return np.sqrt(1.0 - np.abs(lam) ** 2)
    if regime == REGIME_HALFPLANE:
        if np.any(lam.real <= 0.0):
            raise DomainError(
                "norm-ratio weights sqrt(2 Re lambda) need all Re lambda_n > 0 "
                "(the first continuous condition is the failed premise)"
            )
        return np.sqrt(2.0 * lam.real)
    if regime == REGIME_FINITE:
        return np.ones(len(lam))
    raise DomainError(f"unknown regime {regime!r}")


def norm_ratio_condition(
    pair: EigenSamplePair,
    regime: str,
    floor: float = DEFAULT_RATIO_FLOOR,
    cap: float = DEFAULT_RATIO_CAP,
) -> NormRatioResult:
    """Two-sided bound on |<b, phi_n>| / (||phi_n|| w_n).

    The weight w_n is sqrt(1 - |lambda|^2) (infinite discrete),
    sqrt(2 Re lambda) (infinite continuous) or 1 (finite continuous).
    Passes when min ratio > floor and max ratio < cap over the finite section.
    """
    w = _ratio_weights(pair.lambdas, regime)
    ratios = np.abs(pair.coeffs) / (pair.norms * w)
    c1_hat = float(np.min(ratios))
    c2_hat = float(np.max(ratios))
    aux: dict = {"regime": regime}
    if regime == REGIME_FINITE:
        aux["max_abs_re"] = float(np.max(np.abs(pair.lambdas.real)))
        aux["re_bounded"] = True  # finite sections are always bounded
    elif regime == REGIME_DISC:
        aux["max_abs_lambda"] = float(np.max(np.abs(pair.lambdas)))
    else:
        aux["min_re_lambda"] = float(np.min(pair.lambdas.real))
    return NormRatioResult(
        ratios=ratios,
        c1_hat=c1_hat,
        c2_hat=c2_hat,
        passed=bool(c1_hat > floor and c2_hat < cap),
        auxiliary=aux,
    )


def mode_energy(lam: complex, b_phi_norm: float, regime: str, tau: float | None = None) -> float:
    """Closed-form squared norm of one observed eigenmode trajectory.

    finite continuous:   (e^(-2 Re(l) tau) - 1) / (-2 Re(l)) * ||B phi||^2
                         (tau * ||B phi||^2 in the Re(l) = 0 limit)
    infinite continuous: ||B phi||^2 / (2 Re(l)),   needs Re(l) > 0
    infinite discrete:   ||B phi||^2 / (1 - |l|^2), needs |l| < 1
    """
    lam = complex(lam)
    b2 = float(b_phi_norm) ** 2
    if regime == REGIME_FINITE:
        if tau is None or not (tau > 0):
            raise DomainError("the finite-continuous mode energy needs tau > 0")
        r = lam.real
        if r == 0.0:
            return tau * b2
        return float(np.expm1(-2.0 * r * tau) / (-2.0 * r)) * b2
    if regime == REGIME_HALFPLANE:
        if lam.real <= 0.0:
            raise ConvergenceError("the infinite-time integral diverges unless Re lambda > 0")
        return b2 / (2.0 * lam.real)
    if regime == REGIME_DISC:
        if abs(lam) >= 1.0:
            raise ConvergenceError("the geometric series diverges unless |lambda| < 1")
        return b2 / (1.0 - abs(lam) ** 2)
    raise DomainError(f"unknown regime {regime!r}")


# --- four-condition checkers ----------------------------------------------------


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    passed: bool
    witness: float


@dataclass(frozen=True)
class CriteriaReport:
    conditions: tuple
    overall: bool
    regime: str
    details: dict

    def condition(self, name: str) -> ConditionVerdict:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def _default_window(n: int, trend_window: int | None) -> int:
    if trend_window is not None:
        return max(1, min(int(trend_window), n))
    return max(1, min(max(5, n // 4), n))


def _boundary_trend(values: np.ndarray, window: int, toward_max: bool):
    """Windowed proxy for 'values approach their boundary along the tail'.

    For toward_max=True the boundary is 1 (|lambda| -> 1); otherwise it is 0
    (Re lambda -> 0).  The tail window must contain the closest approach and
    come within an adaptive tolerance of the boundary.
    """
    tail = values[-window:]
    if toward_max:
        best, tail_best = float(np.max(values)), float(np.max(tail))
        tol = min(max(10.0 * (1.0 - best), _TREND_CLIP_LO), _TREND_CLIP_HI)
        passed = tail_best >= 1.0 - tol and tail_best >= best
        return bool(passed), tail_best, tol
    best, tail_best = float(np.min(values)), float(np.min(tail))
    tol = min(max(10.0 * best, _TREND_CLIP_LO), _TREND_CLIP_HI)
    passed = tail_best <= tol and tail_best <= best
    return bool(passed), tail_best, tol


def _duplicate_indices(lam: np.ndarray):
    seen: dict = {}
    dups = []
    for i, z in enumerate(lam):
        key = complex(z)
        if key in seen:
            dups.append((seen[key], i))
        else:
            seen[key] = i
    return dups


def one_point_frame_check(
    pair: EigenSamplePair,
    delta_floor: float = DEFAULT_DELTA_FLOOR,
    trend_window: int | None = None,
    ratio_floor: float = DEFAULT_RATIO_FLOOR,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> CriteriaReport:
    """Four-condition frame check for one-vector discrete infinite-time sampling.

    1. every |lambda_n| < 1;
    2. |lambda_n| -> 1 (windowed trend proxy; heuristic, not a certificate);
    3. the disc Carleson separation holds at delta_floor;
    4. the norm ratios |<b,phi_n>| / (||phi_n|| sqrt(1-|lambda_n|^2)) lie in
       (ratio_floor, ratio_cap), evaluated over the in-disc entries.

    Failures are verdicts, never exceptions; duplicated eigenvalues zero out
    condition 3 and are reported separately in the details.
    """
    lam = pair.lambdas
    mags = np.abs(lam)
    window = _default_window(len(lam), trend_window)

    inside = mags < 1.0
    cond1 = ConditionVerdict("inside_disc", bool(np.all(inside)), float(np.max(mags)))

    trend_ok, tail_best, trend_tol = _boundary_trend(mags, window, toward_max=True)
    cond2 = ConditionVerdict("boundary_accumulation", trend_ok, tail_best)

    products = _disc_products(lam)
    argmin = int(np.argmin(products))
    inf_product = float(products[argmin])
    cond3 = ConditionVerdict("carleson_disc", bool(inf_product >= delta_floor), inf_product)

    sub = EigenSamplePair(lam[inside], pair.coeffs[inside], pair.norms[inside]) if np.any(inside) else None
    if sub is None:
        cond4 = ConditionVerdict("norm_ratio", False, 0.0)
        ratio = None
    else:
        ratio = norm_ratio_condition(sub, REGIME_DISC, ratio_floor, ratio_cap)
        cond4 = ConditionVerdict("norm_ratio", ratio.passed, ratio.c1_hat)

    conditions = (cond1, cond2, cond3, cond4)
    details = {
        "trend_window": window,
        "trend_tol": trend_tol,
        "carleson_argmin": argmin,
        "duplicates": _duplicate_indices(lam),
        "ratio_c1_hat": None if ratio is None else ratio.c1_hat,
        "ratio_c2_hat": None if ratio is None else ratio.c2_hat,
        "delta_floor": delta_floor,
        "ratio_floor": ratio_floor,
        "ratio_cap": ratio_cap,
        "evidence": "finite-section evidence",
    }
    return CriteriaReport(
        conditions=conditions,
        overall=bool(all(c.passed for c in conditions)),
        regime="disc-discrete",
        details=details,
    )


def continuous_infinite_check(
    pair: EigenSamplePair,
    delta_floor: float = DEFAULT_DELTA_FLOOR,
    trend_window: int | None = None,
    ratio_floor: float = DEFAULT_RATIO_FLOOR,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> CriteriaReport:
    """Four-condition frame check for one-vector continuous infinite-time sampling.

    Mirrors :func:`one_point_frame_check` with half-plane geometry:
    1. every Re lambda_n > 0;
    2. Re lambda_n -> 0 (so the dynamics cannot be exponentially stable);
    3. the half-plane Carleson separation (the unconditional-sequence test);
    4. ratios against sqrt(2 Re lambda_n).
    """
    lam = pair.lambdas
    res = lam.real
    window = _default_window(len(lam), trend_window)

    inside = res > 0.0
    cond1 = ConditionVerdict("right_halfplane", bool(np.all(inside)), float(np.min(res)))

    trend_ok, tail_best, trend_tol = _boundary_trend(res, window, toward_max=False)
    cond2 = ConditionVerdict("boundary_accumulation", trend_ok, tail_best)

    products = _halfplane_products(lam)
    argmin = int(np.argmin(products))
    inf_product = float(products[argmin])
    cond3 = ConditionVerdict("carleson_halfplane", bool(inf_product >= delta_floor), inf_product)

    sub = EigenSamplePair(lam[inside], pair.coeffs[inside], pair.norms[inside]) if np.any(inside) else None
    if sub is None:
        cond4 = ConditionVerdict("norm_ratio", False, 0.0)
        ratio = None
    else:
        ratio = norm_ratio_condition(sub, REGIME_HALFPLANE, ratio_floor, ratio_cap)
        cond4 = ConditionVerdict("norm_ratio", ratio.passed, ratio.c1_hat)

    conditions = (cond1, cond2, cond3, cond4)
    details = {
        "trend_window": window,
        "trend_tol": trend_tol,
        "carleson_argmin": argmin,
        "duplicates": _duplicate_indices(lam),
        "ratio_c1_hat": None if ratio is None else ratio.c1_hat,
        "ratio_c2_hat": None if ratio is None else ratio.c2_hat,
        "delta_floor": delta_floor,
        "ratio_floor": ratio_floor,
        "ratio_cap": ratio_cap,
        "evidence": "finite-section evidence",
    }
    return CriteriaReport(
        conditions=conditions,
        overall=bool(all(c.passed for c in conditions)),
        regime="halfplane-continuous",
        details=details,
    )


# --- disc <-> half-plane transfer -----------------------------------------------


def mobius_point(z: complex) -> complex:
    """Self-inverse bijection between the unit disc and the right half-plane."""
    return (1.0 - z) / (1.0 + z)


@dataclass(frozen=True)
class MobiusResult:
    halfplane_pair: EigenSamplePair
    identity_residual: float


def mobius_transfer(pair: EigenSamplePair, epsilon_guard: float = DEFAULT_EPSILON_GUARD) -> MobiusResult:
    """Carry a disc-regime pair to the half-plane regime.

    lambda' = M(lambda), coeff' = sqrt(2)/|1 + lambda| * coeff, norms kept.
    The rescaling makes the half-plane norm ratio equal the disc one exactly;
    identity_residual is the largest absolute disagreement between the two
    (it should sit at rounding level, <= 1e-12).
    Points with |1 + lambda| <= epsilon_guard are refused: there the map and
    its image fail to stay bounded together.
    """
    lam = pair.lambdas
    if np.any(np.abs(lam) >= 1.0):
        raise DomainError("the transfer is stated for points inside the unit disc")
    guard = np.abs(1.0 + lam)
    bad = np.nonzero(guard <= epsilon_guard)[0]
    if bad.size:
        raise GuardViolationError(
            f"|1 + lambda_n| <= {epsilon_guard:g} at indices {bad.tolist()}",
            indices=tuple(int(i) for i in bad),
        )
    mapped = (1.0 - lam) / (1.0 + lam)
    coeffs = pair.coeffs * (math.sqrt(2.0) / guard)
    halfplane = EigenSamplePair(mapped, coeffs, pair.norms)
    disc_ratio = np.abs(pair.coeffs) / (pair.norms * np.sqrt(1.0 - np.abs(lam) ** 2))
    half_ratio = np.abs(coeffs) / (pair.norms * np.sqrt(2.0 * mapped.real))
    residual = float(np.max(np.abs(disc_ratio - half_ratio)))
    return MobiusResult(halfplane_pair=halfplane, identity_residual=residual)


# --- spectrum inclusion ----------------------------------------------------------


@dataclass(frozen=True)
class InclusionReport:
    inside: bool
    region: str
    offenders: tuple


def spectrum_inclusion_report(lambdas, regime: str) -> InclusionReport:
    """Advisory check that the (negated-convention) spectrum sits in the region
    exact observability forces on it: a strip (finite continuous), the open
    right half-strip (infinite continuous) or the open unit disc (discrete).
    """
    lam = as_complex_vector(lambdas, "lambdas")
    if regime == REGIME_DISC:
        bad = np.nonzero(np.abs(lam) >= 1.0)[0]
        region = "open unit disc {|lambda| < 1}"
    elif regime == REGIME_HALFPLANE:
        bad = np.nonzero(lam.real <= 0.0)[0]
        alpha = float(np.max(lam.real)) if np.all(lam.real > 0) else float(np.max(np.abs(lam.real)))
        region = f"half-strip {{0 < Re lambda <= {alpha!r}}}"
    elif regime == REGIME_FINITE:
        bad = np.nonzero(~np.isfinite(lam.real))[0]
        alpha = float(np.max(np.abs(lam.real)))
        region = f"strip {{|Re lambda| <= {alpha!r}}}"
    else:
        raise DomainError(f"unknown regime {regime!r}")
    return InclusionReport(
        inside=bool(bad.size == 0),
        region=region,
        offenders=tuple(int(i) for i in bad),
    )
