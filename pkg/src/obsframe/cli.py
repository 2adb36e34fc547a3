"""Command-line interface: load systems, run analyses, emit deterministic reports.

Exit codes: 0 for verdict-true outcomes, 1 for verdict-false (a successful
analysis whose answer is "no"), 2 for input errors (parse/schema/invariant),
3 for numerical-certificate failures (refused truncations, refused
reconstructions, guard violations, ...).
"""

from __future__ import annotations

import argparse
import os
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from . import figures
from .criteria import (
    DEFAULT_DELTA_FLOOR,
    DEFAULT_EPSILON_GUARD,
    DEFAULT_RATIO_CAP,
    DEFAULT_RATIO_FLOOR,
    REGIME_DISC,
    REGIME_HALFPLANE,
    continuous_infinite_check,
    derive_pair,
    mobius_transfer,
    one_point_frame_check,
    spectrum_inclusion_report,
)
from .dynamics import DEFAULT_EOB_REL_TOL
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    GuardViolationError,
    NonFiniteError,
    NotApplicableError,
    NotDiagonalizableError,
    NotObservableError,
    NotSelfAdjointError,
    NotStronglyStableError,
    ObsframeError,
    ParseError,
    QuadratureError,
    SchemaError,
    TailNotCertifiableError,
)
from .experiments import (
    bessel_admissibility_operator,
    discretization_sweep,
    kalman_independence,
    stable_truncation_bound,
)
from .model import is_continuous, is_infinite, stability_classification
from .observability import (
    admissibility_bound_check,
    duality_check,
    frame_report,
    grammian,
    observability_matrix,
    read_observations_csv,
    reconstruct,
)
from .reporting import DICTIONARY, jsonable, render_report, write_atomic
from .sysio import load_pair, load_system

_INPUT_ERRORS = (
    ParseError,
    SchemaError,  # includes InvariantError
    DimensionMismatchError,
    NonFiniteError,
    DomainError,
    NotApplicableError,
)
_CERTIFICATE_ERRORS = (
    TailNotCertifiableError,
    NotObservableError,
    NotDiagonalizableError,
    ConvergenceError,
    GuardViolationError,
    NotSelfAdjointError,
    NotStronglyStableError,
    QuadratureError,
    OverflowError,
)

COMMANDS = (
    "check",
    "reconstruct",
    "criteria",
    "mobius",
    "duality",
    "sweep",
    "kalman",
    "truncation",
    "bessel-op",
)


@dataclass
class RunConfig:
    command: str
    system: str | None = None
    samples: str | None = None
    pair: str | None = None
    out: str | None = None
    format: str = "json"
    plot: str | None = None
    tol: float | None = None
    rank_tol: float | None = None
    delta_floor: float = DEFAULT_DELTA_FLOOR
    ratio_floor: float = DEFAULT_RATIO_FLOOR
    ratio_cap: float = DEFAULT_RATIO_CAP
    trend_window: int | None = None
    epsilon_guard: float = DEFAULT_EPSILON_GUARD
    regime: str = REGIME_DISC
    taus: tuple = field(default_factory=tuple)
    deltas: tuple = field(default_factory=tuple)
    truncation: int | None = None


def _tolerances(cfg: RunConfig) -> dict:
    return {
        "eob_tol": cfg.tol if cfg.tol is not None else f"relative:{DEFAULT_EOB_REL_TOL!r}",
        "rank_tol": cfg.rank_tol if cfg.rank_tol is not None else "default:max(shape)*eps*sigma_max",
        "delta_floor": cfg.delta_floor,
        "ratio_floor": cfg.ratio_floor,
        "ratio_cap": cfg.ratio_cap,
        "epsilon_guard": cfg.epsilon_guard,
    }


def _load_pair_input(cfg: RunConfig):
    if cfg.pair:
        return load_pair(cfg.pair)
    if cfg.system:
        return derive_pair(load_system(cfg.system))
    raise SchemaError("this command needs --pair or --system")


def _require_system(cfg: RunConfig):
    if not cfg.system:
        raise SchemaError(f"{cfg.command} needs --system <path>")
    return load_system(cfg.system)


def _advisory_notes(system) -> list:
    notes = []
    if is_infinite(system.time):
        stab = stability_classification(system.operator)
        stable = (
            stab.strongly_stable if not is_continuous(system.time) else stab.exponentially_stable
        )
        if stable:
            notes.append(
                "stable dynamics: an infinite-horizon frame already implies a frame at "
                "some finite horizon (see the truncation command)"
            )
        if len(system.sampling) < system.dim:
            notes.append(
                "few sampling vectors: in an infinite-dimensional state space a stable "
                "operator admits no infinite-horizon frame from finitely many vectors; "
                "finite-dimensional verdicts do not transfer"
            )
    return notes


def _criteria_payload(report) -> dict:
    return {
        "regime": report.regime,
        "overall": report.overall,
        "conditions": [
            {"name": c.name, "pass": c.passed, "witness": c.witness} for c in report.conditions
        ],
        "details": report.details,
    }


def _cmd_check(cfg: RunConfig):
    system = _require_system(cfg)
    fr = frame_report(system, tol=cfg.tol, rank_tol=cfg.rank_tol)
    results = {
        "c1": fr.c1,
        "c2": fr.c2,
        "rank": fr.rank,
        "dim": system.dim,
        "condition_number": fr.condition_number,
        "eob_threshold": fr.eob_threshold,
        "verdicts": fr.verdicts,
        "tail_certificate": fr.tail_certificate,
    }
    if is_continuous(system.time):
        results["admissibility"] = admissibility_bound_check(system)
    notes = _advisory_notes(system)
    eigs = np.linalg.eigvalsh(grammian(system))

    def figure(path):
        figures.check_figure(fr, eigs, path)

    return results, bool(fr.verdicts.frame_eob), notes, None, figure


def _cmd_reconstruct(cfg: RunConfig):
    system = _require_system(cfg)
    if not cfg.samples:
        raise SchemaError("reconstruct needs --samples <observations.csv>")
    record = read_observations_csv(cfg.samples)
    expected = observability_matrix(system).index_map
    if len(record.index_map) != len(expected):
        raise SchemaError(
            f"observation file has {len(record.index_map)} rows, system expects {len(expected)}"
        )
    for i, ((t_got, label_got), (t_want, label_want)) in enumerate(
        zip(record.index_map, expected)
    ):
        if label_got != label_want or abs(float(t_got) - float(t_want)) > 1e-9 * max(
            1.0, abs(float(t_want))
        ):
            raise SchemaError(
                f"row {i + 1} is ({t_got!r}, {label_got!r}), expected ({t_want!r}, {label_want!r})"
            )
    result = reconstruct(system, record, tol=cfg.tol)
    results = {
        "x0": result.x0,
        "residual": result.residual,
    }

    def figure(path):
        figures.reconstruct_figure(result, path)

    return results, True, [], None, figure


def _cmd_criteria(cfg: RunConfig):
    pair = _load_pair_input(cfg)
    checker = one_point_frame_check if cfg.regime == REGIME_DISC else continuous_infinite_check
    report = checker(
        pair,
        delta_floor=cfg.delta_floor,
        trend_window=cfg.trend_window,
        ratio_floor=cfg.ratio_floor,
        ratio_cap=cfg.ratio_cap,
    )
    inclusion = spectrum_inclusion_report(
        pair.lambdas, REGIME_DISC if cfg.regime == REGIME_DISC else REGIME_HALFPLANE
    )
    results = _criteria_payload(report)
    results["spectrum_inclusion"] = inclusion

    def figure(path):
        figures.criteria_figure(pair, report, path)

    return results, bool(report.overall), [], None, figure


def _cmd_mobius(cfg: RunConfig):
    pair = _load_pair_input(cfg)
    result = mobius_transfer(pair, epsilon_guard=cfg.epsilon_guard)
    mapped = result.halfplane_pair
    results = {
        "identity_residual": result.identity_residual,
        "halfplane_pair": {
            "lambda_re": mapped.lambdas.real,
            "lambda_im": mapped.lambdas.imag,
            "coeff_re": mapped.coeffs.real,
            "coeff_im": mapped.coeffs.imag,
            "phi_norms": mapped.norms,
        },
    }

    def figure(path):
        figures.mobius_figure(pair, result, path)

    return results, bool(result.identity_residual <= 1e-12), [], None, figure


def _cmd_duality(cfg: RunConfig):
    system = _require_system(cfg)
    report = duality_check(system, tol=cfg.tol)
    verdict = report.eob_iff_dual_eco and report.aob_iff_dual_aco

    def figure(path):
        figures.duality_figure(report, path)

    return report, bool(verdict), [], None, figure


def _cmd_sweep(cfg: RunConfig):
    system = _require_system(cfg)
    if not cfg.deltas:
        raise SchemaError("sweep needs --deltas a,b,c")
    sweep = discretization_sweep(system, cfg.deltas, tol=cfg.tol)
    results = {
        "rows": sweep.rows,
        "reference": {"c1": sweep.reference.c1, "c2": sweep.reference.c2},
        "frame_threshold": sweep.frame_threshold,
        "all_frames": sweep.all_frames,
    }

    def figure(path):
        figures.sweep_figure(sweep, path)

    return results, bool(sweep.all_frames), [], sweep, figure


def _cmd_kalman(cfg: RunConfig):
    system = _require_system(cfg)
    taus = cfg.taus or (0.1, 1.0, 10.0)
    report = kalman_independence(system, taus, cfg.truncation, rank_tol=cfg.rank_tol)

    def figure(path):
        figures.kalman_figure(report, path)

    return report, bool(report.all_equal), [], None, figure


def _cmd_truncation(cfg: RunConfig):
    system = _require_system(cfg)
    report = stable_truncation_bound(system)

    def figure(path):
        figures.truncation_figure(report, path)

    return report, bool(report.ok), [], None, figure


def _cmd_bessel_op(cfg: RunConfig):
    system = _require_system(cfg)
    report = bessel_admissibility_operator(system)
    results = {
        "series_vs_quadrature_error": report.series_vs_quadrature_error,
        "invertible": report.invertible,
        "min_abs_certificate": report.min_abs_certificate,
        "spectral_certificate": list(report.spectral_certificate),
        "largest_certified_tau": report.largest_certified_tau,
    }

    def figure(path):
        figures.bessel_figure(report, path)

    return results, bool(report.invertible), [], None, figure


_HANDLERS = {
    "check": _cmd_check,
    "reconstruct": _cmd_reconstruct,
    "criteria": _cmd_criteria,
    "mobius": _cmd_mobius,
    "duality": _cmd_duality,
    "sweep": _cmd_sweep,
    "kalman": _cmd_kalman,
    "truncation": _cmd_truncation,
    "bessel-op": _cmd_bessel_op,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; write the report; return the exit code."""
    handler = _HANDLERS.get(cfg.command)
    if handler is None:
        raise SchemaError(f"unknown command {cfg.command!r}")
    results, verdict, notes, sweep, figure = handler(cfg)
    report = {
        "command": cfg.command,
        "verdict": bool(verdict),
        "results": jsonable(results),
        "tolerances": jsonable(_tolerances(cfg)),
        "dictionary": DICTIONARY,
        "notes": list(notes),
    }
    text = render_report(report, cfg.format, sweep=sweep)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        _sys.stdout.write(text)
    if cfg.plot is not None and figure is not None:
        path = cfg.plot
        if not path:
            if not cfg.out:
                raise SchemaError("--plot without a path needs --out to derive the figure name")
            path = os.path.splitext(cfg.out)[0] + ".png"
        figure(path)
    return 0 if verdict else 1


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsframe",
        description="Observability, controllability, and sampling-frame analysis of linear systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--system", help="system JSON file")
        p.add_argument("--samples", help="observations CSV file (reconstruct)")
        p.add_argument("--pair", help="eigenvalue/coefficient pair JSON file (criteria, mobius)")
        p.add_argument("--tol", type=float, default=None, help="absolute EOB tolerance on c1")
        p.add_argument("--rank-tol", type=float, default=None, help="singular-value cutoff for ranks")
        p.add_argument("--delta-floor", type=float, default=DEFAULT_DELTA_FLOOR)
        p.add_argument("--ratio-floor", type=float, default=DEFAULT_RATIO_FLOOR)
        p.add_argument("--ratio-cap", type=float, default=DEFAULT_RATIO_CAP)
        p.add_argument("--trend-window", type=int, default=None)
        p.add_argument("--epsilon-guard", type=float, default=DEFAULT_EPSILON_GUARD)
        p.add_argument("--regime", choices=(REGIME_DISC, REGIME_HALFPLANE), default=REGIME_DISC)
        p.add_argument("--taus", type=_float_list, default=())
        p.add_argument("--deltas", type=_float_list, default=())
        p.add_argument("--truncation", type=int, default=None, help="discrete truncation K")
        p.add_argument("--out", help="report path (stdout when omitted)")
        p.add_argument("--format", choices=("json", "text", "tsv"), default="json")
        p.add_argument(
            "--plot",
            nargs="?",
            const="",
            default=None,
            help="render a matplotlib figure (optional path; defaults next to --out)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        system=args.system,
        samples=args.samples,
        pair=args.pair,
        out=args.out,
        format=args.format,
        plot=args.plot,
        tol=args.tol,
        rank_tol=args.rank_tol,
        delta_floor=args.delta_floor,
        ratio_floor=args.ratio_floor,
        ratio_cap=args.ratio_cap,
        trend_window=args.trend_window,
        epsilon_guard=args.epsilon_guard,
        regime=args.regime,
        taus=args.taus,
        deltas=args.deltas,
        truncation=args.truncation,
    )
    try:
        return run(cfg)
    except _INPUT_ERRORS as exc:
        print(f"obsframe: input error: {exc}", file=_sys.stderr)
        return 2
    except _CERTIFICATE_ERRORS as exc:
        print(f"obsframe: certificate failure: {exc}", file=_sys.stderr)
        return 3
    except ObsframeError as exc:
        print(f"obsframe: error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
