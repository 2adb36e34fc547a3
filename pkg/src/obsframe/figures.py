"""Matplotlib figure rendering for the CLI report path.

Figures are written next to the delimited report when --plot is given; the
Agg backend keeps rendering headless and reproducible.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path):
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def sweep_figure(sweep, path) -> None:
    deltas = [row.delta for row in sweep.rows]
    c1 = [row.c1 for row in sweep.rows]
    c2 = [row.c2 for row in sweep.rows]
    gaps = [row.c1_ref_gap for row in sweep.rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(deltas, c1, "o-", label="c1(delta)")
    ax1.plot(deltas, c2, "s-", label="c2(delta)")
    ax1.axhline(sweep.reference.c1, color="gray", ls="--", lw=0.8, label="c1 reference")
    ax1.axhline(sweep.reference.c2, color="black", ls=":", lw=0.8, label="c2 reference")
    ax1.set_xlabel("grid spacing delta")
    ax1.set_ylabel("frame bounds")
    ax1.set_xscale("log")
    ax1.legend(fontsize=8)
    ax2.loglog(deltas, gaps, "o-")
    ax2.set_xlabel("grid spacing delta")
    ax2.set_ylabel("|c1 - c1_ref|")
    ax2.set_title("convergence to the continuous bounds", fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def check_figure(report, grammian_eigs, path) -> None:
    eigs = np.maximum(np.sort(np.real(grammian_eigs)), 0.0)
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.semilogy(range(1, len(eigs) + 1), np.maximum(eigs, 1e-300), "o-")
    ax.axhline(max(report.eob_threshold, 1e-300), color="red", ls="--", lw=0.8, label="EOB threshold")
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("Grammian spectrum")
    verdict = "frame" if report.verdicts.frame_eob else "not a frame"
    ax.set_title(f"c1={report.c1:.3g}, c2={report.c2:.3g} ({verdict})", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def criteria_figure(pair, report, path) -> None:
    lam = pair.lambdas
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(lam.real, lam.imag, c="tab:blue", s=22, zorder=3)
    if report.regime == "disc-discrete":
        theta = np.linspace(0, 2 * np.pi, 256)
        ax.plot(np.cos(theta), np.sin(theta), color="gray", lw=0.8)
        ax.set_xlim(-1.15, 1.15)
        ax.set_ylim(-1.15, 1.15)
    else:
        ax.axvline(0.0, color="gray", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    status = "pass" if report.overall else "fail"
    names = ", ".join(f"{c.name}:{'ok' if c.passed else 'FAIL'}" for c in report.conditions)
    ax.set_title(f"{status} | {names}", fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def mobius_figure(pair, result, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 4))
    lam = pair.lambdas
    mapped = result.halfplane_pair.lambdas
    theta = np.linspace(0, 2 * np.pi, 256)
    ax1.plot(np.cos(theta), np.sin(theta), color="gray", lw=0.8)
    ax1.scatter(lam.real, lam.imag, s=20)
    ax1.set_aspect("equal")
    ax1.set_title("disc points", fontsize=9)
    ax2.axvline(0.0, color="gray", lw=0.8)
    ax2.scatter(mapped.real, mapped.imag, s=20, color="tab:orange")
    ax2.set_title(f"mapped points (residual {result.identity_residual:.2e})", fontsize=9)
    for ax in (ax1, ax2):
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
    fig.tight_layout()
    _save(fig, path)


def kalman_figure(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(report.taus, report.ranks, "o-", label="rank Q_tau")
    ax.axhline(report.kalman_rank, color="gray", ls="--", lw=0.8, label="stacked-rows rank")
    ax.axhline(report.discrete_rank, color="black", ls=":", lw=0.8, label="discrete rank")
    ax.set_xscale("log")
    ax.set_xlabel("tau")
    ax.set_ylabel("rank")
    ax.set_ylim(0, max(max(report.ranks), report.kalman_rank) + 1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def duality_figure(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    labels = ["sigma_min(Psi)", "sigma_min(dual Theta)"]
    ax.bar(labels, [report.sigma_min_psi, report.sigma_min_dual_theta], color=["tab:blue", "tab:orange"])
    ax.set_ylabel("smallest singular value")
    ax.set_title(
        f"adjoint error {report.adjoint_identity_error:.2e} "
        f"(reflected), {report.unreflected_identity_error:.2e} (plain)",
        fontsize=8,
    )
    fig.tight_layout()
    _save(fig, path)


def truncation_figure(report, path) -> None:
    gammas = np.arange(0, report.gamma_star + 5)
    curve = report.c1_infinite - report.c2_infinite * report.operator_norm ** (2 * (gammas + 1))
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(gammas, curve, "o-", label="certified lower bound")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.plot([report.gamma_star], [report.measured_c1], "r*", ms=12, label="measured c1 at gamma*")
    ax.set_xlabel("gamma")
    ax.set_ylabel("lower frame bound")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def bessel_figure(report, path) -> None:
    vals = np.abs(np.array(report.spectral_certificate))
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.semilogy(range(1, len(vals) + 1), np.maximum(vals, 1e-300), "o")
    ax.axhline(1e-10, color="red", ls="--", lw=0.8, label="invertibility tol")
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("|g(tau, mu_i)|")
    ax.set_title(
        f"{'invertible' if report.invertible else 'NOT invertible'}; "
        f"largest certified tau {report.largest_certified_tau:.4g}",
        fontsize=9,
    )
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def reconstruct_figure(result, path) -> None:
    mags = np.abs(result.x0)
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar(range(1, len(mags) + 1), mags)
    ax.set_xlabel("state component")
    ax.set_ylabel("|x0|")
    ax.set_title(f"reconstructed state (residual {result.residual:.2e})", fontsize=9)
    fig.tight_layout()
    _save(fig, path)
