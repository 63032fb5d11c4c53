"""Figure rendering for the CLI report path.

Each function writes one PNG next to the delimited output it visualizes.
Figures are a convenience layer: every number they show is also in the
CSV/JSON artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "opgrowth"}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_META)
    plt.close(fig)
    return Path(path)


def render_model(path: Path, spectrum, op) -> Path:
    fig, (ax_e, ax_m) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax_e.step(np.arange(spectrum.dimension), spectrum.energies, where="mid", lw=1)
    ax_e.set_xlabel("level index")
    ax_e.set_ylabel("energy")
    ax_e.set_title("spectrum")
    mat = np.abs(op.elements)
    floor = mat[mat > 0].min() if np.any(mat > 0) else 1e-300
    img = ax_m.imshow(np.log10(np.maximum(mat, floor)), origin="lower", cmap="viridis")
    fig.colorbar(img, ax=ax_m, label=r"$\log_{10}|O_{lk}|$")
    ax_m.set_title("matrix elements")
    ax_m.set_xlabel("k")
    ax_m.set_ylabel("l")
    return _save(fig, path)


def render_lanczos(path: Path, b, report=None) -> Path:
    b = np.asarray(b, dtype=float)
    n = np.arange(1, len(b) + 1)
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.plot(n, b, "o", ms=4, label=r"$b_n$")
    if report is not None and np.isfinite(report.alpha_fit):
        lo, hi = report.window
        xs = np.array([lo, hi], dtype=float)
        ax.plot(
            xs,
            report.alpha_fit * xs + (b[lo - 1] - report.alpha_fit * lo),
            "-",
            lw=1.2,
            label=rf"fit $\alpha$ = {report.alpha_fit:.3f}",
        )
        ax.plot(
            n,
            report.alpha_bound * n,
            "--",
            lw=1.2,
            color="crimson",
            label=rf"bound slope $\pi/\beta$ = {report.alpha_bound:.3f}",
        )
    ax.set_xlabel("n")
    ax.set_ylabel(r"$b_n$")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_dynamics(path: Path, times, corr, ck) -> Path:
    fig, (ax_c, ax_k) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax_c.plot(times, corr, lw=1)
    ax_c.set_xlabel("t")
    ax_c.set_ylabel("C(t)")
    ax_c.set_title("autocorrelation")
    pos = np.asarray(ck) > 0
    if np.count_nonzero(pos) > 2:
        ax_k.semilogy(np.asarray(times)[pos], np.asarray(ck)[pos], lw=1)
    else:
        ax_k.plot(times, ck, lw=1)
    ax_k.set_xlabel("t")
    ax_k.set_ylabel(r"$C_K(t)$")
    ax_k.set_title("complexity")
    return _save(fig, path)


def render_structure(path: Path, fit) -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.semilogy(fit.omega_centers, fit.amplitudes, "o", ms=4, label="binned |O|")
    if fit.flank is not None and fit.classified != "flat":
        w = np.linspace(fit.flank[0], fit.flank[1], 100)
        i0 = int(np.argmin(np.abs(fit.omega_centers - fit.flank[0])))
        a0 = fit.amplitudes[i0]
        if "gamma" in fit.params:
            ax.semilogy(w, a0 * np.exp(-fit.params["gamma"] * (w - w[0])), "-", lw=1,
                        label=f"exp, rate {fit.params['gamma']:.2f}")
        if "sigma" in fit.params:
            s = fit.params["sigma"]
            ax.semilogy(w, a0 * np.exp(-(w**2 - w[0] ** 2) / (2 * s * s)), "--", lw=1,
                        label=f"gauss, width {s:.2f}")
    ax.set_xlabel(r"$\omega$")
    ax.set_ylabel("envelope")
    ax.set_title(f"classified: {fit.classified}")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_sweep(path: Path, values, alphas, bounds, parameter: str) -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.plot(values, alphas, "o-", ms=4, label=r"fitted $\alpha$")
    ax.plot(values, bounds, "--", color="crimson", label=r"bound $\pi/\beta$")
    ax.set_xlabel(parameter)
    ax.set_ylabel(r"$\alpha$")
    ax.legend(fontsize=8)
    return _save(fig, path)
