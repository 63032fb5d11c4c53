"""Continuum moment predictions and growth-rate reporting.

The continuum moments integrate the thermally weighted decay envelope,
mu_2n = 2 int_0^inf w^{2n} exp(-beta w / 2) f(w)^2 dw, evaluated by
adaptive quadrature on a peak-shifted log integrand and cross-checked
against closed forms for the flat and exponential envelopes. The decay
class maps to a predicted growth rate: algebraic or slower decay gives the
universal maximal rate pi/beta, exponential decay the sub-maximal
pi/(beta + 4 gamma), Gaussian decay no exponential rate at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .lanczos import (
    LanczosSequence,
    MomentSequence,
    detect_rate_jump,
    growth_fit,
)
from .models import StructureSpec
from .spinchain import StructureFunctionFit


class CutoffError(ValueError):
    """The requested quadrature cutoff truncates a non-negligible tail."""


def growth_rate_bound(beta: float) -> float:
    """Universal bound on the exponential growth rate: alpha <= pi / beta."""
    if beta <= 0:
        raise ValueError("beta must be positive for a finite bound")
    return math.pi / beta


# ---------------------------------------------------------------------------
# continuum moments of the decay envelope
# ---------------------------------------------------------------------------

def flat_moment_log(beta: float, n: int) -> float:
    """log of 2^{2n+2} (2n)! / beta^{2n+1} (flat envelope)."""
    return (2 * n + 2) * math.log(2.0) + gammaln(2 * n + 1) - (2 * n + 1) * math.log(beta)


def exponential_moment_log(beta: float, gamma: float, n: int) -> float:
    """log of 2^{2n+2} (2n)! / (beta + 4 gamma)^{2n+1} (exponential envelope)."""
    return (2 * n + 2) * math.log(2.0) + gammaln(2 * n + 1) - (2 * n + 1) * math.log(beta + 4.0 * gamma)


def _log_integrand(sspec: StructureSpec, beta: float, n: int):
    def phi(w):
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore"):
            base = np.where(w > 0, 2.0 * n * np.log(np.maximum(w, 1e-300)), -np.inf if n else 0.0)
        base = base - 0.5 * beta * w
        if sspec.decay == "power":
            base = base - 2.0 * sspec.exponent * np.log1p(w)
        elif sspec.decay == "exponential":
            base = base - 2.0 * sspec.rate * w
        elif sspec.decay == "gaussian":
            base = base - w**2 / sspec.width**2
        return base

    return phi


def _peak_location(sspec: StructureSpec, beta: float, n: int) -> float:
    if n == 0:
        return 0.0
    two_n = 2.0 * n
    if sspec.decay == "flat":
        return two_n / (0.5 * beta)
    if sspec.decay == "exponential":
        return two_n / (0.5 * beta + 2.0 * sspec.rate)
    if sspec.decay == "gaussian":
        a, b, c = 2.0 / sspec.width**2, 0.5 * beta, -two_n
        return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    # power: -(beta/2) w^2 + (2n - beta/2 - 2a) w + 2n = 0
    a, b, c = -0.5 * beta, two_n - 0.5 * beta - 2.0 * sspec.exponent, two_n
    return (-b - math.sqrt(b * b - 4 * a * c)) / (2 * a)


def continuum_moments(
    sspec: StructureSpec,
    beta: float,
    n_max: int,
    cutoff: float | None = None,
) -> MomentSequence:
    """Raw continuum moments mu_2n, n = 1..n_max, of the decay envelope.

    For the flat and exponential envelopes the quadrature is verified
    against the factorial closed forms to 1e-8 relative; disagreement is a
    hard error. An explicit cutoff must leave the integrand tail below
    1e-12 of its peak for every n.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    logs = []
    log_mu0 = None
    for n in range(0, n_max + 1):
        phi = _log_integrand(sspec, beta, n)
        w_star = _peak_location(sspec, beta, n)
        phi_max = float(phi(max(w_star, 1e-12)))
        if cutoff is None:
            hi = max(4.0 * w_star, w_star + 200.0 / beta, 50.0)
            while float(phi(hi)) - phi_max > math.log(1e-16):
                hi *= 2.0
        else:
            hi = float(cutoff)
            if float(phi(hi)) - phi_max > math.log(1e-12):
                raise CutoffError(
                    f"integrand tail at cutoff {hi} is above 1e-12 of the peak (n = {n})"
                )
        points = [w_star] if 0.0 < w_star < hi else None
        val, _ = quad(
            lambda w: math.exp(float(phi(w)) - phi_max) if w > 0 else 0.0,
            0.0,
            hi,
            points=points,
            limit=400,
            epsabs=1e-14,
            epsrel=1e-11,
        )
        log_mu = math.log(2.0) + phi_max + math.log(val)
        if n == 0:
            log_mu0 = log_mu
        else:
            logs.append(log_mu)

    for n in range(1, n_max + 1):
        if sspec.decay == "flat":
            ref = flat_moment_log(beta, n)
        elif sspec.decay == "exponential":
            ref = exponential_moment_log(beta, sspec.rate, n)
        else:
            continue
        if abs(math.expm1(logs[n - 1] - ref)) > 1e-8:
            raise RuntimeError(
                f"quadrature disagrees with the closed form at n = {n}: "
                f"{logs[n - 1]} vs {ref}"
            )
    return MomentSequence(np.array(logs), normalized=False, log_mu0=log_mu0)


# ---------------------------------------------------------------------------
# polylogarithm moments of the single-frequency ladder
# ---------------------------------------------------------------------------

def eulerian_number(m: int, j: int) -> int:
    """Eulerian number A(m, j), exact."""
    return sum((-1) ** i * math.comb(m + 1, i) * (j + 1 - i) ** m for i in range(j + 1))


def negative_polylog(m: int, z: float) -> float:
    """Li_{-m}(z) for m >= 1 via the finite Eulerian-number closed form."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (0.0 < z < 1.0):
        raise ValueError("z must lie in (0, 1)")
    one_minus = 1.0 - z
    total = 0.0
    for j in range(m):
        total += float(eulerian_number(m, j)) * z ** (m - j)
    return total / one_minus ** (m + 1)


def polylog_moments(omega0: float, beta: float, n: int) -> float:
    """Ensemble-averaged mu_2n = 2 omega0^{2n} Li_{-2n}(exp(-beta omega0 / 2)).

    The moments of a flat random operator on an equally spaced level ladder
    with spacing omega0; approaches the flat continuum form as beta omega0
    tends to zero.
    """
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    z = math.exp(-0.5 * beta * omega0)
    return 2.0 * omega0 ** (2 * n) * negative_polylog(2 * n, z)


# ---------------------------------------------------------------------------
# growth prediction and reporting
# ---------------------------------------------------------------------------

def predict_alpha(decay, beta: float) -> float | None:
    """Growth rate implied by a decay class: pi/beta (flat, power),
    pi/(beta + 4 gamma) (exponential), None (gaussian: sub-exponential)."""
    if isinstance(decay, StructureFunctionFit):
        decay = decay.as_spec()
    if not isinstance(decay, StructureSpec):
        raise TypeError("decay must be a StructureSpec or StructureFunctionFit")
    if decay.decay in ("flat", "power"):
        return math.pi / beta
    if decay.decay == "exponential":
        return math.pi / (beta + 4.0 * decay.rate)
    return None


@dataclass
class GrowthReport:
    """Fitted rate vs the universal bound and the decay-class prediction.

    ``saturation_ratio`` is recorded even when it exceeds one; a value
    above one is surfaced in ``notes`` as a red flag, never clamped.
    """

    alpha_fit: float
    alpha_stderr: float
    alpha_bound: float
    alpha_predicted: float | None
    saturation_ratio: float
    decay_class: str | None
    exponent: float
    window: tuple[int, int]
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        def clean(x):
            if x is None or (isinstance(x, float) and not math.isfinite(x)):
                return None
            return x

        return {
            "alpha_fit": clean(self.alpha_fit),
            "alpha_stderr": clean(self.alpha_stderr),
            "alpha_bound": clean(self.alpha_bound),
            "alpha_predicted": clean(self.alpha_predicted),
            "saturation_ratio": clean(self.saturation_ratio),
            "decay_class": self.decay_class,
            "exponent": clean(self.exponent),
            "window": list(self.window),
            "notes": list(self.notes),
        }


def build_report(
    seq: LanczosSequence,
    fit: StructureFunctionFit | StructureSpec | None,
    beta: float,
    window: tuple[int, int] | None = None,
    *,
    disagreement_tol: float = 0.25,
) -> GrowthReport:
    """Combine the b_n fit, the decay-class prediction, and the bound.

    Sequences too short for the minimum fit window produce a report with
    NaN rate fields and an explanatory note instead of an error.
    """
    bound = growth_rate_bound(beta)
    b = seq.effective_coefficients
    if window is None and len(b) < 7:
        decay_class = None
        predicted = None
        if fit is not None:
            predicted = predict_alpha(fit, beta)
            decay_class = fit.classified if isinstance(fit, StructureFunctionFit) else fit.decay
        notes = [f"sequence of {len(b)} coefficients is too short for a growth fit"]
        notes.extend(seq.warnings)
        if seq.terminated_at is not None:
            notes.append(f"terminated at n = {seq.terminated_at} (Krylov space exhausted)")
        nan = float("nan")
        return GrowthReport(
            alpha_fit=nan,
            alpha_stderr=nan,
            alpha_bound=bound,
            alpha_predicted=predicted,
            saturation_ratio=nan,
            decay_class=decay_class,
            exponent=nan,
            window=(0, 0),
            notes=tuple(notes),
        )
    gf = growth_fit(seq, window)
    decay_class = None
    predicted = None
    if fit is not None:
        predicted = predict_alpha(fit, beta)
        decay_class = fit.classified if isinstance(fit, StructureFunctionFit) else fit.decay

    ratio = gf.alpha / bound
    notes = [f"linear fit over n in [{gf.window[0]}, {gf.window[1]}]"]
    notes.extend(gf.warnings)
    notes.extend(seq.warnings)
    if ratio > 1.0 + max(gf.stderr / bound, 0.0):
        notes.append(
            f"saturation ratio {ratio:.3f} exceeds 1 beyond the fit error; "
            "inspect for precision-floor contamination"
        )
    jump = detect_rate_jump(seq)
    if jump is not None:
        notes.append(
            f"upward growth-rate jump near n = {jump} (possible precision-floor artefact)"
        )
    if predicted is not None and abs(gf.alpha - predicted) > disagreement_tol * predicted:
        notes.append(
            f"fitted rate {gf.alpha:.4f} disagrees with the decay-class prediction "
            f"{predicted:.4f} beyond {disagreement_tol:.0%}"
        )
    return GrowthReport(
        alpha_fit=gf.alpha,
        alpha_stderr=gf.stderr,
        alpha_bound=bound,
        alpha_predicted=predicted,
        saturation_ratio=ratio,
        decay_class=decay_class,
        exponent=gf.exponent,
        window=gf.window,
        notes=tuple(notes),
    )
