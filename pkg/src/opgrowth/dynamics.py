"""Time-domain layer: correlation function, direct moments, chain dynamics.

The hopping-chain equation of motion is
    d phi_n / dt = -b_{n+1} phi_{n+1} + b_n phi_{n-1},   phi_n(0) = delta_n0,
whose generator maps onto a symmetric tridiagonal matrix under phi_n -> i^n,
so the default propagator is exact via eigh_tridiagonal. Krylov complexity
is the occupancy-weighted mean site index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import EigenbasisOperator, Spectrum, ThermalEnsemble
from .lanczos import (
    LanczosSequence,
    MomentSequence,
    _least_squares,
    liouville_modes,
)


class BoundaryReflectionError(RuntimeError):
    """Occupancy reached the chain boundary and auto-extension was disabled or capped."""


@dataclass
class KrylovWavefunction:
    """Site amplitudes phi_n(t) on the Lanczos chain, one row per stored time."""

    times: np.ndarray
    amplitudes: np.ndarray
    extended_sites: int = 0
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.shape[0] != self.times.size:
            raise ValueError("amplitudes must have one row per time")

    def norms(self) -> np.ndarray:
        return np.sum(self.amplitudes**2, axis=1)


def correlation_function(
    op: EigenbasisOperator,
    spectrum: Spectrum,
    ens: ThermalEnsemble,
    times: np.ndarray,
    *,
    raw: bool = False,
    floor_policy: str = "zero",
) -> np.ndarray:
    """Thermal (Wightman) autocorrelation C(t) = sum_lk w_lk O_lk^2 cos((E_l-E_k) t).

    The static diagonal part is stripped; the result is normalized to
    C(0) = 1 unless ``raw`` is set, in which case the squared seed norm
    multiplies back in.
    """
    modes = liouville_modes(op, spectrum, ens, floor_policy=floor_policy)
    t = np.asarray(times, dtype=float)
    p = modes.amplitude**2
    out = np.zeros_like(t)
    chunk = 262144
    for start in range(0, modes.omega.size, chunk):
        sl = slice(start, start + chunk)
        out += p[sl] @ np.cos(np.outer(modes.omega[sl], t))
    if raw:
        out *= modes.seed_norm**2
    return out


def moments_direct(
    op: EigenbasisOperator,
    spectrum: Spectrum,
    ens: ThermalEnsemble,
    n_max: int,
    *,
    normalized: bool = True,
    floor_policy: str = "zero",
) -> MomentSequence:
    """Spectral moments mu_2n = sum_lk w_lk (E_l - E_k)^{2n} O_lk^2, log-stabilized.

    These are the positive even moments of the spectral function, i.e.
    (-1)^n times the 2n-th time derivative of C(t) at t = 0. Normalization
    divides by mu_0 (the squared seed norm).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    modes = liouville_modes(op, spectrum, ens, floor_policy=floor_policy)
    p = modes.amplitude**2
    w_max = float(np.max(modes.omega))
    if w_max == 0.0:
        raise ValueError("all seed weight sits at zero Bohr frequency")
    r = (modes.omega / w_max) ** 2
    logs = []
    acc = p.copy()
    for n in range(1, n_max + 1):
        acc = acc * r
        total = float(np.sum(acc))
        if total <= 0.0:
            raise ValueError(f"moment mu_{2*n} vanished")
        logs.append(2.0 * n * math.log(w_max) + math.log(total))
    logs = np.array(logs)
    if normalized:
        return MomentSequence(logs, normalized=True)
    log_mu0 = 2.0 * math.log(modes.seed_norm)
    return MomentSequence(logs + log_mu0, normalized=False, log_mu0=log_mu0)


def _chain_amplitudes(b: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Exact chain propagation via the symmetric tridiagonal eigenproblem."""
    n_sites = len(b) + 1
    w, v = eigh_tridiagonal(np.zeros(n_sites), b)
    phases = np.exp(-1j * np.outer(w, times))
    amp = v @ (v[0, :, None] * phases)
    n_mod = np.arange(n_sites)[:, None] % 4
    phi = np.where(
        n_mod == 0, amp.real,
        np.where(n_mod == 1, -amp.imag, np.where(n_mod == 2, -amp.real, amp.imag)),
    )
    return phi.T


def _chain_rk4(b: np.ndarray, times: np.ndarray, substep: float | None) -> np.ndarray:
    n_sites = len(b) + 1
    b_pad = np.concatenate([[0.0], b, [0.0]])

    def deriv(phi):
        out = np.empty_like(phi)
        out[:-1] = -b_pad[1:n_sites] * phi[1:]
        out[-1] = 0.0
        out[1:] += b_pad[1:n_sites] * phi[:-1]
        return out

    b_max = float(np.max(b)) if len(b) else 1.0
    dt_cap = 0.2 / max(b_max, 1e-30) if substep is None else substep
    phi = np.zeros(n_sites)
    phi[0] = 1.0
    out = np.empty((len(times), n_sites))
    t_now = float(times[0])
    if t_now != 0.0:
        raise ValueError("rk4 propagation requires the grid to start at t = 0")
    out[0] = phi
    for idx in range(1, len(times)):
        span = float(times[idx]) - t_now
        steps = max(1, int(math.ceil(span / dt_cap)))
        h = span / steps
        for _ in range(steps):
            k1 = deriv(phi)
            k2 = deriv(phi + 0.5 * h * k1)
            k3 = deriv(phi + 0.5 * h * k2)
            k4 = deriv(phi + h * k3)
            phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t_now = float(times[idx])
        out[idx] = phi
    return out


def _extension_sites(b: np.ndarray, slope: float, intercept: float, extra: int) -> np.ndarray:
    n0 = len(b)
    n_new = np.arange(n0 + 1, n0 + extra + 1, dtype=float)
    ext = intercept + slope * n_new
    floor_val = max(0.5 * b[-1], 1e-12)
    return np.maximum(ext, floor_val)


def _required_sites(slope: float, intercept: float, b_last: float, t_max: float, tol: float) -> int:
    """Chain length keeping the boundary occupancy below tol at t_max.

    For linearly growing hops the front sits near sinh^2(alpha t) with a
    geometric tail; for flat chains the spread is ballistic.
    """
    if slope > 1e-12:
        x = slope * t_max
        # boundary amplitude^2 ~ sech^2 tanh^{2N}; solve for N
        if x > 0.05:
            log_tanh = math.log(math.tanh(x))
            log_cosh = x + math.log1p(math.exp(-2 * x)) - math.log(2.0)
            n_req = (math.log(1.0 / tol) - 2.0 * log_cosh) / (-2.0 * log_tanh)
            return int(1.3 * max(n_req, 0.0)) + 64
    rate = max(abs(b_last), abs(intercept), 1e-12)
    return int(4.0 * rate * t_max) + 64


def propagate_chain(
    seq: LanczosSequence | np.ndarray,
    t_grid: np.ndarray,
    *,
    method: str = "eigen",
    auto_extend: bool = True,
    boundary_tol: float = 1e-6,
    max_sites: int = 12000,
    rk4_substep: float | None = None,
) -> KrylovWavefunction:
    """Integrate the discrete chain Schrodinger equation on a time grid.

    A sequence that terminated (Krylov space exhausted) propagates on its
    exact finite chain. A truncated sequence is padded by linear
    extrapolation of its tail whenever occupancy would reach the boundary;
    padding is flagged via ``extended_sites``. Set auto_extend=False to get
    a BoundaryReflectionError instead.

    The occupancy front of a linearly growing chain advances like
    sinh^2(alpha t), so the site count explodes with the horizon; runs
    beyond alpha * t_max ~ 4.5 exceed ``max_sites`` and fail with a clear
    error rather than exhausting memory.
    """
    if method not in ("eigen", "rk4"):
        raise ValueError(f"unknown method: {method!r}")
    terminated = isinstance(seq, LanczosSequence) and seq.terminated_at is not None
    b0 = seq.effective_coefficients if isinstance(seq, LanczosSequence) else np.asarray(seq, float)
    if len(b0) < 1:
        raise ValueError("need at least one chain coefficient")
    t = np.asarray(t_grid, dtype=float)

    prop = _chain_amplitudes if method == "eigen" else (
        lambda bb, tt: _chain_rk4(bb, tt, rk4_substep)
    )

    tail_lo = max(1, len(b0) - max(5, len(b0) // 3) + 1)
    n_tail = np.arange(tail_lo, len(b0) + 1, dtype=float)
    slope, intercept, *_ = _least_squares(n_tail, b0[tail_lo - 1 :])

    b = np.asarray(b0, float)
    extended = 0
    if auto_extend and not terminated:
        # size the chain analytically up front so one propagation usually suffices
        need = _required_sites(slope, intercept, float(b0[-1]), float(np.max(np.abs(t))),
                               boundary_tol)
        if need > max_sites:
            raise BoundaryReflectionError(
                f"keeping the boundary below {boundary_tol:.0e} at t = {np.max(t):.3g} "
                f"needs ~{need} chain sites (cap {max_sites}); shorten the time grid"
            )
        if need > len(b):
            extended = need - len(b)
            b = np.concatenate([b, _extension_sites(b, slope, intercept, extended)])

    warns: list[str] = []
    while True:
        phi = prop(b, t)
        if terminated:
            break
        boundary = float(np.max(phi[:, -1] ** 2))
        if boundary < boundary_tol:
            break
        if not auto_extend:
            raise BoundaryReflectionError(
                f"boundary occupancy {boundary:.2e} exceeds {boundary_tol:.0e} "
                f"on a {len(b)}-site chain (auto_extend disabled)"
            )
        if len(b) >= max_sites:
            raise BoundaryReflectionError(
                f"boundary occupancy {boundary:.2e} persists at the {max_sites}-site cap"
            )
        extra = min(max(len(b), 256), max_sites - len(b))
        b = np.concatenate([b, _extension_sites(b, slope, intercept, extra)])
        extended += extra
    if extended:
        warns.append(
            f"chain extended by {extended} extrapolated sites to keep the boundary dark"
        )
    return KrylovWavefunction(t, phi, extended_sites=extended, warnings=tuple(warns))


def krylov_complexity(wf: KrylovWavefunction) -> np.ndarray:
    """C_K(t) = sum_n n |phi_n(t)|^2: mean position on the Lanczos chain."""
    sites = np.arange(wf.amplitudes.shape[1], dtype=float)
    return wf.amplitudes**2 @ sites
