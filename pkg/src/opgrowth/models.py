"""Model builders producing (Spectrum, EigenbasisOperator) pairs.

Covers the harmonic oscillator and its operator powers, the binomial
nearest-hop power matrices, 1D/2D infinite boxes, grid-solved anharmonic
x^p oscillators with WKB cross-checks, semiclassically built operators
with tunneling-suppressed elements, and seeded random-matrix ensembles
with a prescribed off-diagonal decay envelope. Units: hbar = 1.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as _gamma

from .core import EigenbasisOperator, Spectrum


class BoundaryLeakError(RuntimeError):
    """Grid eigenfunctions reached the box edge; enlarge grid_halfwidth."""


# ---------------------------------------------------------------------------
# structure-function envelopes
# ---------------------------------------------------------------------------

_DECAY_CLASSES = ("flat", "power", "exponential", "gaussian")


@dataclass(frozen=True)
class StructureSpec:
    """Decay law of the off-diagonal envelope f(|omega|).

    flat -> 1, power -> (1 + w)^-exponent, exponential -> exp(-rate w),
    gaussian -> exp(-w^2 / (2 width^2)). The power law is regularized at
    w = 0 by the +1 offset.
    """

    decay: str
    exponent: float | None = None
    rate: float | None = None
    width: float | None = None

    def __post_init__(self):
        if self.decay not in _DECAY_CLASSES:
            raise ValueError(f"unknown decay class {self.decay!r}")
        if self.decay == "power" and not (self.exponent and self.exponent > 0):
            raise ValueError("power decay needs exponent > 0")
        if self.decay == "exponential" and not (self.rate and self.rate > 0):
            raise ValueError("exponential decay needs rate > 0")
        if self.decay == "gaussian" and not (self.width and self.width > 0):
            raise ValueError("gaussian decay needs width > 0")

    @classmethod
    def flat(cls):
        return cls("flat")

    @classmethod
    def power(cls, exponent: float):
        return cls("power", exponent=exponent)

    @classmethod
    def exponential(cls, rate: float):
        return cls("exponential", rate=rate)

    @classmethod
    def gaussian(cls, width: float):
        return cls("gaussian", width=width)

    def envelope(self, omega) -> np.ndarray:
        w = np.abs(np.asarray(omega, dtype=float))
        if self.decay == "flat":
            return np.ones_like(w)
        if self.decay == "power":
            return (1.0 + w) ** (-self.exponent)
        if self.decay == "exponential":
            return np.exp(-self.rate * w)
        return np.exp(-(w**2) / (2.0 * self.width**2))


# ---------------------------------------------------------------------------
# harmonic oscillator family
# ---------------------------------------------------------------------------

def harmonic_position(dim: int, mass: float = 1.0, omega: float = 1.0):
    """Position operator of the harmonic oscillator: x_{k+1,k} = sqrt((k+1)/(2 m w))."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if mass <= 0 or omega <= 0:
        raise ValueError("mass and omega must be positive")
    energies = omega * (np.arange(dim) + 0.5)
    x = np.zeros((dim, dim))
    k = np.arange(1, dim)
    off = np.sqrt(k / (2.0 * mass * omega))
    x[k, k - 1] = off
    x[k - 1, k] = off
    return Spectrum(energies), EigenbasisOperator(x)


def harmonic_power(dim: int, q: int, mass: float = 1.0, omega: float = 1.0) -> EigenbasisOperator:
    """q-th power of the position operator, exact on the returned block.

    The power is taken in an internal basis of size dim + q before
    truncation, since x^q couples states up to q levels outside any fixed
    block.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    _, big = harmonic_position(dim + q, mass, omega)
    m = np.linalg.matrix_power(big.elements, q)[:dim, :dim]
    return EigenbasisOperator(0.5 * (m + m.T))


def uq_element(q: int, l: int, k: int) -> int:
    """Exact integer element of the q-th power of the 0/1 nearest-hop matrix."""
    d = abs(l - k)
    if d > q or (q - d) % 2:
        return 0
    val = math.comb(q, (q - d) // 2)
    if l + k < q:
        j = (q - (l + k)) // 2 - 1
        val -= math.comb(q, j) if j >= 0 else 0
    return val


def uq_binomial(dim: int, q: int) -> EigenbasisOperator:
    """Matrix power [u^q]_lk of the unit tridiagonal hop matrix, in closed form.

    Values are exact integers (binomials with a boundary correction below
    the anti-diagonal l + k < q), stored as floats.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    m = np.zeros((dim, dim))
    for l in range(dim):
        for k in range(l, min(dim, l + q + 1)):
            if (q - (k - l)) % 2 == 0:
                m[l, k] = m[k, l] = float(uq_element(q, l, k))
    return EigenbasisOperator(m)


def uq_binomial_exact(dim: int, q: int) -> np.ndarray:
    """Same as uq_binomial but as an object array of exact Python ints."""
    m = np.zeros((dim, dim), dtype=object)
    for l in range(dim):
        for k in range(dim):
            m[l, k] = uq_element(q, l, k)
    return m


def gaussian_decay_estimate(q: int, l: int, k: int) -> float:
    """Stirling estimate of the bulk binomial: 2^q sqrt(2/(pi q)) exp(-(l-k)^2/(2q))."""
    return 2.0**q * math.sqrt(2.0 / (math.pi * q)) * math.exp(-((l - k) ** 2) / (2.0 * q))


# ---------------------------------------------------------------------------
# particle in a box
# ---------------------------------------------------------------------------

def box_position_1d(dim: int, length: float, mass: float = 1.0):
    """Centered position operator of the 1D infinite box (1-based levels).

    x_mn = L 8 n m / (pi^2 (n^2 - m^2)^2) for m + n odd, zero otherwise;
    measuring from the box center makes the diagonal vanish and the
    eigenfunction phases are chosen so every allowed element is positive.
    E_n = n^2 pi^2 / (2 m L^2).
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if length <= 0:
        raise ValueError("length must be positive")
    n = np.arange(1, dim + 1)
    energies = n**2 * np.pi**2 / (2.0 * mass * length**2)
    x = np.zeros((dim, dim))
    for d in range(1, dim, 2):
        m = np.arange(1, dim + 1 - d)
        nn = m + d
        x[m - 1, nn - 1] = length * 8.0 * nn * m / (np.pi**2 * (nn**2 - m**2) ** 2)
    x = x + x.T
    return Spectrum(energies), EigenbasisOperator(x)


def box_position_2d(dims: tuple[int, int], lengths: tuple[float, float], mass: float = 1.0):
    """x (x) 1 for a rectangular box, flattened to the energy-sorted product basis.

    Warns when the side ratio produces energy collisions within 1e-10.
    """
    dx, dy = dims
    lx, ly = lengths
    if dx < 2 or dy < 1:
        raise ValueError("need dx >= 2 and dy >= 1")
    spec_x, op_x = box_position_1d(dx, lx, mass)
    ny = np.arange(1, dy + 1)
    e_y = ny**2 * np.pi**2 / (2.0 * mass * ly**2)

    e_prod = (spec_x.energies[:, None] + e_y[None, :]).ravel()
    order = np.argsort(e_prod, kind="stable")
    e_sorted = e_prod[order]
    gaps = np.diff(e_sorted)
    if np.any(gaps < 1e-10):
        _warnings.warn(
            f"{int(np.sum(gaps < 1e-10))} energy collisions within 1e-10 "
            "(rational side-ratio degeneracy)",
            RuntimeWarning,
            stacklevel=2,
        )
    # X (x) 1 in the flattened product basis, then the sorting permutation
    big = np.kron(op_x.elements, np.eye(dy))
    big = big[np.ix_(order, order)]
    return Spectrum(e_sorted), EigenbasisOperator(0.5 * (big + big.T))


# ---------------------------------------------------------------------------
# anharmonic oscillator V(x) = x^p on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnharmonicConfig:
    """Grid eigensolver configuration for V(x) = x^p.

    ``grid_halfwidth`` of None auto-selects 1.5x the classical turning point
    of the highest requested state. ``floor_factor`` sets the precision
    floor below which position matrix elements are flagged (not dropped).
    """

    p: int
    n_states: int
    grid_points: int = 4096
    grid_halfwidth: float | None = None
    mass: float = 1.0
    floor_factor: float = 1e-13

    def __post_init__(self):
        if self.p < 2 or self.p % 2:
            raise ValueError("p must be an even integer >= 2")
        if self.n_states < 2:
            raise ValueError("n_states must be >= 2")
        if self.grid_points < 8 * self.n_states:
            raise ValueError("grid_points too small for the requested states")
        if self.mass <= 0:
            raise ValueError("mass must be positive")


def anharmonic_solve(cfg: AnharmonicConfig):
    """Solve -(1/2m) psi'' + x^p psi = E psi on a sinc-DVR grid.

    Returns the lowest n_states energies and the position matrix in that
    eigenbasis, with nonzero elements below floor_factor * max|x_lk| flagged
    in ``below_floor``. Parity-forbidden elements (equal-parity states of
    the symmetric potential) are zeroed exactly. Raises BoundaryLeakError
    when any kept eigenfunction has amplitude above 1e-10 at the grid edge.
    """
    half = cfg.grid_halfwidth
    if half is None:
        e_top = bohr_sommerfeld_energy(cfg.p, cfg.n_states - 1, cfg.mass)
        # harmonic tails decay slowest: 1.5x the turning point leaves ~1e-7
        # edge amplitude at p = 2, so widen there
        factor = 2.2 if cfg.p == 2 else 1.5
        half = factor * e_top ** (1.0 / cfg.p)
    xg = np.linspace(-half, half, cfg.grid_points)
    dx = xg[1] - xg[0]

    idx = np.arange(cfg.grid_points)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        kin = 2.0 / diff.astype(float) ** 2
    kin[diff == 0] = np.pi**2 / 3.0
    kin *= (-1.0) ** diff / (2.0 * cfg.mass * dx**2)
    ham = kin + np.diag(xg**cfg.p)

    vals, vecs = np.linalg.eigh(ham)
    energies = vals[: cfg.n_states]
    states = vecs[:, : cfg.n_states]

    edge = max(np.abs(states[0, :]).max(), np.abs(states[-1, :]).max())
    # DVR coefficients relate to wavefunction values by 1/sqrt(dx)
    if edge / math.sqrt(dx) > 1e-10:
        raise BoundaryLeakError(
            f"eigenfunction amplitude {edge / math.sqrt(dx):.2e} at the grid edge; "
            "increase grid_halfwidth"
        )

    x_op = states.T @ (xg[:, None] * states)
    x_op = 0.5 * (x_op + x_op.T)
    # exact selection rule of the symmetric potential: zero equal-parity pairs
    parity = np.sign(np.sum(states * states[::-1, :], axis=0))
    x_op[np.outer(parity, parity) > 0] = 0.0
    floor = cfg.floor_factor * np.abs(x_op).max()
    below = (np.abs(x_op) < floor) & (x_op != 0.0)
    np.fill_diagonal(below, False)
    return Spectrum(energies), EigenbasisOperator(x_op, below_floor=below)


# ---------------------------------------------------------------------------
# WKB / semiclassical formulas
# ---------------------------------------------------------------------------

def _phase_volume_factor(p: int) -> float:
    # G(p) = Gamma(1 + 1/p) Gamma(3/2) / Gamma(1/p + 3/2)
    return _gamma(1.0 + 1.0 / p) * _gamma(1.5) / _gamma(1.0 / p + 1.5)


def bohr_sommerfeld_energy(p: int, n: int, mass: float = 1.0) -> float:
    """Quantized energy of V = x^p: E_n = C(p) (n + 1/2)^{2p/(p+2)}."""
    if p < 2 or p % 2:
        raise ValueError("p must be an even integer >= 2")
    if n < 0:
        raise ValueError("n must be >= 0")
    g = _phase_volume_factor(p)
    c = (math.pi / (2.0 * math.sqrt(2.0 * mass) * g)) ** (2.0 * p / (p + 2.0))
    return c * (n + 0.5) ** (2.0 * p / (p + 2.0))


def _check_semiclassical_p(p: int):
    if p == 2:
        raise ValueError("p = 2 excluded: Gamma((p-2)/(2p)) has a pole at p = 2")
    if p < 4 or p % 2:
        raise ValueError("p must be an even integer >= 4")


def semiclassical_decay_integrand(p: int, u: float, mass: float = 1.0, method: str = "closed") -> float:
    """The under-barrier time integral I(u) = int_{u^{1/p}}^inf dx / sqrt(2 (x^p - u)/m).

    Scales as u^{(2-p)/(2p)}; evaluated in closed Gamma-function form or by
    direct quadrature of the regularized integrand.
    """
    _check_semiclassical_p(p)
    if u <= 0:
        raise ValueError("u must be positive")
    if method == "closed":
        a = (p - 1.0) / p
        const = (math.sqrt(2.0 * mass) / p) * (math.sqrt(math.pi) / 2.0) * _gamma(a - 0.5) / _gamma(a)
        return const * u ** ((2.0 - p) / (2.0 * p))
    if method == "quadrature":
        a = (p - 1.0) / p
        val, _ = quad(lambda z: (z * z + u) ** (-a), 0.0, np.inf, limit=200)
        return math.sqrt(2.0 * mass) / p * val
    raise ValueError(f"unknown method: {method!r}")


def semiclassical_action_slope(p: int, mass: float = 1.0) -> float:
    """Per-level tunneling action J(p): log element suppression per |n - m|.

    J(p) -> 0 as p -> inf (the box limit, where elements decay algebraically).
    """
    _check_semiclassical_p(p)
    g = _gamma((p - 2.0) / (2.0 * p)) / _gamma((p - 1.0) / p)
    c = (math.pi / (2.0 * math.sqrt(2.0 * mass) * _phase_volume_factor(p))) ** (2.0 * p / (p + 2.0))
    return g * math.sqrt(2.0 * math.pi * mass) / (p + 2.0) * c ** ((p + 2.0) / (2.0 * p))


def semiclassical_log_element(p: int, n: int, m: int, mass: float = 1.0, method: str = "closed") -> float:
    """Tunneling exponent L_nm with x_nm ~ exp(-L_nm), for |n - m| >> 1.

    method="closed" integrates I(u) analytically between Bohr-Sommerfeld
    levels; method="quadrature" performs the nested numerical integration.
    The two agree to much better than 1e-6 relative.
    """
    _check_semiclassical_p(p)
    e_hi = bohr_sommerfeld_energy(p, max(n, m), mass)
    e_lo = bohr_sommerfeld_energy(p, min(n, m), mass)
    if method == "closed":
        ex = (p + 2.0) / (2.0 * p)
        g = _gamma((p - 2.0) / (2.0 * p)) / _gamma((p - 1.0) / p)
        pref = g * math.sqrt(2.0 * math.pi * mass) / (p + 2.0)
        return pref * (e_hi**ex - e_lo**ex)
    if method == "quadrature":
        val, _ = quad(
            lambda u: semiclassical_decay_integrand(p, u, mass, method="quadrature"),
            e_lo,
            e_hi,
            limit=200,
            epsabs=1e-13,
            epsrel=1e-13,
        )
        return val
    raise ValueError(f"unknown method: {method!r}")


def semiclassical_operator(
    p: int,
    dim: int,
    mass: float = 1.0,
    prefactor: float = 1.0,
    nearest: np.ndarray | None = None,
):
    """Position-like operator with elements prefactor exp(-L_lk) on odd |l - k|.

    Energies come from Bohr-Sommerfeld quantization. The |l - k| = 1
    entries, where the asymptotic is invalid, are taken from ``nearest``
    (length dim - 1) when supplied; otherwise the asymptotic value is used.
    """
    _check_semiclassical_p(p)
    if dim < 2:
        raise ValueError("dim must be >= 2")
    energies = np.array([bohr_sommerfeld_energy(p, n, mass) for n in range(dim)])
    ex = (p + 2.0) / (2.0 * p)
    g = _gamma((p - 2.0) / (2.0 * p)) / _gamma((p - 1.0) / p)
    pref = g * math.sqrt(2.0 * math.pi * mass) / (p + 2.0)
    e_pow = energies**ex
    action = pref * np.abs(e_pow[:, None] - e_pow[None, :])
    parity_allowed = (np.arange(dim)[:, None] - np.arange(dim)[None, :]) % 2 == 1
    m = np.where(parity_allowed, prefactor * np.exp(-action), 0.0)
    if nearest is not None:
        nearest = np.asarray(nearest, dtype=float)
        if nearest.shape != (dim - 1,):
            raise ValueError("nearest must have length dim - 1")
        k = np.arange(1, dim)
        m[k, k - 1] = nearest
        m[k - 1, k] = nearest
    m = np.triu(m, 1)
    m = m + m.T
    return Spectrum(energies), EigenbasisOperator(m)


# ---------------------------------------------------------------------------
# random-matrix ensembles with prescribed off-diagonal decay
# ---------------------------------------------------------------------------

def random_ensemble(dim: int, sspec: StructureSpec, bandwidth: float, seed: int):
    """Symmetric random operator with envelope sspec on equally spaced levels.

    Energies are equally spaced on [0, bandwidth] (constant density of
    states); elements are f(|E_l - E_k|) R_lk / sqrt(dim) with R symmetric
    standard normal, deterministic under the seed.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    rng = np.random.default_rng(seed)
    energies = np.linspace(0.0, bandwidth, dim)
    raw = rng.standard_normal((dim, dim))
    sym = np.triu(raw) + np.triu(raw, 1).T
    omega = np.abs(energies[:, None] - energies[None, :])
    m = sspec.envelope(omega) * sym / math.sqrt(dim)
    return Spectrum(energies), EigenbasisOperator(0.5 * (m + m.T))
