"""XXZ chain with NN and NNN couplings in a fixed magnetization sector.

Hamiltonian and observable are built over the bitstring basis of the
S^z sector (spin-1/2, S = sigma/2, periodic boundaries, literal periodic
sums: at L = 2 the NN bond and at L = 4 the NNN bond are each visited
twice). Exact diagonalization then rotates the flip-flop observable into
the energy eigenbasis, from which the empirical structure function is
binned and classified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import EigenbasisOperator, Spectrum
from .models import StructureSpec


class EmptySectorError(ValueError):
    """The requested magnetization sector contains no basis states."""


class InsufficientStatisticsError(RuntimeError):
    """Too few eigenstate pairs in the requested window for a meaningful fit."""


@dataclass(frozen=True)
class ChainConfig:
    """XXZ chain parameters restricted to one S^z sector.

    ``sector`` is the total magnetization S_z (integer for even L).
    Desk scale: L even with 2 <= L <= 14 (sector dimensions <= 3432).
    """

    sites: int
    j1: float = 1.0
    delta1: float = 0.0
    j2: float = 0.0
    delta2: float = 0.0
    sector: int = 0
    boundary: str = "periodic"

    def __post_init__(self):
        if self.sites % 2 or not (2 <= self.sites <= 14):
            raise ValueError("sites must be even with 2 <= L <= 14")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")
        n_up = self.sites // 2 + self.sector
        if not (0 <= n_up <= self.sites):
            raise EmptySectorError(f"sector S_z = {self.sector} is empty at L = {self.sites}")

    @property
    def n_up(self) -> int:
        return self.sites // 2 + self.sector

    @property
    def sector_dimension(self) -> int:
        return math.comb(self.sites, self.n_up)


def sector_basis(cfg: ChainConfig) -> np.ndarray:
    """Sorted bitstring states (bit i set = spin up at site i) of the sector."""
    states = sorted(sum(1 << i for i in bits) for bits in combinations(range(cfg.sites), cfg.n_up))
    return np.array(states, dtype=np.int64)


def build_hamiltonian(cfg: ChainConfig) -> np.ndarray:
    """Sector-restricted XXZ Hamiltonian, real symmetric.

    H = J1 sum_i [ (S+_i S-_{i+1} + h.c.)/2 + Delta1 Sz_i Sz_{i+1} ]
      + J2 (same with i+2, Delta2), periodic indices.
    """
    states = sector_basis(cfg)
    index = {int(s): i for i, s in enumerate(states)}
    dim = len(states)
    ham = np.zeros((dim, dim))
    couplings = ((1, cfg.j1, cfg.delta1), (2, cfg.j2, cfg.delta2))
    for col, s in enumerate(states):
        s = int(s)
        for rng, j, delta in couplings:
            if j == 0.0:
                continue
            for i in range(cfg.sites):
                jx = (i + rng) % cfg.sites
                zi = 0.5 if (s >> i) & 1 else -0.5
                zj = 0.5 if (s >> jx) & 1 else -0.5
                ham[col, col] += j * delta * zi * zj
                if ((s >> i) & 1) != ((s >> jx) & 1):
                    t = s ^ (1 << i) ^ (1 << jx)
                    ham[index[t], col] += 0.5 * j
    return ham


def flip_flop_operator(cfg: ChainConfig) -> np.ndarray:
    """B = (1/L) sum_i (S+_i S-_{i+2} + S-_i S+_{i+2}), sector-restricted."""
    states = sector_basis(cfg)
    index = {int(s): i for i, s in enumerate(states)}
    dim = len(states)
    op = np.zeros((dim, dim))
    for col, s in enumerate(states):
        s = int(s)
        for i in range(cfg.sites):
            jx = (i + 2) % cfg.sites
            if ((s >> i) & 1) != ((s >> jx) & 1):
                t = s ^ (1 << i) ^ (1 << jx)
                op[index[t], col] += 1.0 / cfg.sites
    return op


def translation_operator(cfg: ChainConfig) -> np.ndarray:
    """One-site translation as a permutation matrix on the sector basis."""
    states = sector_basis(cfg)
    index = {int(s): i for i, s in enumerate(states)}
    dim = len(states)
    mask = (1 << cfg.sites) - 1
    t_op = np.zeros((dim, dim))
    for col, s in enumerate(states):
        s = int(s)
        rotated = ((s << 1) | (s >> (cfg.sites - 1))) & mask
        t_op[index[rotated], col] = 1.0
    return t_op


def diagonalize_to_eigenbasis(ham: np.ndarray, op: np.ndarray):
    """Full symmetric eigendecomposition H = V E V^T; returns (E, V^T op V)."""
    ham = np.asarray(ham, dtype=float)
    op = np.asarray(op, dtype=float)
    if ham.shape != op.shape:
        raise ValueError("hamiltonian and operator dimensions differ")
    energies, vecs = np.linalg.eigh(ham)
    rotated = vecs.T @ op @ vecs
    return Spectrum(energies), EigenbasisOperator(0.5 * (rotated + rotated.T))


def truncate_operator(op: EigenbasisOperator, spectrum: Spectrum, keep_n: int):
    """Restrict spectrum and operator to the lowest keep_n eigenstates."""
    if not (2 <= keep_n <= spectrum.dimension):
        raise ValueError("keep_n must be in [2, dimension]")
    mask = op.below_floor[:keep_n, :keep_n].copy() if op.below_floor is not None else None
    return (
        Spectrum(spectrum.energies[:keep_n].copy()),
        EigenbasisOperator(op.elements[:keep_n, :keep_n].copy(), below_floor=mask),
    )


# ---------------------------------------------------------------------------
# empirical structure function
# ---------------------------------------------------------------------------

@dataclass
class StructureFunctionFit:
    """Binned |O_lk| envelope versus omega plus a classified decay law.

    ``fit_quality`` reports R^2 for every candidate law on the decay flank;
    classification takes the best law, with ties within ``tie margin``
    resolved toward exponential (misreading exponential as Gaussian flips
    the growth-class prediction).
    """

    omega_centers: np.ndarray
    amplitudes: np.ndarray
    counts: np.ndarray
    window: tuple[float, float]
    bin_width: float
    classified: str
    params: dict = field(default_factory=dict)
    fit_quality: dict = field(default_factory=dict)
    flank: tuple[float, float] | None = None
    warnings: tuple[str, ...] = ()

    def as_spec(self) -> StructureSpec:
        if self.classified == "flat":
            return StructureSpec.flat()
        if self.classified == "power":
            return StructureSpec.power(self.params["power"])
        if self.classified == "exponential":
            return StructureSpec.exponential(self.params["gamma"])
        return StructureSpec.gaussian(self.params["sigma"])


def _weighted_line(x: np.ndarray, y: np.ndarray, w: np.ndarray):
    root = np.sqrt(w)
    a = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a * root[:, None], y * root, rcond=None)
    resid = y - a @ coef
    ybar = np.average(y, weights=w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - float(np.sum(w * resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[1]), float(coef[0]), r2


def extract_structure_function(
    op: EigenbasisOperator,
    spectrum: Spectrum,
    ebar_window: tuple[float, float] | None = None,
    bin_width: float | None = None,
    *,
    omega_range: tuple[float, float] | None = None,
    min_pairs: int = 100,
    min_count: int = 8,
    tie_margin: float = 0.02,
    flat_log_range: float = 0.7,
) -> StructureFunctionFit:
    """Bin |O_lk| by omega for pairs with mean energy in a window; classify decay.

    Defaults: the window is the central 20% of the spectrum and the bin
    width is 10x the mean level spacing inside the window. Fits are
    count-weighted and restricted to the decay flank (amplitudes below
    peak/e and above 30x the floor); the flat class is assigned when the
    binned amplitudes span less than ``flat_log_range`` in log.
    """
    e = spectrum.energies
    if op.dimension != spectrum.dimension:
        raise ValueError("operator and spectrum dimensions differ")
    if ebar_window is None:
        center = 0.5 * (e[0] + e[-1])
        halfwidth = 0.1 * (e[-1] - e[0])
        ebar_window = (center - halfwidth, center + halfwidth)
    lo_e, hi_e = float(ebar_window[0]), float(ebar_window[1])

    in_win = e[(e >= lo_e) & (e <= hi_e)]
    if bin_width is None:
        if in_win.size < 2:
            raise InsufficientStatisticsError("fewer than two eigenvalues in the window")
        bin_width = 10.0 * (in_win[-1] - in_win[0]) / (in_win.size - 1)
    bin_width = float(bin_width)
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")

    l, k = np.triu_indices(spectrum.dimension, 1)
    ebar = 0.5 * (e[l] + e[k])
    keep = (ebar >= lo_e) & (ebar <= hi_e)
    omega = (e[k] - e[l])[keep]
    val = op.elements[l, k][keep] ** 2
    if omega_range is not None:
        sub = (omega >= omega_range[0]) & (omega <= omega_range[1])
        omega, val = omega[sub], val[sub]
    if omega.size < min_pairs:
        raise InsufficientStatisticsError(
            f"only {omega.size} eigenstate pairs in the window (need >= {min_pairs})"
        )

    n_bins = int(np.ceil(float(np.max(omega)) / bin_width)) or 1
    idx = np.minimum((omega / bin_width).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=val, minlength=n_bins)
    good = counts >= min_count
    centers = (np.arange(n_bins)[good] + 0.5) * bin_width
    amps = np.sqrt(sums[good] / counts[good])
    counts = counts[good]

    nonzero = amps > 1e-12 * amps.max()
    centers, amps, counts = centers[nonzero], amps[nonzero], counts[nonzero]
    warns: list[str] = []
    if centers.size < 4:
        raise InsufficientStatisticsError("fewer than four usable omega bins")

    log_amp = np.log(amps)
    quality: dict[str, float] = {}
    slopes: dict[str, float] = {}
    params: dict[str, float] = {}

    # decay flank: past the peak, above the noise floor
    peak = amps.max()
    floor = amps.min()
    flank = (amps <= peak / math.e) & (amps >= 30.0 * floor)
    if flank.sum() < 4:
        flank = amps <= peak / math.e
    if flank.sum() < 4:
        flank = np.ones_like(amps, dtype=bool)
        warns.append("no resolved decay flank; fitting all bins")
    fx = centers[flank]
    fy = log_amp[flank]
    fw = counts[flank].astype(float)

    for law, xs in (("exponential", fx), ("gaussian", fx**2), ("power", np.log(fx))):
        slope, _, r2 = _weighted_line(xs, fy, fw)
        quality[law] = r2
        slopes[law] = slope
    if slopes["exponential"] < 0:
        params["gamma"] = -slopes["exponential"]
    if slopes["gaussian"] < 0:
        params["sigma"] = math.sqrt(-1.0 / (2.0 * slopes["gaussian"]))
    if slopes["power"] < 0:
        params["power"] = -slopes["power"]

    log_span = float(log_amp.max() - log_amp.min())
    if log_span < flat_log_range:
        classified = "flat"
    else:
        decaying = [law for law in ("exponential", "gaussian", "power") if slopes[law] < 0]
        if not decaying:
            classified = "flat"
            warns.append("no decaying law fits; classified flat")
        else:
            best = max(decaying, key=lambda law: quality[law])
            if "exponential" in decaying and quality["exponential"] >= quality[best] - tie_margin:
                classified = "exponential"
            else:
                classified = best

    return StructureFunctionFit(
        omega_centers=centers,
        amplitudes=amps,
        counts=counts,
        window=(lo_e, hi_e),
        bin_width=bin_width,
        classified=classified,
        params=params,
        fit_quality=quality,
        flank=(float(fx[0]), float(fx[-1])),
        warnings=tuple(warns),
    )
