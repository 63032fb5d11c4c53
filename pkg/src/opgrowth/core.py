"""Foundational types and the two Liouville-space primitives.

Everything downstream composes two operations defined here: the thermally
weighted (Wightman) inner product on operator space and the Liouvillian
action, both expressed in the energy eigenbasis of the Hamiltonian.
Conventions: hbar = k_B = 1, all operators real-symmetric in the chosen
eigenbasis, dense storage throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionMismatchError(ValueError):
    """Operands live in Liouville spaces of different dimension."""


class ZeroNormError(ValueError):
    """Thermal norm vanished: the operator has no dynamical (off-diagonal) part."""


@dataclass(frozen=True)
class Spectrum:
    """Ordered energy eigenvalues of a model Hamiltonian."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.ndim != 1 or e.size < 1:
            raise ValueError("energies must be a non-empty 1-d sequence")
        if np.any(np.diff(e) < 0):
            raise ValueError("energies must be sorted non-decreasing")
        object.__setattr__(self, "energies", e)

    @property
    def dimension(self) -> int:
        return self.energies.size


@dataclass(frozen=True)
class EigenbasisOperator:
    """Dense matrix of an observable's elements O_lk in an energy eigenbasis.

    ``below_floor`` optionally marks elements whose magnitude fell below the
    producing solver's precision floor; the Lanczos engine can zero or keep
    them (see lanczos.liouville_modes).
    """

    elements: np.ndarray
    hermitian_flag: bool = True
    below_floor: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.elements, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("elements must be a square matrix")
        if self.hermitian_flag and not np.array_equal(m, m.T):
            raise ValueError("hermitian_flag set but elements are not exactly symmetric")
        object.__setattr__(self, "elements", m)
        if self.below_floor is not None:
            mask = np.asarray(self.below_floor, dtype=bool)
            if mask.shape != m.shape:
                raise ValueError("below_floor mask must match elements shape")
            object.__setattr__(self, "below_floor", mask)

    @property
    def dimension(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True)
class ThermalEnsemble:
    """Inverse temperature plus derived Wightman weights and partition function.

    weights[l, k] = exp(-beta (E_l + E_k) / 2) / z with z = sum_l exp(-beta E_l).
    """

    beta: float
    z: float
    weights: np.ndarray

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum, beta: float) -> "ThermalEnsemble":
        if beta < 0:
            raise ValueError("beta must be >= 0")
        e = spectrum.energies
        # Shift by the ground energy before exponentiating; the shift cancels
        # exactly in w_lk and keeps both z and the weights in range.
        shifted = e - e[0]
        boltz = np.exp(-beta * shifted)
        z_shifted = float(np.sum(boltz))
        log_z = -beta * e[0] + np.log(z_shifted)
        half = np.exp(-0.5 * beta * shifted)
        w = np.outer(half, half) / z_shifted
        return cls(beta=float(beta), z=float(np.exp(log_z)), weights=w)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class LiouvilleVector:
    """An operator viewed as a vector in Liouville space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("amplitudes must be a square matrix")
        object.__setattr__(self, "amplitudes", a)

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]


def _check_dims(*dims: int):
    if len(set(dims)) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {dims}")


def thermal_inner(a: LiouvilleVector, b: LiouvilleVector, ens: ThermalEnsemble) -> float:
    """Wightman inner product <a|b>_beta = sum_lk w_lk a_lk b_lk.

    Symmetric, bilinear and positive-definite; reduces to
    Tr[exp(-beta H/2) A exp(-beta H/2) B] / Z for real-symmetric operators.
    """
    _check_dims(a.dimension, b.dimension, ens.dimension)
    return float(np.sum(ens.weights * a.amplitudes * b.amplitudes))


def liouville_apply(a: LiouvilleVector, spectrum: Spectrum) -> LiouvilleVector:
    """Apply the Liouvillian [H, .]: (L a)_lk = (E_l - E_k) a_lk (hbar = 1)."""
    _check_dims(a.dimension, spectrum.dimension)
    e = spectrum.energies
    return LiouvilleVector((e[:, None] - e[None, :]) * a.amplitudes)


def strip_diagonal(a: LiouvilleVector) -> LiouvilleVector:
    """Remove the static (Liouvillian-kernel) diagonal part of an operator."""
    m = a.amplitudes.copy()
    np.fill_diagonal(m, 0.0)
    return LiouvilleVector(m)


def normalize(a: LiouvilleVector, ens: ThermalEnsemble, *, strip: bool = True) -> LiouvilleVector:
    """Scale an operator to unit thermal norm.

    The diagonal part is stripped first by default (it is static and would
    let a purely diagonal operator masquerade as a valid Lanczos seed); a
    vanishing remainder raises ZeroNormError.
    """
    v = strip_diagonal(a) if strip else a
    nrm2 = thermal_inner(v, v, ens)
    if not np.isfinite(nrm2) or nrm2 <= 0.0:
        raise ZeroNormError("operator has zero thermal norm (static operator)")
    return LiouvilleVector(v.amplitudes / np.sqrt(nrm2))
