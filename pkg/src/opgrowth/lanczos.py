"""Lanczos recursion over Liouville space with the thermal inner product.

The Liouvillian is diagonal in the energy eigenbasis, so every Krylov vector
of a real-symmetric seed lives on the weighted Bohr-frequency modes
(l < k pairs) and alternates symmetric/antisymmetric parity. The recursion
is run in that folded representation: vectors carry sqrt(2 w_lk) absorbed,
inner products become plain dot products, and cross-parity orthogonality is
exact by construction. This is an exact reformulation of matrix-space
Lanczos that keeps exponentially small mode amplitudes clean instead of
burying them under round-off injected from O(1) matrix entries.

Also here: the two moment<->coefficient conversions (tridiagonal powers one
way, the Chebyshev orthogonal-polynomial recursion the other) and the
growth-rate fitting utilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionMismatchError,
    EigenbasisOperator,
    LiouvilleVector,
    Spectrum,
    ThermalEnsemble,
    ZeroNormError,
)
from .ddouble import DoubleDouble, dd_dot


class MomentPositivityError(ValueError):
    """An intermediate norm went non-positive: precision exhausted or invalid moments."""


@dataclass
class LanczosSequence:
    """Lanczos coefficients b_1..b_N with termination and precision metadata.

    When the recursion halts early, ``terminated_at`` holds the 1-based index
    of the final, below-tolerance coefficient (which is kept in
    ``coefficients`` as its last entry).
    """

    coefficients: np.ndarray
    terminated_at: int | None = None
    precision_mode: str = "double"
    reorthogonalized: bool = True
    seed_norm: float | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    @property
    def effective_coefficients(self) -> np.ndarray:
        """Coefficients with the terminal below-tolerance entry dropped."""
        if self.terminated_at is not None:
            return self.coefficients[: self.terminated_at - 1]
        return self.coefficients


@dataclass
class MomentSequence:
    """log mu_2n for n = 1..N; symmetric measures have no odd moments.

    ``log_mu0`` carries the zeroth moment for unnormalized sequences so the
    coefficient reconstruction can form the scale-invariant ratios.
    """

    log_moments: np.ndarray
    normalized: bool = True
    log_mu0: float = 0.0

    def __post_init__(self):
        self.log_moments = np.asarray(self.log_moments, dtype=float)
        if self.normalized and self.log_mu0 != 0.0:
            raise ValueError("normalized sequences must have log_mu0 == 0")

    def moments(self) -> np.ndarray:
        return np.exp(self.log_moments)

    def check_log_convexity(self, slack: float = 1e-9) -> bool:
        """Hamburger necessary condition on even moments: mu_2n^2 <= mu_2n-2 mu_2n+2."""
        lm = np.concatenate([[self.log_mu0], self.log_moments])
        mid = 2.0 * lm[1:-1]
        outer = lm[:-2] + lm[2:]
        return bool(np.all(outer >= mid - slack))


@dataclass(frozen=True)
class ModeSet:
    """Seed operator collapsed onto its weighted Bohr-frequency modes.

    ``amplitude`` is the unit-thermal-norm seed with sqrt(2 w_lk) absorbed;
    ``seed_norm`` is the thermal norm that was divided out.
    """

    omega: np.ndarray
    amplitude: np.ndarray
    seed_norm: float
    dimension: int
    warnings: tuple[str, ...] = ()


def liouville_modes(
    op: EigenbasisOperator,
    spectrum: Spectrum,
    ens: ThermalEnsemble,
    *,
    floor_policy: str = "zero",
) -> ModeSet:
    """Strip the diagonal and fold (operator, weights) onto l < k modes.

    floor_policy controls elements flagged ``below_floor`` by the producing
    solver: "zero" (default) discards them, "keep" retains the raw values
    (which reproduces precision-floor artefacts in the growth rate).
    """
    if not (op.dimension == spectrum.dimension == ens.dimension):
        raise DimensionMismatchError(
            f"dimension mismatch: {(op.dimension, spectrum.dimension, ens.dimension)}"
        )
    if floor_policy not in ("zero", "keep"):
        raise ValueError(f"unknown floor_policy: {floor_policy!r}")
    m = op.elements
    if op.below_floor is not None and floor_policy == "zero":
        m = np.where(op.below_floor, 0.0, m)

    d = op.dimension
    l, k = np.triu_indices(d, 1)
    s = m[l, k]
    scale = float(np.max(np.abs(s))) if s.size else 0.0
    if scale == 0.0:
        raise ZeroNormError("operator has no off-diagonal part (static operator)")
    e = spectrum.energies
    omega = e[k] - e[l]
    amp = np.sqrt(2.0 * ens.weights[l, k]) * (s / scale)

    keep = amp != 0.0
    omega = np.ascontiguousarray(omega[keep])
    amp = np.ascontiguousarray(amp[keep])
    norm = math.sqrt(float(np.sum(amp * amp)))
    if norm == 0.0 or not math.isfinite(norm):
        raise ZeroNormError("operator has zero thermal norm (static operator)")
    seed_norm = scale * norm

    warnings: tuple[str, ...] = ()
    e_scale = max(1.0, float(np.max(np.abs(e))))
    static = omega <= 1e-12 * e_scale
    if np.any(static):
        frac = float(np.sum(amp[static] ** 2)) / float(np.sum(amp * amp))
        warnings = (
            f"degenerate Bohr frequencies carry static off-diagonal weight {frac:.3e}",
        )
    return ModeSet(omega, amp / norm, seed_norm, d, warnings)


def _dot_double(a: np.ndarray, b: np.ndarray) -> float:
    # np.sum is pairwise over a fixed layout: deterministic across thread counts
    return float(np.sum(a * b))


def _dot_extended(a: np.ndarray, b: np.ndarray) -> float:
    return float(dd_dot(a, b))


def _run_folded(modes: ModeSet, n_max, reorthogonalize, precision, termination_tol):
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if precision not in ("double", "extended"):
        raise ValueError(f"unknown precision mode: {precision!r}")
    dot = _dot_extended if precision == "extended" else _dot_double

    omega = modes.omega
    basis = [modes.amplitude.copy()]
    coeffs: list[float] = []
    terminated_at = None
    for n in range(1, n_max + 1):
        # true folded Liouvillian: multiply by -omega and flip parity
        u = -omega * basis[-1]
        if len(basis) >= 2:
            u -= coeffs[-1] * basis[-2]
        if reorthogonalize:
            # cross-parity overlaps vanish identically in this representation;
            # two Gram-Schmidt passes against the same-parity predecessors
            for _ in range(2):
                for j in range(len(basis) - 2, -1, -2):
                    u -= dot(u, basis[j]) * basis[j]
        b = math.sqrt(dot(u, u))
        coeffs.append(b)
        if b < termination_tol * coeffs[0]:
            terminated_at = n
            break
        basis.append(u / b)
    return np.array(coeffs), terminated_at, basis


def lanczos_run(
    seed_op: EigenbasisOperator,
    spectrum: Spectrum,
    ens: ThermalEnsemble,
    n_max: int,
    *,
    reorthogonalize: bool = True,
    precision: str = "double",
    termination_tol: float = 1e-10,
    floor_policy: str = "zero",
) -> LanczosSequence:
    """Three-term thermal Lanczos recursion seeded by an operator.

    The seed's diagonal is stripped and the remainder normalized (the
    discarded thermal norm is reported as ``seed_norm``). The recursion
    halts early with ``terminated_at`` set once b_n < termination_tol * b_1;
    requesting more than the Krylov dimension is reported this way, not as
    an error.
    """
    modes = liouville_modes(seed_op, spectrum, ens, floor_policy=floor_policy)
    coeffs, terminated_at, _ = _run_folded(
        modes, n_max, reorthogonalize, precision, termination_tol
    )
    return LanczosSequence(
        coefficients=coeffs,
        terminated_at=terminated_at,
        precision_mode=precision,
        reorthogonalized=reorthogonalize,
        seed_norm=modes.seed_norm,
        warnings=modes.warnings,
    )


def lanczos_run_with_basis(
    seed_op: EigenbasisOperator,
    spectrum: Spectrum,
    ens: ThermalEnsemble,
    n_max: int,
    **options,
) -> tuple[LanczosSequence, list[LiouvilleVector]]:
    """lanczos_run that also reconstructs the Krylov basis as operators.

    Intended for invariant checks at small dimension; the basis matrices are
    dense D x D per vector.
    """
    floor_policy = options.pop("floor_policy", "zero")
    reorthogonalize = options.pop("reorthogonalize", True)
    precision = options.pop("precision", "double")
    termination_tol = options.pop("termination_tol", 1e-10)
    if options:
        raise TypeError(f"unknown options: {sorted(options)}")
    modes = liouville_modes(seed_op, spectrum, ens, floor_policy=floor_policy)
    coeffs, terminated_at, basis = _run_folded(
        modes, n_max, reorthogonalize, precision, termination_tol
    )

    d = modes.dimension
    l, k = np.triu_indices(d, 1)
    keep_mask = np.zeros(l.size, dtype=bool)
    # rebuild the pruning mask used by liouville_modes
    m = seed_op.elements
    if seed_op.below_floor is not None and floor_policy == "zero":
        m = np.where(seed_op.below_floor, 0.0, m)
    s = m[l, k]
    keep_mask = (np.sqrt(2.0 * ens.weights[l, k]) * s) != 0.0
    root_w = np.sqrt(2.0 * ens.weights[l, k][keep_mask])

    vectors = []
    for j, folded in enumerate(basis):
        mat = np.zeros((d, d))
        vals = folded / root_w
        mat[l[keep_mask], k[keep_mask]] = vals
        sign = 1.0 if j % 2 == 0 else -1.0
        mat[k[keep_mask], l[keep_mask]] = sign * vals
        vectors.append(LiouvilleVector(mat))
    seq = LanczosSequence(
        coefficients=coeffs,
        terminated_at=terminated_at,
        precision_mode=precision,
        reorthogonalized=reorthogonalize,
        seed_norm=modes.seed_norm,
        warnings=modes.warnings,
    )
    return seq, vectors


# ---------------------------------------------------------------------------
# moment <-> coefficient conversions
# ---------------------------------------------------------------------------

def moments_from_lanczos(
    seq: LanczosSequence | np.ndarray,
    n_max: int | None = None,
    *,
    precision: str = "extended",
) -> MomentSequence:
    """mu_2n = (T^2n)_00 for the symmetric tridiagonal matrix with off-diagonal b.

    Computed by repeated tridiagonal application to e_0 with per-step
    rescaling (log-stabilized), in double-double arithmetic by default.
    """
    b = seq.effective_coefficients if isinstance(seq, LanczosSequence) else np.asarray(seq, float)
    n_sites = len(b) + 1
    if n_max is None:
        n_max = len(b)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    use_dd = precision == "extended"
    if not use_dd and precision != "double":
        raise ValueError(f"unknown precision mode: {precision!r}")

    if use_dd:
        u = [DoubleDouble(0.0)] * n_sites
        u[0] = DoubleDouble(1.0)
        bdd = [DoubleDouble(x) for x in b]
    else:
        u = [0.0] * n_sites
        u[0] = 1.0
        bdd = list(map(float, b))

    log_scale = 0.0
    logs = []
    for step in range(1, 2 * n_max + 1):
        v = [None] * n_sites
        for i in range(n_sites):
            acc = DoubleDouble(0.0) if use_dd else 0.0
            if i > 0:
                acc = acc + bdd[i - 1] * u[i - 1]
            if i < n_sites - 1:
                acc = acc + bdd[i] * u[i + 1]
            v[i] = acc
        mx = max(abs(float(x)) for x in v)
        if mx == 0.0:
            raise MomentPositivityError("tridiagonal power vanished identically")
        inv = (DoubleDouble(1.0) / DoubleDouble(mx)) if use_dd else 1.0 / mx
        u = [x * inv for x in v]
        log_scale += math.log(mx)
        if step % 2 == 0:
            val = float(u[0])
            if val <= 0.0:
                raise MomentPositivityError(f"(T^{step})_00 non-positive")
            logs.append(log_scale + math.log(val))
    return MomentSequence(np.array(logs), normalized=True)


def lanczos_from_moments(
    moments: MomentSequence,
    *,
    precision: str = "extended",
) -> LanczosSequence:
    """Recover b_1..b_N from even moments via the Chebyshev recursion.

    The symmetric-measure form is used (odd moments vanish, diagonal
    recurrence coefficients are identically zero). Numerically unstable in
    double precision beyond n ~ 20; extended (double-double) mode is the
    default and required for longer sequences. Raises MomentPositivityError
    when an intermediate norm goes non-positive.
    """
    if not moments.check_log_convexity():
        raise ValueError("moments violate the even-moment log-convexity condition")
    use_dd = precision == "extended"
    if not use_dd and precision != "double":
        raise ValueError(f"unknown precision mode: {precision!r}")

    log_mu = moments.log_moments - moments.log_mu0
    n_coeff = len(log_mu)
    # rescale frequencies so the measure support maps near [-2, 2]; anchoring
    # the scale on max_n mu_2n^(1/2n) minimizes the cancellation amplification
    log_w = float(np.max(log_mu / (2.0 * np.arange(1, n_coeff + 1)))) - math.log(2.0)
    scaled = np.exp(log_mu - 2.0 * log_w * np.arange(1, n_coeff + 1))

    n_m = 2 * n_coeff + 1
    m = [0.0] * n_m
    m[0] = 1.0
    for n, val in enumerate(scaled, start=1):
        m[2 * n] = float(val)
    if use_dd:
        m = [DoubleDouble(x) for x in m]

    zero = DoubleDouble(0.0) if use_dd else 0.0
    sigma_prev = [zero] * n_m          # row k-2
    sigma_cur = list(m)                # row k-1 (k=0)
    betas = []
    terminated_at = None
    for k in range(1, n_coeff + 1):
        row = [zero] * n_m
        for ell in range(k, 2 * n_coeff - k + 1):
            v = sigma_cur[ell + 1]
            if betas:
                v = v - betas[-1] * sigma_prev[ell]
            row[ell] = v
        beta_k = row[k] / sigma_cur[k - 1]
        ref = float(betas[-1]) if betas else 1.0
        if float(beta_k) <= 1e-12 * ref:
            if float(beta_k) < -1e-9 * ref:
                raise MomentPositivityError(
                    f"loss of positivity at coefficient {k} "
                    "(precision exhausted or invalid moments)"
                )
            # measure exhausted (finite point support): valid degenerate end
            betas.append(zero)
            terminated_at = k
            break
        betas.append(beta_k)
        sigma_prev, sigma_cur = sigma_cur, row

    w = math.exp(log_w)
    b = np.array([math.sqrt(max(float(x), 0.0)) * w for x in betas])
    return LanczosSequence(
        coefficients=b,
        terminated_at=terminated_at,
        precision_mode=precision,
        reorthogonalized=False,
        seed_norm=None,
    )


# ---------------------------------------------------------------------------
# growth-rate fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    """Linear growth rate of b_n plus the log-log exponent diagnostic."""

    alpha: float
    stderr: float
    exponent: float
    exponent_stderr: float
    intercept: float
    r_squared: float
    window: tuple[int, int]
    warnings: tuple[str, ...] = ()


def _least_squares(x: np.ndarray, y: np.ndarray):
    a = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(x) - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(ss_res / dof / sxx) if sxx > 0 else float("nan")
    return float(coef[1]), float(coef[0]), stderr, r2


def growth_fit(
    seq: LanczosSequence | np.ndarray,
    window: tuple[int, int] | None = None,
) -> GrowthFit:
    """Least-squares slope of b_n vs n over a window, plus b_n ~ n^delta.

    The log-log exponent discriminates sub-linear growth; a warning is
    attached when it falls below 0.9.
    """
    b = seq.effective_coefficients if isinstance(seq, LanczosSequence) else np.asarray(seq, float)
    if window is None:
        window = default_fit_window(b)
    lo, hi = int(window[0]), int(window[1])
    if lo < 1 or hi > len(b):
        raise ValueError(f"window {window} outside sequence of length {len(b)}")
    if hi - lo < 5:
        raise ValueError(f"window {window} too small (need n_hi - n_lo >= 5)")
    n = np.arange(lo, hi + 1, dtype=float)
    y = b[lo - 1 : hi]
    alpha, intercept, stderr, r2 = _least_squares(n, y)

    pos = y > 0
    if pos.sum() >= 3:
        exponent, _, exp_err, _ = _least_squares(np.log(n[pos]), np.log(y[pos]))
    else:
        exponent, exp_err = float("nan"), float("nan")

    warns = []
    if np.isfinite(exponent) and exponent < 0.9:
        warns.append(
            f"sub-linear growth (exponent {exponent:.2f} < 0.9); the linear rate is not meaningful"
        )
    return GrowthFit(alpha, stderr, exponent, exp_err, intercept, r2, (lo, hi), tuple(warns))


def rolling_slopes(b: np.ndarray, width: int = 5) -> np.ndarray:
    """Slope of b_n over each consecutive window [j, j + width - 1], j = 1-based."""
    b = np.asarray(b, dtype=float)
    out = []
    for j in range(1, len(b) - width + 2):
        n = np.arange(j, j + width, dtype=float)
        s, *_ = _least_squares(n, b[j - 1 : j + width - 1])
        out.append(s)
    return np.array(out)


def default_fit_window(b: np.ndarray, *, skip: int = 4, width: int = 5, drop: float = 0.5):
    """Default growth window: skip the n <= 4 transient, stop at the plateau.

    The plateau is the first rolling-slope drop below ``drop`` times the
    running maximum slope.
    """
    b = np.asarray(b, dtype=float)
    n_lo = skip + 1
    n_hi = len(b)
    if len(b) < n_lo + 5:
        n_lo = max(1, len(b) - 5)
        return (n_lo, len(b))
    slopes = rolling_slopes(b, width)
    run_max = -np.inf
    for j, s in enumerate(slopes, start=1):
        if j < n_lo:
            run_max = max(run_max, s)
            continue
        if run_max > 0 and s < drop * run_max:
            n_hi = min(n_hi, j + width - 2)
            break
        run_max = max(run_max, s)
    if n_hi - n_lo < 5:
        n_hi = min(len(b), n_lo + 5)
    return (n_lo, n_hi)


def detect_rate_jump(
    b: np.ndarray | LanczosSequence,
    *,
    width: int = 6,
    factor: float = 1.8,
    min_history: int = 4,
) -> int | None:
    """Locate a spurious upward change in the local growth rate of b_n.

    Returns the approximate n at which the local slope first exceeds
    ``factor`` times the largest slope seen before it, or None. Gradual
    (physical) accelerations never clear the running maximum by that
    factor; the precision-floor artefact does, because round-off-dominated
    matrix elements mimic non-decaying random elements and kick the rate
    up discontinuously.
    """
    arr = b.effective_coefficients if isinstance(b, LanczosSequence) else np.asarray(b, float)
    if len(arr) < 2 * width + min_history:
        return None
    slopes = rolling_slopes(arr, width)
    # the comparison base lags one window behind so a smeared transition
    # cannot raise its own threshold
    for i in range(width + min_history - 1, len(slopes)):
        base = float(np.max(slopes[: i - width + 1]))
        if base > 0 and slopes[i] > factor * base:
            return i + 1 + width // 2
    return None
