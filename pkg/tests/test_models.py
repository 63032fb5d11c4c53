import math

import numpy as np
import pytest
from scipy.integrate import quad

from opgrowth import (
    AnharmonicConfig,
    BoundaryLeakError,
    StructureSpec,
    anharmonic_solve,
    bohr_sommerfeld_energy,
    box_position_1d,
    box_position_2d,
    gaussian_decay_estimate,
    harmonic_position,
    harmonic_power,
    random_ensemble,
    semiclassical_action_slope,
    semiclassical_decay_integrand,
    semiclassical_log_element,
    semiclassical_operator,
    uq_binomial,
    uq_binomial_exact,
    uq_element,
)


# ---------------------------------------------------------------------------
# harmonic oscillator
# ---------------------------------------------------------------------------

def test_harmonic_position_basic_elements():
    spec, op = harmonic_position(6)
    assert op.elements[1, 0] == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    np.testing.assert_allclose(spec.energies, np.arange(6) + 0.5)
    # selection rule: only |l - k| = 1 nonzero
    mask = np.abs(np.subtract.outer(np.arange(6), np.arange(6))) != 1
    assert np.all(op.elements[mask] == 0.0)


def test_harmonic_position_scaling():
    _, op = harmonic_position(4, mass=1.0, omega=2.0)
    assert op.elements[3, 2] == pytest.approx(math.sqrt(0.25) * math.sqrt(3), rel=1e-15)


def test_harmonic_power_q1_and_q2():
    _, x = harmonic_position(8)
    p1 = harmonic_power(8, 1)
    np.testing.assert_allclose(p1.elements, x.elements, atol=0)
    p2 = harmonic_power(8, 2)
    assert p2.elements[0, 0] == pytest.approx(0.5, rel=1e-14)
    # parity: zero whenever l - k and q have opposite parity
    l, k = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    assert np.all(p2.elements[(l - k) % 2 == 1] == 0.0)


def test_harmonic_power_truncation_is_exact():
    # the returned block must match the same block of a much larger power
    q, dim = 5, 10
    big = np.linalg.matrix_power(harmonic_position(dim + 40)[1].elements, q)[:dim, :dim]
    got = harmonic_power(dim, q).elements
    np.testing.assert_allclose(got, 0.5 * (big + big.T), rtol=1e-13)


# ---------------------------------------------------------------------------
# binomial hop powers and the Stirling estimate
# ---------------------------------------------------------------------------

def test_uq_examples_q2():
    assert uq_element(2, 2, 0) == 1
    assert uq_element(2, 1, 1) == 2
    assert uq_element(2, 0, 0) == 1  # boundary case l + k < q


@pytest.mark.parametrize("q,dim", [(1, 8), (2, 8), (3, 16), (7, 32), (12, 64)])
def test_uq_matches_integer_matrix_power(q, dim):
    u = np.zeros((dim + q, dim + q), dtype=object)
    for i in range(dim + q - 1):
        u[i, i + 1] = 1
        u[i + 1, i] = 1
    power = np.linalg.matrix_power(u, q)[:dim, :dim]
    exact = uq_binomial_exact(dim, q)
    assert np.array_equal(power, exact)
    np.testing.assert_allclose(
        uq_binomial(dim, q).elements, power.astype(float), atol=0
    )


def test_gaussian_estimate_peak_and_offset():
    q = 100
    peak = gaussian_decay_estimate(q, 0, 0)
    assert peak == pytest.approx(2.0**q * math.sqrt(2 / (math.pi * q)), rel=1e-15)
    assert gaussian_decay_estimate(q, 10, 0) == pytest.approx(peak * math.exp(-0.5), rel=1e-15)


def test_gaussian_estimate_accuracy_in_bulk():
    q = 100
    for d in range(0, 11):
        l = (q + d) // 2 + 25  # keep l + k >= q
        k = l - d
        if (q - d) % 2:
            continue
        exact = uq_element(q, l, k)
        est = gaussian_decay_estimate(q, l, k)
        assert est == pytest.approx(exact, rel=0.02)


# ---------------------------------------------------------------------------
# boxes
# ---------------------------------------------------------------------------

def test_box1d_values():
    spec, op = box_position_1d(6, 1.0)
    assert op.elements[0, 1] == pytest.approx(16 / (9 * math.pi**2), rel=1e-14)
    assert op.elements[0, 2] == 0.0  # m + n even
    _, op10 = box_position_1d(6, 10.0)
    assert op10.elements[1, 2] == pytest.approx(10 * 48 / (25 * math.pi**2), rel=1e-14)
    assert op10.elements[1, 2] == pytest.approx(1.9455, abs=2e-4)


def test_box1d_against_quadrature_oracle():
    # |<m| x - L/2 |n>| by numerical quadrature of the sine eigenfunctions
    # (the builder fixes eigenfunction phases so allowed elements are positive)
    length = 10.0
    _, op = box_position_1d(5, length)

    def overlap(m, n):
        val, _ = quad(
            lambda x: (2 / length)
            * math.sin(m * math.pi * x / length)
            * math.sin(n * math.pi * x / length)
            * (x - length / 2),
            0.0,
            length,
            limit=200,
        )
        return val

    for m in range(1, 6):
        for n in range(1, 6):
            assert op.elements[m - 1, n - 1] == pytest.approx(abs(overlap(m, n)), abs=1e-10)


def test_box1d_elements_decay_algebraically():
    # at fixed mean energy the envelope falls as omega^{-2}:
    # x_mn omega^2 = 2 pi^2 n m / L^3 is constant on an n^2 + m^2 shell
    spec, op = box_position_1d(500, 10.0)
    target = 2 * 250**2
    vals = []
    for m in range(178, 250):  # omega up to ~Ebar on the n^2 + m^2 shell
        n = int(round(math.sqrt(target - m**2)))
        if n >= 500 or (m + n) % 2 == 0:
            continue
        om = spec.energies[n - 1] - spec.energies[m - 1]
        vals.append(op.elements[m - 1, n - 1] * om**2)
    vals = np.array(vals)
    assert len(vals) > 25
    assert np.std(vals) / np.mean(vals) < 0.1


def test_box2d_reduces_to_1d_when_dy_is_one():
    spec1, op1 = box_position_1d(5, 2.0)
    spec2, op2 = box_position_2d((5, 1), (2.0, 1.0))
    np.testing.assert_allclose(op2.elements, op1.elements, atol=1e-15)
    # energies shift by the constant transverse ground energy
    np.testing.assert_allclose(
        np.diff(spec2.energies), np.diff(spec1.energies), rtol=1e-13
    )


def test_box2d_tensor_selection_rule():
    spec, op = box_position_2d((3, 3), (1.0, math.pi / 3))
    # rebuild the (n, m) labels in energy order
    e_x = (np.arange(1, 4) ** 2) * math.pi**2 / 2.0
    e_y = (np.arange(1, 4) ** 2) * math.pi**2 / (2.0 * (math.pi / 3) ** 2)
    labels = [(n, m) for n in range(1, 4) for m in range(1, 4)]
    order = np.argsort([e_x[n - 1] + e_y[m - 1] for n, m in labels], kind="stable")
    labels = [labels[i] for i in order]
    for i, (n, m) in enumerate(labels):
        for j, (np_, mp) in enumerate(labels):
            if m != mp:
                assert op.elements[i, j] == 0.0


def test_box2d_irrational_ratio_has_no_degeneracies():
    spec, _ = box_position_2d((3, 3), (1.0, math.pi / 3))
    assert np.all(np.diff(spec.energies) > 1e-10)


def test_box2d_rational_ratio_warns():
    with pytest.warns(RuntimeWarning):
        box_position_2d((4, 4), (1.0, 1.0))


# ---------------------------------------------------------------------------
# anharmonic oscillator and the shooting oracle
# ---------------------------------------------------------------------------

def shooting_energy(p, parity, bracket, mass=1.0, x_max=6.0, n_steps=24000):
    """Independent oracle: RK4 shooting for -psi''/(2m) + x^p psi = E psi.

    Even states start (psi, psi') = (1, 0), odd states (0, 1); the
    eigenvalue is bracketed by the sign of psi at x_max.
    """

    def tail(energy):
        h = x_max / n_steps
        psi, dpsi = (1.0, 0.0) if parity == "even" else (0.0, 1.0)
        x = 0.0

        def rhs(x, psi, dpsi):
            return dpsi, 2.0 * mass * (x**p - energy) * psi

        for _ in range(n_steps):
            k1 = rhs(x, psi, dpsi)
            k2 = rhs(x + h / 2, psi + h / 2 * k1[0], dpsi + h / 2 * k1[1])
            k3 = rhs(x + h / 2, psi + h / 2 * k2[0], dpsi + h / 2 * k2[1])
            k4 = rhs(x + h, psi + h * k3[0], dpsi + h * k3[1])
            psi += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            dpsi += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            x += h
        return psi

    lo, hi = bracket
    f_lo = tail(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = tail(mid)
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="module")
def quartic_solution():
    cfg = AnharmonicConfig(p=4, n_states=40, grid_points=1024)
    return anharmonic_solve(cfg)


def test_anharmonic_reduces_to_harmonic_for_p2():
    # V = x^2 means omega = sqrt(2)
    cfg = AnharmonicConfig(p=2, n_states=20, grid_points=512)
    spec, _ = anharmonic_solve(cfg)
    expected = math.sqrt(2.0) * (np.arange(20) + 0.5)
    np.testing.assert_allclose(spec.energies, expected, rtol=1e-6)


def test_anharmonic_quartic_against_shooting_oracle(quartic_solution):
    spec, _ = quartic_solution
    e0 = shooting_energy(4, "even", (0.4, 1.2))
    e1 = shooting_energy(4, "odd", (1.8, 3.0))
    assert spec.energies[0] == pytest.approx(e0, rel=1e-6)
    assert spec.energies[1] == pytest.approx(e1, rel=1e-6)
    # scale-invariant level ratio of the pure quartic
    assert spec.energies[1] / spec.energies[0] == pytest.approx(3.5833, abs=2e-4)


def test_anharmonic_parity_selection(quartic_solution):
    _, op = quartic_solution
    l, k = np.meshgrid(np.arange(30), np.arange(30), indexing="ij")
    same_parity = (l - k) % 2 == 0
    assert np.max(np.abs(op.elements[:30, :30][same_parity])) < 1e-12


def test_anharmonic_flags_subfloor_elements(quartic_solution):
    _, op = quartic_solution
    assert op.below_floor is not None
    floor = 1e-13 * np.abs(op.elements).max()
    assert np.any(op.below_floor)
    assert np.all(np.abs(op.elements[op.below_floor]) < floor)


def test_anharmonic_boundary_leak_error():
    cfg = AnharmonicConfig(p=4, n_states=30, grid_points=512, grid_halfwidth=2.0)
    with pytest.raises(BoundaryLeakError):
        anharmonic_solve(cfg)


# ---------------------------------------------------------------------------
# Bohr-Sommerfeld and semiclassical elements
# ---------------------------------------------------------------------------

def test_bohr_sommerfeld_exact_for_harmonic():
    # G(2) = pi/4 gives E_n = sqrt(2) (n + 1/2) exactly
    for n in range(6):
        assert bohr_sommerfeld_energy(2, n) == pytest.approx(
            math.sqrt(2.0) * (n + 0.5), rel=1e-14
        )


def test_bohr_sommerfeld_exponent():
    r = bohr_sommerfeld_energy(4, 20) / bohr_sommerfeld_energy(4, 10)
    assert r == pytest.approx((20.5 / 10.5) ** (4.0 / 3.0), rel=1e-13)


def test_bohr_sommerfeld_matches_grid(quartic_solution):
    spec, _ = quartic_solution
    for n in (5, 10, 20, 30):
        assert bohr_sommerfeld_energy(4, n) == pytest.approx(spec.energies[n], rel=0.02)


def test_bohr_sommerfeld_matches_grid_p6():
    cfg = AnharmonicConfig(p=6, n_states=32, grid_points=512)
    spec, _ = anharmonic_solve(cfg)
    for n in range(5, 31):
        assert bohr_sommerfeld_energy(6, n) == pytest.approx(spec.energies[n], rel=0.02)


def test_decay_integrand_scaling():
    for p in (4, 6):
        r = semiclassical_decay_integrand(p, 4.0) / semiclassical_decay_integrand(p, 1.0)
        assert r == pytest.approx(4.0 ** ((2.0 - p) / (2.0 * p)), rel=1e-13)


def test_decay_integrand_quadrature_agreement():
    for p, u in ((4, 1.7), (6, 12.0)):
        closed = semiclassical_decay_integrand(p, u)
        numeric = semiclassical_decay_integrand(p, u, method="quadrature")
        assert closed == pytest.approx(numeric, rel=1e-9)


def test_log_element_closed_vs_nested_quadrature():
    closed = semiclassical_log_element(4, 20, 10)
    numeric = semiclassical_log_element(4, 20, 10, method="quadrature")
    assert closed == pytest.approx(numeric, rel=1e-6)


def test_log_element_equals_action_slope_times_gap():
    assert semiclassical_log_element(4, 20, 10) == pytest.approx(
        10 * semiclassical_action_slope(4), rel=1e-12
    )


def test_action_slope_decreases_to_zero():
    vals = [semiclassical_action_slope(p) for p in range(4, 42, 2)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.2


def test_semiclassical_p2_rejected():
    with pytest.raises(ValueError):
        semiclassical_log_element(2, 5, 1)


def test_semiclassical_operator_log_linear():
    spec, op = semiclassical_operator(4, 40)
    ex = (4 + 2) / (2 * 4)
    x = spec.energies[1::2] ** ex  # parity-allowed row elements from level 0
    y = np.log(op.elements[0, 1::2])
    a = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    r2 = 1 - resid @ resid / np.sum((y - y.mean()) ** 2)
    assert r2 > 0.999
    assert np.array_equal(op.elements, op.elements.T)


def test_semiclassical_operator_grows_exponentially_below_bound():
    # sub-exponential element decay: linear b_n at a rate under pi/beta
    from opgrowth import ThermalEnsemble, growth_fit, lanczos_run

    beta = 1.0
    spec, op = semiclassical_operator(4, 50)
    ens = ThermalEnsemble.from_spectrum(spec, beta)
    seq = lanczos_run(op, spec, ens, 26)
    fit = growth_fit(seq, (3, 20))
    assert fit.alpha > 0
    assert fit.alpha + 2 * fit.stderr < math.pi / beta
    assert fit.exponent > 0.9


def test_semiclassical_operator_nearest_override():
    nearest = np.full(9, 0.123)
    _, op = semiclassical_operator(4, 10, nearest=nearest)
    assert np.all(op.elements[np.arange(1, 10), np.arange(9)] == 0.123)


# ---------------------------------------------------------------------------
# random ensembles
# ---------------------------------------------------------------------------

def test_random_flat_variance():
    dim = 500
    _, op = random_ensemble(dim, StructureSpec.flat(), 10.0, seed=9)
    l, k = np.triu_indices(dim, 1)
    v = np.var(math.sqrt(dim) * op.elements[l, k])
    assert v == pytest.approx(1.0, rel=0.05)


def test_random_exponential_rate_recovery():
    dim, gamma = 800, 1.0
    spec, op = random_ensemble(dim, StructureSpec.exponential(gamma), 30.0, seed=2)
    l, k = np.triu_indices(dim, 1)
    om = np.abs(spec.energies[l] - spec.energies[k])
    val = op.elements[l, k] ** 2
    edges = np.linspace(0, 12, 25)
    idx = np.digitize(om, edges) - 1
    centers, means = [], []
    for b in range(24):
        sel = idx == b
        if sel.sum() > 50:
            centers.append(0.5 * (edges[b] + edges[b + 1]))
            means.append(np.log(np.sqrt(val[sel].mean())))
    slope = np.polyfit(centers, means, 1)[0]
    assert -slope == pytest.approx(gamma, rel=0.10)


def test_random_ensemble_deterministic_under_seed():
    a = random_ensemble(64, StructureSpec.gaussian(2.0), 5.0, seed=123)
    b = random_ensemble(64, StructureSpec.gaussian(2.0), 5.0, seed=123)
    assert np.array_equal(a[1].elements, b[1].elements)
    c = random_ensemble(64, StructureSpec.gaussian(2.0), 5.0, seed=124)
    assert not np.array_equal(a[1].elements, c[1].elements)


def test_structure_spec_validation():
    with pytest.raises(ValueError):
        StructureSpec.exponential(-1.0)
    with pytest.raises(ValueError):
        StructureSpec("nope")
    env = StructureSpec.power(2.0).envelope([0.0, 1.0])
    np.testing.assert_allclose(env, [1.0, 0.25])


def test_every_builder_returns_sorted_spectrum_and_symmetric_matrix():
    builders = [
        harmonic_position(6),
        box_position_1d(6, 3.0),
        box_position_2d((3, 2), (1.0, 0.7)),
        semiclassical_operator(4, 8),
        random_ensemble(16, StructureSpec.flat(), 4.0, seed=0),
    ]
    for spec, op in builders:
        assert np.all(np.diff(spec.energies) >= 0)
        assert np.array_equal(op.elements, op.elements.T)
