import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from opgrowth import (
    ChainConfig,
    EmptySectorError,
    InsufficientStatisticsError,
    StructureSpec,
    build_hamiltonian,
    diagonalize_to_eigenbasis,
    extract_structure_function,
    flip_flop_operator,
    random_ensemble,
    sector_basis,
    translation_operator,
    truncate_operator,
)


def kron_chain(ops):
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


def full_space_operator(sites, pair_op, offset):
    """Independent oracle: sum_i pair_op(i, i+offset) built by Kronecker
    products over the full 2^L space, then restricted to a sector basis."""
    eye = np.eye(2)
    dim = 2**sites
    total = np.zeros((dim, dim))
    for i in range(sites):
        j = (i + offset) % sites
        for a, b in pair_op:
            ops = [eye] * sites
            ops[i] = a if i != j else a @ b
            if i != j:
                ops[j] = b
            total += kron_chain(ops)
    return total


def restrict(full, states, sites):
    # kron order: site 0 is the leftmost factor; our bit i is site i
    idx = []
    for s in states:
        bits = [(int(s) >> i) & 1 for i in range(sites)]
        pos = 0
        for b in bits:  # site 0 most significant in the kron ordering
            pos = 2 * pos + b
        idx.append(pos)
    return full[np.ix_(idx, idx)]


SP = np.array([[0.0, 1.0], [0.0, 0.0]])  # S+ with basis (up, down)
SM = SP.T
SZ = np.diag([0.5, -0.5])
SX = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
SY_I = 0.5 * np.array([[0.0, -1.0], [1.0, 0.0]])  # S^y / i, real


def test_sector_dimensions():
    assert ChainConfig(sites=12).sector_dimension == 924
    assert ChainConfig(sites=14).sector_dimension == 3432
    assert ChainConfig(sites=8, sector=1).sector_dimension == math.comb(8, 5)
    assert len(sector_basis(ChainConfig(sites=8))) == 70


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(sites=7)
    with pytest.raises(ValueError):
        ChainConfig(sites=16)
    with pytest.raises(EmptySectorError):
        ChainConfig(sites=4, sector=5)
    with pytest.raises(ValueError):
        ChainConfig(sites=4, boundary="open")


def test_l2_doubled_bond_convention():
    # the literal periodic sum visits the single L = 2 bond twice, so the
    # sector spectrum is exactly twice the Heisenberg dimer {-3/4, +1/4}
    cfg = ChainConfig(sites=2, j1=1.0, delta1=1.0)
    ham = build_hamiltonian(cfg)
    vals = np.linalg.eigvalsh(ham)
    np.testing.assert_allclose(vals, [-1.5, 0.5], atol=1e-14)
    np.testing.assert_allclose(np.linalg.eigvalsh(ham / 2.0), [-0.75, 0.25], atol=1e-14)


def test_hamiltonian_matches_kron_oracle():
    cfg = ChainConfig(sites=6, j1=0.9, delta1=0.55, j2=0.4, delta2=0.5)
    states = sector_basis(cfg)
    xy1 = full_space_operator(6, [(SX, SX), (SY_I, -SY_I)], 1)
    zz1 = full_space_operator(6, [(SZ, SZ)], 1)
    xy2 = full_space_operator(6, [(SX, SX), (SY_I, -SY_I)], 2)
    zz2 = full_space_operator(6, [(SZ, SZ)], 2)
    full = 0.9 * (xy1 + 0.55 * zz1) + 0.4 * (xy2 + 0.5 * zz2)
    expected = restrict(full, states, 6)
    np.testing.assert_allclose(build_hamiltonian(cfg), expected, atol=1e-12)


def test_flip_flop_matches_kron_oracle():
    cfg = ChainConfig(sites=4)
    states = sector_basis(cfg)
    assert len(states) == 6
    full = full_space_operator(4, [(SP, SM), (SM, SP)], 2) / 4.0
    expected = restrict(full, states, 4)
    np.testing.assert_allclose(flip_flop_operator(cfg), expected, atol=1e-14)


def test_ground_state_matches_sparse_eigensolver():
    cfg = ChainConfig(sites=8, j1=1.0, delta1=0.55)
    ham = build_hamiltonian(cfg)
    dense = np.linalg.eigvalsh(ham)[0]
    sparse = eigsh(ham, k=1, which="SA")[0][0]
    assert dense == pytest.approx(sparse, abs=1e-10)


def test_translation_invariance_exact_integer_arithmetic():
    cfg = ChainConfig(sites=6)
    b_int = np.rint(cfg.sites * flip_flop_operator(cfg)).astype(np.int64)
    t_int = np.rint(translation_operator(cfg)).astype(np.int64)
    assert np.array_equal(b_int @ t_int, t_int @ b_int)
    h_cfg = ChainConfig(sites=6, j1=4.0, delta1=1.0, j2=4.0, delta2=0.5)
    h_int = np.rint(build_hamiltonian(h_cfg)).astype(np.int64)
    assert np.array_equal(h_int @ t_int, t_int @ h_int)


def test_diagonalization_roundtrip_and_invariants():
    cfg = ChainConfig(sites=8, j1=1.0, delta1=0.55, j2=1.0, delta2=0.5)
    ham = build_hamiltonian(cfg)
    obs = flip_flop_operator(cfg)
    spec, op = diagonalize_to_eigenbasis(ham, obs)
    # trace preserved
    assert np.trace(op.elements) == pytest.approx(np.trace(obs), abs=1e-10)
    # V diagonalizes H
    vals, vecs = np.linalg.eigh(ham)
    resid = vecs.T @ ham @ vecs - np.diag(vals)
    assert np.max(np.abs(resid)) < 1e-10
    assert np.max(np.abs(vecs.T @ vecs - np.eye(len(vals)))) < 1e-10
    # transforming back recovers the observable
    back = vecs @ op.elements @ vecs.T
    np.testing.assert_allclose(back, obs, atol=1e-10)
    assert np.all(np.diff(spec.energies) >= 0)


def test_truncate_operator():
    cfg = ChainConfig(sites=6)
    spec, op = diagonalize_to_eigenbasis(build_hamiltonian(cfg), flip_flop_operator(cfg))
    full_spec, full_op = truncate_operator(op, spec, spec.dimension)
    np.testing.assert_allclose(full_op.elements, op.elements, atol=0)
    sub_spec, sub_op = truncate_operator(op, spec, 5)
    assert sub_spec.dimension == 5
    assert np.array_equal(sub_op.elements, sub_op.elements.T)
    with pytest.raises(ValueError):
        truncate_operator(op, spec, spec.dimension + 1)


# ---------------------------------------------------------------------------
# structure-function extraction
# ---------------------------------------------------------------------------

def test_exponential_ensemble_classified_and_rate_recovered():
    gamma = 1.0
    spec, op = random_ensemble(900, StructureSpec.exponential(gamma), 30.0, seed=6)
    fit = extract_structure_function(op, spec)
    assert fit.classified == "exponential"
    assert fit.params["gamma"] == pytest.approx(gamma, rel=0.10)


def test_gaussian_ensemble_classified():
    spec, op = random_ensemble(900, StructureSpec.gaussian(2.0), 25.0, seed=8)
    fit = extract_structure_function(op, spec)
    assert fit.classified == "gaussian"
    assert fit.params["sigma"] == pytest.approx(2.0, rel=0.15)


def test_flat_ensemble_classified_flat():
    spec, op = random_ensemble(700, StructureSpec.flat(), 20.0, seed=9)
    fit = extract_structure_function(op, spec)
    assert fit.classified == "flat"


def test_power_ensemble_classified_power():
    spec, op = random_ensemble(900, StructureSpec.power(2.5), 60.0, seed=10)
    fit = extract_structure_function(op, spec)
    assert fit.classified == "power"
    assert fit.params["power"] == pytest.approx(2.5, rel=0.2)


def test_insufficient_statistics_raises():
    spec, op = random_ensemble(100, StructureSpec.flat(), 10.0, seed=1)
    with pytest.raises(InsufficientStatisticsError):
        extract_structure_function(op, spec, ebar_window=(9.99, 10.0))


def test_fit_reports_all_three_laws():
    spec, op = random_ensemble(600, StructureSpec.exponential(0.7), 25.0, seed=2)
    fit = extract_structure_function(op, spec)
    assert set(fit.fit_quality) == {"exponential", "gaussian", "power"}
    assert fit.as_spec().decay == "exponential"
