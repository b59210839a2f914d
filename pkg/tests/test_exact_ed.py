import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    MEAN_INVERSE_DISTANCE_UNIT_SQUARE,
    brute_force_two_electron,
    coulomb_element_polar,
    qmc_ground_orbital_element,
)
from squaredot.core_model import SINGLET as S_CHANNEL
from squaredot.core_model import EffectiveParams, MaterialParams, build_channel_h, eigenenergies, triplet
from squaredot.constants import effective_hartree
from squaredot.exact_ed import (
    SINGLET,
    TRIPLET,
    CoulombTensor,
    EDConfig,
    SizeError,
    SpectrumResult,
    build_h,
    center_ratio,
    charge_density,
    diagonal_basis_densities,
    extract_delta,
    load_or_compute,
    noninteracting_levels,
    orbital_index,
    pair_dimension,
    solve_ed,
    solve_lowest,
)
from squaredot.exact_ed.coulomb import MAGIC, cache_path, orbital_quantum_numbers
from squaredot.exact_ed.quadrature import composite_gauss, fold_table
from squaredot.exact_ed.solver import (
    conserved_parities,
    local_maxima,
    one_body_matrix,
    pair_basis,
    quadrant_means,
)


@pytest.fixture(scope="module")
def t4():
    return CoulombTensor.compute(4, 16)


@pytest.fixture(scope="module")
def t6():
    return CoulombTensor.compute(6, 16)


# -- quadrature ---------------------------------------------------------------------


def test_composite_gauss_integrates_polynomials():
    x, w = composite_gauss(8, 3)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.sum(w * x**15) == pytest.approx(1 / 16, abs=1e-15)


def test_fold_table_matches_direct_integral():
    u = np.array([0.0, 0.3, 0.8])
    g = fold_table(4, u).reshape(4, 4, -1)
    xg, wg = np.polynomial.legendre.leggauss(40)
    for p1 in range(4):
        for p2 in range(4):
            for k, uu in enumerate(u):
                x = 0.5 * (1 - uu) * (xg + 1)
                w = 0.5 * (1 - uu) * wg
                a, b = p1 * math.pi, p2 * math.pi
                ref = np.sum(w * (np.cos(a * (x + uu)) * np.cos(b * x) + np.cos(a * x) * np.cos(b * (x + uu))))
                assert g[p1, p2, k] == pytest.approx(ref, abs=1e-13)


# -- Coulomb tensor -------------------------------------------------------------------


def test_orbital_index():
    assert orbital_index(1, 1, 4) == 0
    assert orbital_index(2, 3, 4) == 6
    with pytest.raises(IndexError):
        orbital_index(0, 1, 4)


def test_mean_inverse_distance(t4):
    assert t4.table[0, 0, 0, 0] == pytest.approx(MEAN_INVERSE_DISTANCE_UNIT_SQUARE, abs=1e-13)


def test_ground_element_two_methods(t4):
    quad = t4.element(0, 0, 0, 0)
    assert quad == pytest.approx(coulomb_element_polar((1, 1), (1, 1), (1, 1), (1, 1)), abs=1e-12)
    mean, err = qmc_ground_orbital_element()
    assert abs(quad - mean) < 5 * err + 1e-12


def test_elements_against_polar_oracle(t4):
    rng = np.random.default_rng(0)
    nx, ny = orbital_quantum_numbers(4)
    for _ in range(25):
        idx = rng.integers(0, 16, size=4)
        q = [(int(nx[k]), int(ny[k])) for k in idx]
        assert t4.element(*idx) == pytest.approx(coulomb_element_polar(*q), abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 15), min_size=4, max_size=4))
def test_tensor_exchange_symmetries(idx):
    t = _T4
    i, j, k, l = idx
    v = t.element(i, j, k, l)
    assert t.element(k, l, i, j) == pytest.approx(v, abs=1e-12)
    assert t.element(j, i, l, k) == pytest.approx(v, abs=1e-12)
    assert t.element(k, j, i, l) == pytest.approx(v, abs=1e-12)


_T4 = CoulombTensor.compute(4, 16, check=False)


def test_diagonal_elements_positive(t4):
    n = t4.n_orbitals
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    assert np.all(t4.elements(i, j, i, j) > 0)


def test_parity_selection_rule(t4):
    # (1,1)(1,1) -> (2,1)(1,1): odd total x parity
    assert t4.element(orbital_index(1, 1, 4), 0, orbital_index(2, 1, 4), 0) == 0.0
    assert t4.element(orbital_index(1, 2, 4), orbital_index(1, 1, 4), 0, orbital_index(1, 3, 4)) == 0.0


def test_convergence_check_reported(t4):
    assert t4.converged
    assert t4.max_order_change < 1e-10
    coarse = CoulombTensor.compute(6, 8)
    assert coarse.n_flagged > 0 and not coarse.converged


def test_coulomb_scales_as_inverse_length(t4):
    a = build_h(EDConfig(2.0, 4, coulomb_scale=1.0), t4)
    b = build_h(EDConfig(8.0, 4, coulomb_scale=1.0), t4)
    k2 = build_h(EDConfig(2.0, 4, coulomb_scale=0.0), t4)
    k8 = build_h(EDConfig(8.0, 4, coulomb_scale=0.0), t4)
    for ba, bb, ka, kb in zip(a.blocks, b.blocks, k2.blocks, k8.blocks):
        np.testing.assert_allclose((bb.matrix - kb.matrix) * 8.0, (ba.matrix - ka.matrix) * 2.0, atol=1e-12)


def test_cache_round_trip(tmp_path, t4):
    path = tmp_path / "t.bin"
    t4.save(path)
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12 : 12 + hlen])
    assert {"version", "cutoff", "order", "hash"} <= set(header)
    loaded = CoulombTensor.load(path)
    assert loaded.from_cache
    np.testing.assert_array_equal(loaded.table, t4.table)


def test_cache_rejects_bad_files(tmp_path, t4):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nonsense")
    with pytest.raises(ValueError):
        CoulombTensor.load(bad)
    good = tmp_path / "good.bin"
    t4.save(good)
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ValueError):
        CoulombTensor.load(good)


def test_load_or_compute_hits_cache(tmp_path):
    first = load_or_compute(3, 12, tmp_path)
    assert not first.from_cache
    assert cache_path(tmp_path, 3, 12).exists()
    second = load_or_compute(3, 12, tmp_path)
    assert second.from_cache
    np.testing.assert_array_equal(first.table, second.table)
    cache_path(tmp_path, 3, 12).write_bytes(b"garbage")
    third = load_or_compute(3, 12, tmp_path)
    assert not third.from_cache


# -- Hamiltonian ------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        EDConfig(0.0)
    with pytest.raises(ValueError):
        EDConfig(5.0, sp_cutoff=1)
    with pytest.raises(ValueError):
        EDConfig(5.0, quadrature_order=4)
    with pytest.raises(ValueError):
        EDConfig(5.0, channel="quartet")


def test_pair_basis_sizes():
    assert pair_dimension(4, SINGLET) == 16 * 17 // 2
    assert pair_dimension(4, TRIPLET) == 16 * 15 // 2
    pairs = pair_basis(4, TRIPLET)
    assert np.all(pairs[:, 0] != pairs[:, 1])


def test_size_cap(t4):
    with pytest.raises(SizeError):
        build_h(EDConfig(5.0, 4), t4, max_dim=100)


def test_noninteracting_limit(t4):
    L = 4.0
    for channel in (SINGLET, TRIPLET):
        cfg = EDConfig(L, 4, channel, coulomb_scale=0.0)
        h = build_h(cfg, t4)
        res = solve_lowest(h, 12)
        np.testing.assert_allclose(res.energies, noninteracting_levels(cfg, channel, 12), atol=1e-12)
    ground = solve_lowest(build_h(EDConfig(L, 4, coulomb_scale=0.0), t4), 1).energies[0]
    assert ground == pytest.approx(2 * math.pi**2 / L**2, rel=1e-14)


def test_noninteracting_orbital_degeneracy(t4):
    # (1,1)+(1,2) and (1,1)+(2,1) give a degenerate pair in both channels
    for channel in (SINGLET, TRIPLET):
        res = solve_lowest(build_h(EDConfig(3.0, 4, channel, coulomb_scale=0.0), t4), 3)
        k = 1 if channel == SINGLET else 0
        assert res.energies[k] == pytest.approx(res.energies[k + 1], abs=1e-12)


def test_against_brute_force_tiny_basis():
    for cutoff, L in ((2, 3.0), (3, 6.0)):
        tensor = CoulombTensor.compute(cutoff, 16)
        s_ref, t_ref = brute_force_two_electron(cutoff, L)
        for channel, ref in ((SINGLET, s_ref), (TRIPLET, t_ref)):
            h = build_h(EDConfig(L, cutoff, channel), tensor)
            np.testing.assert_allclose(solve_lowest(h, h.dim).energies, ref, atol=1e-10)


def test_blocks_match_dense(t6):
    cfg = EDConfig(5.0, 6, corner_bias=(0.1, 0.0, 0.1, 0.0))
    h = build_h(cfg, t6)
    H, _ = h.to_dense()
    np.testing.assert_allclose(solve_lowest(h, 8).energies, np.linalg.eigvalsh(H)[:8], atol=1e-10)


def test_conserved_parities():
    assert conserved_parities((0, 0, 0, 0)) == ("x", "y")
    assert conserved_parities((1, 0, 1, 0)) == ("inversion",)
    assert conserved_parities((1, 1, 0, 0)) == ("x",)
    assert conserved_parities((1, 0, 0, 1)) == ("y",)
    assert conserved_parities((1, 0, 0, 0)) == ()


def test_corner_bias_one_body_terms():
    cutoff = 3
    b = 0.7
    cfg = EDConfig(4.0, cutoff, corner_bias=(b, 0.0, 0.0, 0.0))
    h1 = one_body_matrix(cfg) - one_body_matrix(EDConfig(4.0, cutoff))
    nx, ny = orbital_quantum_numbers(cutoff)
    x, w = np.polynomial.legendre.leggauss(40)
    lo = 0.25 * (x + 1)  # [0, 1/2]
    hi = 0.5 + 0.25 * (x + 1)  # [1/2, 1]
    w = 0.25 * w
    for i in range(cutoff * cutoff):
        for j in range(cutoff * cutoff):
            ox = np.sum(w * 2 * np.sin(nx[i] * np.pi * lo) * np.sin(nx[j] * np.pi * lo))
            oy = np.sum(w * 2 * np.sin(ny[i] * np.pi * hi) * np.sin(ny[j] * np.pi * hi))
            # top-left quadrant: x in [0, 1/2], y in [1/2, 1]
            assert h1[i, j] == pytest.approx(-b * ox * oy, abs=1e-13)


def test_bias_attracts_charge(t6):
    cfg = EDConfig(5.0, 6, corner_bias=(0.3, 0.0, 0.3, 0.0))
    res = solve_lowest(build_h(cfg, t6), 1)
    q = quadrant_means(charge_density(res.states[0], 32))
    assert q[0] > q[1] and q[2] > q[3]


# -- spectra -------------------------------------------------------------------------------


def test_residuals_small(t6):
    res = solve_lowest(build_h(EDConfig(5.0, 6), t6), 6)
    assert res.residual < 1e-8
    assert np.all(np.diff(res.energies) >= 0)


@pytest.mark.parametrize("L", [1.0, 3.0, 5.0, 10.0])
def test_singlet_ground_at_zero_field(t6, L):
    res = solve_ed(EDConfig(L, 6), 2, tensor=t6)
    assert res.channels[0] == SINGLET
    assert res.channel_energies(SINGLET)[0] < res.channel_energies(TRIPLET)[0]


def test_variational_in_cutoff():
    L = 5.0
    previous = None
    for cutoff in (4, 6, 8):
        tensor = CoulombTensor.compute(cutoff, 16, check=False)
        res = solve_ed(EDConfig(L, cutoff), 4, tensor=tensor)
        current = {c: res.channel_energies(c) for c in (SINGLET, TRIPLET)}
        if previous is not None:
            for c in current:
                assert np.all(current[c] <= previous[c] + 1e-12)
        previous = current


def test_isolation_grows_with_size(t6):
    ratios = []
    for L in (3.0, 5.0, 10.0):
        E = solve_ed(EDConfig(L, 6), 5, tensor=t6).energies
        ratios.append((E[4] - E[3]) / (E[3] - E[0]))
    assert ratios[0] < ratios[1] < ratios[2]


# -- densities ---------------------------------------------------------------------------


def test_noninteracting_density_central(t4):
    res = solve_lowest(build_h(EDConfig(5.0, 4, coulomb_scale=0.0), t4), 1)
    rho = charge_density(res.states[0], 32)
    assert rho.integral == pytest.approx(2.0, abs=1e-6)
    assert np.all(rho.values >= 0)
    assert center_ratio(rho) == pytest.approx(1.0, abs=0.01)
    assert local_maxima(rho) == [(15, 15), (15, 16), (16, 15), (16, 16)]


def test_interacting_density_corner_peaks():
    tensor = CoulombTensor.compute(8, 16, check=False)
    res = solve_ed(EDConfig(10.0, 8), 4, tensor=tensor)
    rho = charge_density(res.states[0], 32)
    assert rho.integral == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(rho.values, np.rot90(rho.values), atol=1e-10)
    maxima = local_maxima(rho)
    assert len(maxima) == 4
    quadrants = {(ix >= 16, iy >= 16) for ix, iy in maxima}
    assert len(quadrants) == 4
    plus, minus = diagonal_basis_densities(res, 32)
    # each diagonal-basis state loads one diagonal: TL/BR or TR/BL
    for r in (plus, minus):
        q = quadrant_means(r)
        assert max(q[0] + q[2], q[1] + q[3]) > 2 * min(q[0] + q[2], q[1] + q[3])
    assert np.sign(quadrant_means(plus)[0] - quadrant_means(plus)[1]) != np.sign(
        quadrant_means(minus)[0] - quadrant_means(minus)[1]
    )


def test_density_rejects_unnormalized():
    with pytest.raises(ValueError):
        charge_density(np.ones((4, 4)), 8, cutoff=2)
    with pytest.raises(ValueError):
        charge_density(np.eye(4) / 2.0, 8)


# -- calibration ---------------------------------------------------------------------------


def test_extract_delta_round_trip():
    delta = 0.37
    p = EffectiveParams(eps0=(0.1, 0.1, 0.1, 0.1), delta=delta)
    s = eigenenergies(build_channel_h(p, S_CHANNEL))
    t = eigenenergies(build_channel_h(p, triplet(0)))
    spec = SpectrumResult(np.array([*s, *t]), [SINGLET, SINGLET, TRIPLET, TRIPLET])
    est = extract_delta(spec)
    assert est.delta == pytest.approx(delta, rel=1e-12)
    assert est.isolated is None
    m = MaterialParams()
    est = extract_delta(spec, m)
    assert est.delta_ueV == pytest.approx(delta * effective_hartree(0.067, 12.9), rel=1e-12)


def test_extract_delta_flags_unisolated():
    spec = SpectrumResult(np.array([0.0, 1.0, 1.5, 0.5]), [SINGLET, SINGLET, SINGLET, TRIPLET])
    est = extract_delta(spec)
    assert est.midway_ratio == pytest.approx(0.0)
    assert est.isolated is False and est.note
    with pytest.raises(ValueError):
        extract_delta(SpectrumResult(np.array([0.0]), [SINGLET]))


def test_midway_ratio_at_moderate_size(t6):
    est = extract_delta(solve_ed(EDConfig(10.0, 6), 4, tensor=t6))
    assert abs(est.midway_ratio) < 0.15
