import json
import math

import numpy as np
import pytest

from lastseq.lattices import (LatticeGenerator, NestedCode, CosetQuantizer,
                              build_loeliger_code, construction_a_basis,
                              mod_lambda, encode, sample_dither,
                              estimate_radii, effective_radius, lll_reduce,
                              is_prime)
from oracles import brute_force_closest, brute_force_shortest, qr_positive, \
    random_full_rank


def test_construction_a_unit_volume():
    # det(G_p) = kappa^m p^(m-k) = 1 by the kappa choice
    for m, p, k in [(4, 5, 1), (8, 7, 3), (24, 17, 2)]:
        rng = np.random.default_rng(0)
        kappa, g = construction_a_basis(p, k, m, rng.integers(0, p, (m - k, k)))
        assert np.linalg.det(g) == pytest.approx(1.0, rel=1e-9)


def test_construction_a_zero_code_matrix_full_rank():
    kappa, g = construction_a_basis(5, 1, 4, np.zeros((3, 1)))
    assert abs(np.linalg.det(g)) == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.matrix_rank(g) == 4


def test_volume_identity_diagonal_product_vs_lu():
    code = build_loeliger_code(1, 1, 2, 1, p=5, k=1, seed=3,
                               target_rate_r1=2.0, calib_samples=2000)
    for lat in (code.coding, code.shaping):
        assert lat.is_lower_triangular(tol=0.0)
        diag_prod = abs(float(np.prod(np.diag(lat.basis))))
        sign, logdet = np.linalg.slogdet(lat.basis)
        assert diag_prod == pytest.approx(math.exp(logdet), rel=1e-12)
        assert lat.volume == pytest.approx(diag_prod, rel=1e-12)


def test_rate_targeting_nesting_index(paper_code):
    # |coding / shaping cosets| = V_s / V_c = 2^(R1 T)
    ratio = paper_code.shaping.volume / paper_code.coding.volume
    assert ratio == pytest.approx(2.0 ** (8.0 * 3), rel=1e-9)
    assert paper_code.message_count == 2 ** 24


def test_nesting_index_spec_instance():
    # the (m=24, p=17, k=2, seed=42) descriptor reaches the same coset count
    code = build_loeliger_code(2, 2, 3, 2, p=17, k=2, seed=42,
                               target_rate_r1=8.0, calib_samples=2000)
    assert code.shaping.volume / code.coding.volume == \
        pytest.approx(2.0 ** 24, rel=1e-9)


def test_nesting_index_exhaustive_small():
    # 4-dim slice: enumerate every message and confirm distinct cosets
    code = build_loeliger_code(1, 1, 1, 2, p=5, k=1, seed=9,
                               target_rate_r1=4.0, calib_samples=2000)
    assert code.dimension == 4 and code.message_count == 16
    seen = set()
    for idx in range(16):
        digits = code.message_digits(idx)
        assert code.digits_to_message(digits) == idx
        seen.add(tuple(digits % code.nesting_ratio))
    assert len(seen) == 16
    # determinant-ratio extrapolation agrees
    assert code.shaping.volume / code.coding.volume == pytest.approx(16.0)


def test_sublattice_residuals(paper_code):
    inv = np.linalg.inv(paper_code.coding.basis)
    coeffs = inv @ paper_code.shaping.basis
    assert np.max(np.abs(coeffs - np.round(coeffs))) < 1e-9


def test_build_errors():
    with pytest.raises(ValueError, match="not prime"):
        build_loeliger_code(1, 1, 1, 1, p=9, k=1, seed=0, target_rate_r1=2.0)
    with pytest.raises(ValueError, match="1 <= k < m"):
        build_loeliger_code(1, 1, 1, 1, p=5, k=2, seed=0, target_rate_r1=2.0)
    with pytest.raises(ValueError, match="not achievable"):
        build_loeliger_code(1, 1, 1, 1, p=5, k=1, seed=0, target_rate_r1=1.3)


def test_is_prime():
    assert [p for p in range(2, 30) if is_prime(p)] == \
        [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_mod_lambda_lattice_point_maps_to_zero(small_code):
    lat = small_code.shaping
    z = np.array([2, -1, 0, 3, 1, -2, 0, 1])
    assert np.allclose(mod_lambda(lat.basis @ z, lat), 0.0, atol=1e-9)


def test_mod_lambda_interior_point_unchanged(small_code):
    lat = small_code.shaping
    x = 1e-3 * np.ones(lat.dimension)
    assert np.allclose(mod_lambda(x, lat), x, atol=1e-12)


def test_mod_lambda_idempotent(rng):
    basis = random_full_rank(rng, 4)
    lat = LatticeGenerator.from_basis(basis)
    for _ in range(50):
        x = 4.0 * rng.standard_normal(4)
        once = mod_lambda(x, lat)
        twice = mod_lambda(once, lat)
        assert np.array_equal(once, twice)


def test_mod_lambda_against_brute_force(rng):
    for _ in range(200):
        basis = random_full_rank(rng, 4)
        lat = LatticeGenerator.from_basis(basis)
        x = 4.0 * rng.standard_normal(4)
        q, r = qr_positive(basis)
        z_ref = brute_force_closest(r, q.T @ x)
        assert np.allclose(mod_lambda(x, lat), x - basis @ z_ref, atol=1e-8)


def test_coset_quantizer_matches_generic(small_code):
    lat = small_code.shaping
    assert lat.fast_quantizer is not None
    generic = LatticeGenerator.from_basis(lat.basis)
    rng = np.random.default_rng(5)
    xs = 3.0 * rng.standard_normal((40, lat.dimension))
    batch = lat.nearest_batch(xs)
    for i, x in enumerate(xs):
        a = lat.nearest_point(x)
        b = generic.nearest_point(x)
        assert np.allclose(a, b, atol=1e-8)
        assert np.allclose(batch[i], a, atol=1e-10)


def test_encode_roundtrip_zero_cases(small_code):
    code = small_code
    x, c = encode(0, code, np.zeros(code.dimension))
    assert np.allclose(x, 0.0, atol=1e-9) and np.allclose(c, 0.0, atol=1e-9)
    # u = c makes the transmit vector fold to zero
    rng = np.random.default_rng(2)
    msg = int(rng.integers(code.message_count))
    _, c = encode(msg, code, np.zeros(code.dimension))
    x, _ = encode(msg, code, c)
    assert np.allclose(x, 0.0, atol=1e-9)


def test_encode_message_index_range(small_code):
    with pytest.raises(ValueError):
        encode(small_code.message_count, small_code,
               np.zeros(small_code.dimension))


def test_codewords_lie_in_coding_lattice(small_code):
    code = small_code
    inv = np.linalg.inv(code.coding.basis)
    rng = np.random.default_rng(3)
    for _ in range(20):
        msg = int(rng.integers(code.message_count))
        _, c = encode(msg, code, sample_dither(code, rng))
        coeff = inv @ c
        assert np.max(np.abs(coeff - np.round(coeff))) < 1e-9


def test_dither_and_transmit_power(small_code):
    # E|u|^2 = E|x|^2 = MTL within 3 standard errors (Monte Carlo)
    code = small_code
    mtl = code.dimension / 2
    rng = np.random.default_rng(4)
    msg = int(rng.integers(code.message_count))
    n = 4000
    raw = (code.shaping.basis @ rng.random((code.dimension, n))).T
    dithers = raw - code.shaping.nearest_batch(raw)
    u_sq = np.einsum("ij,ij->i", dithers, dithers)
    x_sq = np.empty(n)
    for i in range(n):
        x, _ = encode(msg, code, dithers[i])
        x_sq[i] = x @ x
    for sample in (u_sq, x_sq):
        se = np.std(sample) / np.sqrt(n)
        assert abs(np.mean(sample) - mtl) < 3 * se
    assert code.sigma_sq_estimate == pytest.approx(0.5, rel=0.02)


def test_power_slack_bound(small_code):
    code = small_code
    rng = np.random.default_rng(6)
    bound = (code.dimension / 2) * (1.0 + code.power_slack)
    for _ in range(200):
        msg = int(rng.integers(code.message_count))
        x, _ = encode(msg, code, sample_dither(code, rng))
        assert x @ x <= bound * 1.15


def test_estimate_radii_square_lattice():
    lat = LatticeGenerator.from_basis(np.eye(2))
    rad = estimate_radii(lat, rng=np.random.default_rng(0),
                         cover_samples=20000)
    assert rad.method == "exact-enumeration"
    assert rad.r_pack == pytest.approx(0.5, abs=1e-12)
    assert rad.r_eff == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)
    assert rad.r_cov == pytest.approx(math.sqrt(2) / 2, rel=0.03)
    assert rad.r_pack <= rad.r_eff <= rad.r_cov


def test_estimate_radii_scaling():
    rng = np.random.default_rng(8)
    basis = random_full_rank(rng, 3)
    a = 2.5
    r1 = estimate_radii(LatticeGenerator.from_basis(basis),
                        rng=np.random.default_rng(1), cover_samples=2000)
    r2 = estimate_radii(LatticeGenerator.from_basis(a * basis),
                        rng=np.random.default_rng(1), cover_samples=2000)
    assert r2.r_pack == pytest.approx(a * r1.r_pack, rel=1e-9)
    assert r2.r_eff == pytest.approx(a * r1.r_eff, rel=1e-9)
    assert r2.r_cov == pytest.approx(a * r1.r_cov, rel=1e-9)


def test_estimate_radii_packing_against_brute_force(rng):
    for _ in range(25):
        basis = random_full_rank(rng, 4)
        rad = estimate_radii(LatticeGenerator.from_basis(basis),
                             rng=np.random.default_rng(2), cover_samples=200)
        assert rad.method == "exact-enumeration"
        shortest = brute_force_shortest(basis)
        assert rad.r_pack == pytest.approx(shortest / 2, rel=1e-9)


def test_effective_radius_formula():
    # unit-volume 2-d cell: r_eff = 1/sqrt(pi)
    assert effective_radius(1.0, 2) == pytest.approx(1 / math.sqrt(math.pi))


def test_lll_preserves_lattice(rng):
    basis = random_full_rank(rng, 6)
    red = lll_reduce(basis)
    coeffs = np.linalg.solve(basis, red)
    assert np.max(np.abs(coeffs - np.round(coeffs))) < 1e-8
    assert abs(np.linalg.det(red)) == pytest.approx(
        abs(np.linalg.det(basis)), rel=1e-9)
    assert np.max(np.linalg.norm(red, axis=0)) <= \
        np.max(np.linalg.norm(basis, axis=0)) + 1e-9


def test_json_roundtrip(small_code):
    doc = small_code.to_json()
    parsed = json.loads(doc)
    for key in ("m", "p", "k", "seed", "kappa", "zeta_s", "R1", "T"):
        assert key in parsed
    restored = NestedCode.from_json(doc)
    assert np.array_equal(restored.coding.basis, small_code.coding.basis)
    assert np.array_equal(restored.shaping.basis, small_code.shaping.basis)
    assert restored.message_count == small_code.message_count
    rng = np.random.default_rng(7)
    x = 2.0 * rng.standard_normal(small_code.dimension)
    assert np.allclose(mod_lambda(x, restored.shaping),
                       mod_lambda(x, small_code.shaping), atol=1e-9)
