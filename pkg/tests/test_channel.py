import numpy as np
import pytest

from lastseq.channel import (ChannelRealization, sample_channel, realify,
                             transmit, LONG_TERM, SHORT_TERM)


def test_long_term_replicates_one_draw(rng):
    chan = sample_channel(2, 3, 4, LONG_TERM, 10.0, rng)
    for ell in range(1, 4):
        assert np.array_equal(chan.matrices[ell], chan.matrices[0])


def test_short_term_draws_independent(rng):
    chan = sample_channel(2, 2, 3, SHORT_TERM, 10.0, rng)
    assert not np.array_equal(chan.matrices[0], chan.matrices[1])


def test_entry_second_moment(rng):
    # sample mean of |h|^2 over 10^5 draws -> 1.0 +- 0.02
    chan = sample_channel(10, 100, 100, SHORT_TERM, 1.5, rng)
    second_moment = np.mean(np.abs(chan.matrices) ** 2)
    assert second_moment == pytest.approx(1.0, abs=0.02)


def test_scalar_eigenvalue(rng):
    chan = sample_channel(1, 1, 1, LONG_TERM, 4.0, rng)
    h = chan.matrices[0, 0, 0]
    assert chan.eigenvalues[0, 0] == pytest.approx(abs(h) ** 2, rel=1e-12)


def test_eigenvalues_sorted_nonnegative(rng):
    chan = sample_channel(3, 3, 2, SHORT_TERM, 10.0, rng)
    for ell in range(2):
        eigs = chan.eigenvalues[ell]
        assert np.all(eigs >= 0)
        assert np.all(np.diff(eigs) >= 0)


def test_alpha_definition(rng):
    rho = 50.0
    chan = sample_channel(2, 2, 1, LONG_TERM, rho, rng)
    expect = -np.log(chan.eigenvalues) / np.log(rho)
    assert np.allclose(chan.alpha, expect)


def test_realify_smallest_instance(rng):
    chan = sample_channel(1, 1, 1, LONG_TERM, 9.0, rng)
    h = chan.matrices[0, 0, 0]
    stack = realify(chan, 1, 1)
    expect = 3.0 * np.array([[h.real, -h.imag], [h.imag, h.real]])
    assert np.allclose(stack.matrix, expect)
    assert stack.noise_var == 0.5


def test_realify_real_channel_has_zero_imag_blocks():
    chan = sample_channel(2, 2, 1, LONG_TERM, 4.0, np.random.default_rng(0))
    chan.matrices.imag[:] = 0.0
    chan = ChannelRealization.from_json(chan.to_json())
    stack = realify(chan, 1, 1)
    assert np.allclose(stack.matrix[:2, 2:], 0.0)
    assert np.allclose(stack.matrix[2:, :2], 0.0)


def test_realify_rows_are_prefix(rng):
    chan = sample_channel(2, 2, 3, SHORT_TERM, 7.0, rng)
    full = realify(chan, 2, 3).matrix
    for ell in (1, 2):
        part = realify(chan, 2, ell).matrix
        assert np.array_equal(part, full[:part.shape[0], :])


def test_realify_block_determinant(rng):
    # M=N=1, T=1, L=2 long-term: the direct 4x4 determinant is (rho |h|^2)^2
    rho = 6.25
    chan = sample_channel(1, 1, 2, LONG_TERM, rho, rng)
    h2 = abs(chan.matrices[0, 0, 0]) ** 2
    full = realify(chan, 1, 2).matrix
    assert np.linalg.det(full) == pytest.approx((rho * h2) ** 2, rel=1e-9)


def test_realify_ell_out_of_range(rng):
    chan = sample_channel(1, 1, 2, LONG_TERM, 1.0, rng)
    with pytest.raises(ValueError):
        realify(chan, 1, 3)


def test_transmit_noiseless_and_dimension_check(rng):
    chan = sample_channel(2, 2, 2, LONG_TERM, 5.0, rng)
    x = rng.standard_normal(2 * 2 * 3 * 2)
    y = transmit(x, chan, 3, 2, rng, noiseless=True)
    assert np.allclose(y, realify(chan, 3, 2).matrix @ x)
    with pytest.raises(ValueError):
        transmit(x[:-1], chan, 3, 2, rng)


def test_transmit_noise_variance(rng):
    chan = sample_channel(1, 1, 1, LONG_TERM, 1.0, rng)
    x = np.zeros(2)
    samples = np.concatenate(
        [transmit(x, chan, 1, 1, rng) for _ in range(50_000)])
    assert np.var(samples) == pytest.approx(0.5, rel=0.02)


def test_transmit_prefix_consistency():
    # same generator state: the ell-round output is a prefix of the L-round one
    chan = sample_channel(2, 2, 2, LONG_TERM, 5.0, np.random.default_rng(3))
    x = np.random.default_rng(4).standard_normal(24)
    y1 = transmit(x, chan, 3, 1, np.random.default_rng(99))
    y2 = transmit(x, chan, 3, 2, np.random.default_rng(99))
    assert np.array_equal(y1, y2[:12])


def test_noise_whiteness(rng):
    chan = sample_channel(2, 2, 1, LONG_TERM, 1.0, rng)
    n = 10_000
    w = np.stack([transmit(np.zeros(8), chan, 2, 1, rng) for _ in range(n)])
    cov = np.cov(w.T)
    off = cov - np.diag(np.diag(cov))
    # off-diagonal entries are averages of n products, se ~ 0.5/sqrt(n)
    assert np.max(np.abs(off)) < 5 * 0.5 / np.sqrt(n)


def test_channel_json_roundtrip(rng):
    chan = sample_channel(2, 3, 2, SHORT_TERM, 12.5, rng)
    restored = ChannelRealization.from_json(chan.to_json())
    assert restored.model == SHORT_TERM
    assert np.allclose(restored.matrices, chan.matrices)
    assert np.allclose(restored.eigenvalues, chan.eigenvalues)
    assert restored.rho == chan.rho


def test_sample_channel_validation(rng):
    with pytest.raises(ValueError):
        sample_channel(1, 1, 1, "medium-term", 1.0, rng)
    with pytest.raises(ValueError):
        sample_channel(1, 1, 1, LONG_TERM, 0.0, rng)
