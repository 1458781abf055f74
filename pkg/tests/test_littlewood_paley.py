import math

import numpy as np
import pytest
import scipy.fft as sfft
from hypothesis import given, settings, strategies as st

from besovch.grid import Field, derivative, make_grid, product
from besovch.littlewood_paley import (
    BlockSupConfig, _polyphase_max, band_sup, block, block_l1_norms, block_l2_norms,
    block_sup_norms, build_filter_bank, chi, commutator_rj, decompose, low_pass,
    paraproduct, phi, remainder, smooth_step,
)

from conftest import band_limited


def dense_sup(seg, lo, hi, n):
    buf = np.zeros(n // 2 + 1, dtype=np.complex128)
    buf[lo:hi] = seg
    return float(np.max(np.abs(sfft.irfft(buf, n))))


# -- the multipliers -------------------------------------------------------

def test_chi_profile():
    xi = np.linspace(0, 3, 3001)
    c = chi(xi)
    assert np.all(c[xi <= 1.0] == 1.0)
    assert np.all(c[xi >= 4.0 / 3.0] == 0.0)
    assert np.all(np.diff(c) <= 0)
    assert np.array_equal(chi(-xi), c)


def test_smooth_step_symmetry():
    t = np.linspace(0, 1, 101)
    assert np.allclose(smooth_step(t) + smooth_step(1 - t), 1.0, atol=1e-15)


def test_phi_support_is_annulus():
    xi = np.linspace(0, 4, 40001)
    p = phi(xi)
    assert np.all(p[xi <= 1.0] == 0.0)
    assert np.all(p[xi >= 8.0 / 3.0] == 0.0)
    assert np.all(p >= 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=4000.0))
def test_partition_of_unity(xi):
    total = chi(xi) + sum(phi(xi * 2.0 ** -j) for j in range(0, 12))
    assert total == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("L,n", [(math.pi, 64), (math.pi, 1024), (10.0, 512), (64 * math.pi, 4096)])
def test_bank_partition_on_grid(L, n):
    g = make_grid(L, n)
    bank = build_filter_bank(g)
    assert 2.0 ** bank.J_max * 8.0 / 3.0 <= g.nyquist < 2.0 ** (bank.J_max + 1) * 8.0 / 3.0
    total = sum(bank.multiplier(j) for j in bank.indices)
    inside = g.xi <= bank.covered
    assert np.allclose(total[inside], 1.0, atol=1e-14)
    assert np.all(total <= 1.0 + 1e-14)


def test_bank_rejects_tiny_grid():
    with pytest.raises(ValueError):
        build_filter_bank(make_grid(100.0, 16))


# -- blocks, reconstruction, Bony --------------------------------------------

def test_reconstruction(corpus):
    for f in corpus:
        r = decompose(f).reconstruct()
        err = np.max(np.abs(r.samples - f.samples)) / np.max(np.abs(f.samples))
        assert err <= 1e-10


def test_low_pass_is_sum_of_blocks(rng):
    g = make_grid(math.pi, 512)
    f = band_limited(g, rng)
    bank = build_filter_bank(g)
    for j in range(0, bank.J_max + 1):
        acc = sum(block(f, k, bank).samples for k in range(-1, j))
        assert np.allclose(low_pass(f, j, bank).samples, acc, atol=1e-12)


def test_single_mode_lands_in_its_block():
    g = make_grid(math.pi, 1024)
    f = Field.from_samples(g, np.cos(24.0 * g.x))  # 2^4 * 4/3 <= 24 <= 2^5
    bank = build_filter_bank(g)
    sups = block_sup_norms(f, bank)
    assert sups[4] == pytest.approx(1.0, abs=1e-13)
    assert all(v < 1e-13 for j, v in sups.items() if j != 4)


def test_bony_identity(corpus):
    for f in corpus:
        g = derivative(f) * (1.0 / max(1.0, np.max(np.abs(derivative(f).samples))))
        lhs = paraproduct(f, g) + paraproduct(g, f) + remainder(f, g)
        rhs = product(f, g)
        err = np.max(np.abs((lhs - rhs).samples)) / max(np.max(np.abs(rhs.samples)), 1e-300)
        assert err <= 1e-10


def test_bernstein_upper(corpus):
    for f in corpus:
        bank = build_filter_bank(f.grid)
        sups = block_sup_norms(f, bank)
        dsups = block_sup_norms(derivative(f), bank)
        for j in range(0, bank.J_max + 1):
            assert dsups[j] <= (8.0 / 3.0) * 2.0 ** j * sups[j] * (1 + 1e-9) + 1e-300


def test_commutator_vanishes_for_constant_coefficient(rng):
    g = make_grid(math.pi, 256)
    c = Field.from_samples(g, np.full(g.n, 2.5))
    h = band_limited(g, rng)
    for j in range(-1, 4):
        assert np.max(np.abs(commutator_rj(c, h, j).samples)) < 1e-11


# -- block norms --------------------------------------------------------------

def test_block_l2_parseval(corpus):
    for f in corpus[:8]:
        bank = build_filter_bank(f.grid)
        l2 = block_l2_norms(f, bank)
        for j in bank.indices:
            v = block(f, j, bank).samples
            assert l2[j] == pytest.approx(math.sqrt(f.grid.dx * np.sum(v * v)), rel=1e-10, abs=1e-14)


def test_block_l1_direct(corpus):
    f = corpus[0]
    bank = build_filter_bank(f.grid)
    l1 = block_l1_norms(f, bank)
    for j in bank.indices:
        assert l1[j] == pytest.approx(f.grid.dx * np.sum(np.abs(block(f, j, bank).samples)), rel=1e-12, abs=1e-300)


def test_block_sup_matches_dense(corpus):
    for f in corpus:
        bank = build_filter_bank(f.grid)
        sups = block_sup_norms(f, bank)
        for j in bank.indices:
            assert sups[j] == pytest.approx(np.max(np.abs(block(f, j, bank).samples)), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.integers(12, 18), st.integers(0, 2000), st.integers(1, 300), st.integers(0, 2 ** 31))
def test_band_sup_exact(logn, lo, width, seed):
    n = 2 ** logn
    lo = min(lo, n // 2 - width)
    hi = lo + width
    r = np.random.default_rng(seed)
    seg = r.normal(size=width) + 1j * r.normal(size=width)
    if lo == 0:
        seg[0] = seg[0].real
    cfg = BlockSupConfig()
    assert band_sup(seg, lo, hi, n, cfg) == pytest.approx(dense_sup(seg, lo, hi, n), rel=1e-12)


def test_band_sup_at_nyquist_edge():
    n = 1 << 12
    r = np.random.default_rng(3)
    lo, hi = n // 2 - 40, n // 2 + 1
    seg = r.normal(size=hi - lo) + 1j * r.normal(size=hi - lo)
    seg[-1] = seg[-1].real
    assert band_sup(seg, lo, hi, n) == pytest.approx(dense_sup(seg, lo, hi, n), rel=1e-12)


@pytest.mark.parametrize("lo,width", [(5000, 700), (123457, 3000)])
def test_polyphase_matches_full(lo, width):
    n = 1 << 20
    r = np.random.default_rng(lo)
    seg = (r.normal(size=width) + 1j * r.normal(size=width)) * np.hanning(width)
    assert _polyphase_max(seg, lo, lo + width, n) == pytest.approx(dense_sup(seg, lo, lo + width, n), rel=1e-13)


def test_band_sup_zero():
    assert band_sup(np.zeros(10, dtype=complex), 3, 13, 256) == 0.0


def test_bank_for_other_grid_rejected():
    f = Field.zeros(make_grid(1.0, 64))
    with pytest.raises(ValueError):
        block_sup_norms(f, build_filter_bank(make_grid(2.0, 64)))


# -- worked cases ---------------------------------------------------------------

def test_phi_anchor_values():
    assert phi(0.5) == 0.0 and phi(2.0) == 1.0


@pytest.mark.parametrize("L,n", [(math.pi, 1024), (64 * math.pi, 1 << 16)])
def test_block_support_exact(L, n):
    g = make_grid(L, n)
    bank = build_filter_bank(g)
    for j in range(0, bank.J_max + 1):
        m = bank.multiplier(j)
        outside = (g.xi < 0.75 * 2 ** j) | (g.xi > 8.0 / 3.0 * 2 ** j)
        assert np.all(m[outside] == 0.0)


def test_constant_only_in_low_block():
    g = make_grid(math.pi, 256)
    f = Field.from_samples(g, np.ones(g.n))
    d = decompose(f)
    assert np.allclose(d[-1].samples, 1.0, atol=1e-15)
    assert all(np.max(np.abs(d[j].samples)) == 0.0 for j in d.indices() if j >= 0)


@pytest.mark.parametrize("j0", [2, 4, 6])
def test_dyadic_cosine_blocks(j0):
    g = make_grid(math.pi, 1024)
    f = Field.from_samples(g, np.cos(2.0 ** j0 * g.x))
    d = decompose(f)
    for j in d.indices():
        if abs(j - j0) >= 2:
            assert np.max(np.abs(d[j].samples)) < 1e-13
    assert np.allclose(d.reconstruct().samples, f.samples, atol=1e-13)


def test_low_pass_cases(rng):
    g = make_grid(math.pi, 256)
    bank = build_filter_bank(g)
    assert np.max(np.abs(low_pass(Field.from_samples(g, np.cos(8 * g.x)), 0, bank).samples)) <= 1e-10
    f = band_limited(g, rng)
    assert np.allclose(low_pass(f, bank.J_max + 1, bank).samples, f.samples, atol=1e-12)


def test_partial_sum_difference_sits_at_jumps():
    from besovch.counterexample import heaviside_partial_sum
    g = make_grid(math.pi, 1 << 13)
    # the surrogate jumps at 0 and L/2; the band between M and N lives on scale 2^-M
    dist = np.minimum(np.abs(g.x), np.abs(g.x - g.L / 2))
    for M, N in ((5, 8), (7, 10)):
        diff = np.abs(heaviside_partial_sum(N, g).samples - heaviside_partial_sum(M, g).samples)
        assert diff[dist > 32 * 2.0 ** -M].max() < 1e-2 * diff.max()
        assert dist[np.argmax(diff)] < 2.0 ** -M


def test_paraproduct_with_one():
    g = make_grid(math.pi, 256)
    one = Field.from_samples(g, np.ones(g.n))
    h = band_limited(g, np.random.default_rng(9))
    bank = build_filter_bank(g)
    # S_{j-1} 1 = 1 for j >= 1, so T_1 g drops blocks -1 and 0
    want = h - block(h, -1, bank) - block(h, 0, bank)
    assert np.allclose(paraproduct(one, h, bank).samples, want.samples, atol=1e-12)


def test_bony_cos_square():
    g = make_grid(math.pi, 128)
    f = Field.from_samples(g, np.cos(4 * g.x))
    s = paraproduct(f, f) + paraproduct(f, f) + remainder(f, f)
    assert np.allclose(s.samples, np.cos(4 * g.x) ** 2, atol=1e-13)


def test_commutator_constant_g():
    g = make_grid(math.pi, 256)
    f = band_limited(g, np.random.default_rng(2))
    c = Field.from_samples(g, np.full(g.n, -1.5))
    for j in range(-1, 5):
        assert np.max(np.abs(commutator_rj(f, c, j).samples)) == 0.0


def test_commutator_constant_stable(corpus):
    from besovch.besov import B0_INF_1, B1_INF_1, besov_value
    cs = []
    for f, h in zip(corpus[0::2], corpus[1::2]):
        if f.grid != h.grid:
            h = band_limited(f.grid, np.random.default_rng(len(cs)), decay=1.0)
        bank = build_filter_bank(f.grid)
        lhs = sum(2.0 ** j * commutator_rj(f, h, j, bank).sup() for j in bank.indices)
        cs.append(lhs / (besov_value(derivative(f), B0_INF_1) * besov_value(h, B1_INF_1)))
    cs = np.array(cs)
    # one constant C with every measured value in [0.5 C, 1.5 C]
    assert np.all(np.isfinite(cs))
    assert cs.max() / cs.min() <= 3.0, cs
