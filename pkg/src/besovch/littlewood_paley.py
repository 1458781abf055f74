"""Dyadic Littlewood-Paley blocks, paraproducts and commutators.

``chi`` is a smooth radial cutoff equal to 1 on ``|xi| <= 1`` and vanishing
for ``|xi| >= 4/3``; ``phi(xi) = chi(xi/2) - chi(xi)`` is supported in the
annulus ``3/4 < |xi| < 8/3``.  Block ``-1`` is the ``chi`` part, blocks
``j >= 0`` use ``phi(2^-j xi)``.
"""
from dataclasses import dataclass, field as dc_field
import math

import numpy as np
import scipy.fft as sfft

from .grid import Field, dealias, derivative, product, _same_grid
from .kernels import cexp_sum, max_abs_re_prod

ANNULUS = (0.75, 8.0 / 3.0)
BALL = 4.0 / 3.0


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    if np.any(inside):
        ti = t[inside]
        a = np.exp(-1.0 / ti)
        b = np.exp(-1.0 / (1.0 - ti))
        out[inside] = a / (a + b)
    return out


def chi(xi):
    # the ramp runs over 1 <= |xi| <= 4/3
    return 1.0 - smooth_step(3.0 * (np.abs(xi) - 1.0))


def phi(xi):
    xi = np.asarray(xi, dtype=np.float64)
    return chi(0.5 * xi) - chi(xi)


CACHE_MODES = 1 << 22


class DyadicFilterBank:
    """Block multipliers sampled on the non-negative frequency lattice of a grid.

    Multipliers are stored compactly as ``(lo, hi, values)``: the nonzero
    entries of the rfft-layout multiplier live in ``[lo, hi)``.
    """

    def __init__(self, grid):
        nyq = grid.nyquist
        if nyq < ANNULUS[1]:
            raise ValueError(f"grid nyquist {nyq:.4g} is below 8/3, block 0 does not fit")
        self.grid = grid
        j = int(math.floor(math.log2(nyq / ANNULUS[1])))
        # guard rounding in the log
        while 2.0 ** (j + 1) * ANNULUS[1] <= nyq:
            j += 1
        while 2.0 ** j * ANNULUS[1] > nyq:
            j -= 1
        self.J_max = j
        self._bands = {}

    @property
    def indices(self):
        return range(-1, self.J_max + 1)

    @property
    def covered(self):
        """Frequencies ``|xi| <= covered`` satisfy the partition of unity."""
        return 2.0 ** (self.J_max + 1)

    def _nominal(self, j):
        g = self.grid
        if j == -1:
            lo, top = 0, BALL
        else:
            lo = int(math.floor(ANNULUS[0] * 2.0 ** j / g.dxi))
            top = ANNULUS[1] * 2.0 ** j
        return lo, min(int(math.ceil(top / g.dxi)) + 1, g.n_modes)

    def band(self, j, limit=None):
        """Return ``(lo, hi, values)`` for block ``j`` or ``None`` if empty.

        With ``limit`` only the modes below ``limit`` are returned.  Bands
        longer than ``CACHE_MODES`` are not cached, they are rebuilt (up to
        ``limit``) on every call to keep memory flat on huge grids.
        """
        if j < -1 or j > self.J_max:
            return None
        if j in self._bands:
            b = self._bands[j]
            if b is None or limit is None or b[1] <= limit:
                return b
            return None if b[0] >= limit else (b[0], limit, b[2][:limit - b[0]])
        lo, hi = self._nominal(j)
        cache = hi - lo <= CACHE_MODES
        if not cache and limit is not None:
            hi = min(hi, limit)
        if lo >= hi:
            return None
        g = self.grid
        vals = np.empty(hi - lo)
        for a in range(lo, hi, 1 << 20):
            xi = g.xi_slice(a, min(a + (1 << 20), hi))
            vals[a - lo:a - lo + xi.size] = chi(xi) if j == -1 else phi(xi * 2.0 ** -j)
        nz = np.flatnonzero(vals)
        b = None
        if nz.size:
            a, c = nz[0], nz[-1] + 1
            v = np.ascontiguousarray(vals[a:c])
            v.setflags(write=False)
            b = (lo + a, lo + c, v)
        if cache:
            self._bands[j] = b
            return self.band(j, limit)
        return b

    def multiplier(self, j):
        """Dense rfft-layout multiplier of block ``j``."""
        m = np.zeros(self.grid.n_modes)
        b = self.band(j)
        if b is not None:
            m[b[0]:b[1]] = b[2]
        return m

    def low_multiplier(self, j):
        """Dense multiplier of ``S_j`` (sum of blocks below ``j``)."""
        if j <= -1:
            return np.zeros(self.grid.n_modes)
        j = min(j, self.J_max + 1)
        return chi(self.grid.xi * 2.0 ** -j)


_bank_cache = {}


def build_filter_bank(grid):
    """Filter bank for ``grid`` (cached per grid, banks are immutable)."""
    bank = _bank_cache.get(grid)
    if bank is None:
        bank = DyadicFilterBank(grid)
        if len(_bank_cache) > 32:
            _bank_cache.clear()
        _bank_cache[grid] = bank
    return bank


def _bank_for(f, bank):
    if bank is None:
        return build_filter_bank(f.grid)
    if bank.grid != f.grid:
        raise ValueError("filter bank built for a different grid")
    return bank


def block_spectrum(spectrum, j, bank):
    out = np.zeros(bank.grid.n_modes, dtype=np.complex128)
    b = bank.band(j)
    if b is not None:
        lo, hi, v = b
        out[lo:hi] = spectrum[lo:hi] * v
    return out


def block(f, j, bank=None):
    """``Delta_j f``; zero for ``j <= -2`` and ``j > J_max``."""
    bank = _bank_for(f, bank)
    return Field.from_spectrum(f.grid, block_spectrum(f.spectrum, j, bank), copy=False)


def low_pass(f, j, bank=None):
    """``S_j f``, the sum of the blocks strictly below ``j``."""
    bank = _bank_for(f, bank)
    return Field.from_spectrum(f.grid, f.spectrum * bank.low_multiplier(j), copy=False)


@dataclass(frozen=True)
class DyadicDecomposition:
    blocks: tuple
    j_min: int = -1

    def __getitem__(self, j):
        return self.blocks[j - self.j_min]

    def __len__(self):
        return len(self.blocks)

    def indices(self):
        return range(self.j_min, self.j_min + len(self.blocks))

    def reconstruct(self):
        total = np.zeros_like(self.blocks[0].spectrum)
        for b in self.blocks:
            total = total + b.spectrum
        return Field.from_spectrum(self.blocks[0].grid, total, copy=False)


def decompose(f, bank=None):
    """All blocks ``j = -1 .. J_max`` of ``f``."""
    bank = _bank_for(f, bank)
    return DyadicDecomposition(tuple(block(f, j, bank) for j in bank.indices))


def _finish(grid, acc):
    out = sfft.rfft(acc)
    out[grid.dealias_cutoff:] = 0.0
    return Field.from_spectrum(grid, out, copy=False)


def paraproduct(f, g, bank=None):
    """``T_f g = sum_j S_{j-1} f * Delta_j g`` with 2/3-dealiased products."""
    _same_grid(f, g)
    bank = _bank_for(f, bank)
    grid = f.grid
    fd, gd = dealias(f), dealias(g)
    acc = np.zeros(grid.n)
    for j in range(1, bank.J_max + 1):
        low = sfft.irfft(fd.spectrum * bank.low_multiplier(j - 1), grid.n)
        acc += low * sfft.irfft(block_spectrum(gd.spectrum, j, bank), grid.n)
    return _finish(grid, acc)


def remainder(f, g, bank=None):
    """``R(f, g) = sum_j sum_{|j'-j|<=1} Delta_j f * Delta_j' g``, dealiased."""
    _same_grid(f, g)
    bank = _bank_for(f, bank)
    grid = f.grid
    fd, gd = dealias(f), dealias(g)
    fb = {j: sfft.irfft(block_spectrum(fd.spectrum, j, bank), grid.n) for j in bank.indices}
    gb = {j: sfft.irfft(block_spectrum(gd.spectrum, j, bank), grid.n) for j in bank.indices}
    acc = np.zeros(grid.n)
    for j in bank.indices:
        near = sum(gb[k] for k in (j - 1, j, j + 1) if k in gb)
        acc += fb[j] * near
    return _finish(grid, acc)


def commutator_rj(f, g, j, bank=None):
    """``R_j = Delta_j(f g_x) - f Delta_j g_x`` with dealiased products."""
    _same_grid(f, g)
    bank = _bank_for(f, bank)
    gx = derivative(g)
    first = block(product(f, gx), j, bank)
    second = product(f, block(gx, j, bank))
    return first - second


# -- block norms -----------------------------------------------------------

@dataclass
class BlockSupConfig:
    """Tuning of the fast block L-infinity evaluation.

    ``oversample`` sets the decimated transform length ``m >= 2 * oversample * hi``.
    ``negligible`` skips blocks whose largest coefficient is below this
    fraction of the largest coefficient of the whole spectrum (0 keeps all).
    """

    oversample: int = 8
    refine: int = 64
    negligible: float = 0.0
    refine_budget: float = 1.0
    max_points: int = 1 << 22
    stats: dict = dc_field(default_factory=dict)


def _full_block_max(seg, lo, hi, n):
    buf = np.zeros(n // 2 + 1, dtype=np.complex128)
    buf[lo:hi] = seg
    v = sfft.irfft(buf, n, overwrite_x=True)
    del buf
    # max(|v|) without a grid-sized temporary
    return max(float(v.max()), -float(v.min()))


def band_sup(seg, lo, hi, n, cfg=None):
    """Exact ``max_m |f(x_m)|`` of the real field whose only nonzero rfft
    coefficients are ``seg`` on ``[lo, hi)`` (``hi <= n/2``).

    The band is demodulated to its centre ``c``: with
    ``G(p) = sum_k seg_k exp(2 pi i (k - c) p / n)`` the field is
    ``f = (2/n) Re(exp(2 pi i c p / n) G)`` (zero mode halved) and ``|f| <= (2/n)|G|``.
    ``G`` has half-bandwidth ``W = (hi - lo) / 2``, so it is sampled exactly by
    a short FFT of ``m ~ 2 oversample W`` points and varies slowly between
    samples (Bernstein).  Lattice points whose envelope bound cannot reach the
    best value seen are discarded; the rest are refined by ``cfg.refine`` per
    level down to the full grid, where ``f`` is evaluated exactly.  The result
    equals the full-grid maximum up to rounding.
    """
    cfg = cfg or BlockSupConfig()
    seg = np.asarray(seg, dtype=np.complex128)
    nz = np.flatnonzero(seg)
    if nz.size == 0:
        return 0.0
    seg = seg[nz[0]:nz[-1] + 1]
    lo, hi = lo + int(nz[0]), lo + int(nz[-1]) + 1
    if hi > n // 2:
        cfg.stats["full"] = cfg.stats.get("full", 0) + 1
        return _full_block_max(seg, lo, hi, n)
    if lo == 0:
        seg = seg.copy()
        seg[0] = 0.5 * seg[0].real
    c = (lo + hi - 1) // 2
    W = max(c - lo, hi - 1 - c)
    m = 16
    while m < 2 * cfg.oversample * max(W, 1):
        m *= 2
    if m >= n:
        return _exhaustive_max(seg, lo, hi, n, cfg)
    step = n // m
    # coarse lattice p = r * step: G(r) is a length-m inverse DFT
    buf = np.zeros(m, dtype=np.complex128)
    d = np.arange(lo - c, hi - c)
    buf[d % m] = seg
    G = np.fft.ifft(buf) * m
    r = np.arange(m, dtype=np.int64)
    carrier = np.exp(2j * np.pi * ((c * r) % m) / m)
    f = (2.0 / n) * (carrier * G).real
    env = (2.0 / n) * np.abs(G)
    fabs = np.abs(f)
    best = float(fabs.max())
    h = math.pi * W / m
    emax = float(env.max()) / max(1.0 - h, 0.5)
    kmax = hi - 1

    def bound(env, fabs, step):
        # sup of |f| over the step-neighbourhood of a lattice point, from the
        # envelope and from f itself (Bernstein with ||f||_inf <= emax)
        return np.minimum(env + (math.pi * W * step / n) * emax,
                          fabs + (math.pi * kmax * step / n) * emax)

    # rounding slack: the point attaining ``best`` must never be discarded
    slack = 1.0 - 1e-12
    idx = r * step
    keep = bound(env, fabs, step) >= best * slack
    idx, env, fabs = idx[keep], env[keep], fabs[keep]
    budget = cfg.refine_budget * n * math.log2(n)
    work = 0
    while step > 1:
        sub = max(step // cfg.refine, 1)
        rr = step // sub // 2 + 1
        offs = np.arange(-rr, rr + 1, dtype=np.int64) * sub
        if (work + idx.size * offs.size * seg.size > budget
                or idx.size * offs.size > cfg.max_points):
            # refinement would cost more than an exhaustive evaluation
            cfg.stats["fallback"] = cfg.stats.get("fallback", 0) + 1
            return _exhaustive_max(seg, lo, hi, n, cfg)
        # most promising candidates first, so ``best`` rises quickly
        ub = bound(env, fabs, step)
        order = np.argsort(-ub, kind="stable")
        idx, ub = idx[order], ub[order]
        new_idx, new_env, new_f = [], [], []
        for start in range(0, idx.size, 256):
            if ub[start] < best * slack:
                break
            pts = np.unique((idx[start:start + 256, None] + offs[None, :]).ravel() % n)
            work += pts.size * seg.size
            Gp = cexp_sum(seg, lo - c, n, pts)
            ph = np.exp(2j * np.pi * ((c * pts) % n) / n)
            fp = np.abs((2.0 / n) * (ph * Gp).real)
            best = max(best, float(fp.max()))
            new_idx.append(pts)
            new_env.append((2.0 / n) * np.abs(Gp))
            new_f.append(fp)
        if not new_idx:
            break
        idx = np.concatenate(new_idx)
        env = np.concatenate(new_env)
        fabs = np.concatenate(new_f)
        step = sub
        keep = bound(env, fabs, step) >= best * slack
        idx, env, fabs = idx[keep], env[keep], fabs[keep]
        if idx.size == 0:
            break
    cfg.stats["refined"] = cfg.stats.get("refined", 0) + 1
    return best


def _polyphase_max(seg, lo, hi, n):
    """Full-grid ``max |f|`` of a narrow band using ``n/m`` FFTs of length ``m``.

    With ``c`` the band centre and ``m > 2 W`` a power of two, the envelope on
    the residue class ``p = r (n/m) + q`` is a length-``m`` inverse DFT of
    ``seg_d exp(2 pi i d q / n)``.  Costs about one full transform but only
    ``O(m)`` memory.
    """
    c = (lo + hi - 1) // 2
    W = max(c - lo, hi - 1 - c)
    m = 16
    while m < 2 * W + 2:
        m *= 2
    P = n // m
    k = np.arange(lo, hi, dtype=np.int64)
    slots = (k - c) % m
    # carrier at p = r P + q splits as exp(2 pi i c r / m) exp(2 pi i c q / n);
    # the second factor joins the per-phase twiddle, giving exp(2 pi i k q / n)
    carrier = np.exp(2j * np.pi * ((c * np.arange(m, dtype=np.int64)) % m) / m)
    best = 0.0
    buf = np.zeros(m, dtype=np.complex128)
    tick = np.exp((2j * np.pi / n) * k)
    for q in range(P):
        if q % 64 == 0:
            # re-anchor the phasor recurrence in exact integer phase
            tw = seg * np.exp((2j * np.pi / n) * ((k * q) % n))
        else:
            tw *= tick
        buf[slots] = tw
        G = sfft.ifft(buf, norm="forward")
        best = max(best, max_abs_re_prod(G, carrier))
    return (2.0 / n) * best


def _exhaustive_max(seg, lo, hi, n, cfg):
    # seg carries the halved zero mode here
    if (hi - lo) * 8 <= n and n >= 1 << 20:
        cfg.stats["polyphase"] = cfg.stats.get("polyphase", 0) + 1
        return _polyphase_max(seg, lo, hi, n)
    cfg.stats["full"] = cfg.stats.get("full", 0) + 1
    return _full_block_max(_unhalve(seg, lo), lo, hi, n)


def _unhalve(seg, lo):
    if lo == 0:
        seg = seg.copy()
        seg[0] = 2.0 * seg[0]
    return seg


def spectrum_block_sups(spec, bank, js=None, cfg=None):
    """Block sup norms from a raw rfft spectrum on ``bank.grid``.

    ``spec`` may be shorter than ``n/2 + 1``; missing modes count as zero.
    This lets band-limited data be analysed without allocating the full
    spectrum.
    """
    n = bank.grid.n
    cfg = cfg or BlockSupConfig()
    scale = float(np.max(np.abs(spec))) if cfg.negligible > 0 else 0.0
    out = {}
    for j in (bank.indices if js is None else js):
        b = bank.band(j, len(spec))
        if b is None:
            out[j] = 0.0
            continue
        lo, hi_eff, w = b
        seg = spec[lo:hi_eff] * w
        amax = float(np.max(np.abs(seg)))
        if amax == 0.0 or amax <= cfg.negligible * scale:
            out[j] = 0.0
            continue
        out[j] = band_sup(seg, lo, hi_eff, n, cfg)
    return out


def block_sup_norms(f, bank=None, js=None, cfg=None):
    """``{j: ||Delta_j f||_inf}`` with the sup taken over grid samples."""
    bank = _bank_for(f, bank)
    return spectrum_block_sups(f.spectrum, bank, js, cfg)


def block_l2_norms(f, bank=None, js=None):
    """``{j: ||Delta_j f||_2}`` via Parseval on the grid."""
    bank = _bank_for(f, bank)
    g = f.grid
    spec = f.spectrum
    out = {}
    for j in (bank.indices if js is None else js):
        b = bank.band(j)
        if b is None:
            out[j] = 0.0
            continue
        lo, hi, w = b
        a2 = np.abs(spec[lo:hi] * w) ** 2
        wt = np.full(hi - lo, 2.0)
        if lo == 0:
            wt[0] = 1.0
        if hi == g.n_modes:
            wt[-1] = 1.0
        out[j] = math.sqrt(g.dx * float(np.dot(wt, a2)) / g.n)
    return out


def block_l1_norms(f, bank=None, js=None):
    bank = _bank_for(f, bank)
    g = f.grid
    out = {}
    for j in (bank.indices if js is None else js):
        b = bank.band(j)
        if b is None:
            out[j] = 0.0
            continue
        v = sfft.irfft(block_spectrum(f.spectrum, j, bank), g.n)
        out[j] = g.dx * float(np.sum(np.abs(v)))
    return out


def block_norms(f, p, bank=None, js=None, cfg=None):
    if p in (np.inf, "inf"):
        return block_sup_norms(f, bank, js, cfg)
    if p == 2:
        return block_l2_norms(f, bank, js)
    if p == 1:
        return block_l1_norms(f, bank, js)
    raise ValueError(f"unsupported integrability p={p!r}")
