"""High-frequency initial data with a modulated low-pass Heaviside envelope.

``u0 = -a d_x (1 - d_xx)^{-1} [cos(K x) (1 + a S_N h)]`` with
``a = N^{-1/10}`` and carrier ``K = 2^{N+5}``.  Everything is assembled in
Fourier space from closed-form coefficients, so building ``u0`` for
``N = 18`` needs no physical-space product.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
import math

import numpy as np
import scipy.fft as sfft

from .besov import B0_INF_1, B1_INF_1, B1_LOG, combine, weighted_blocks
from .grid import Field, derivative, helmholtz_inv_dx, make_grid, product
from .littlewood_paley import BlockSupConfig, band_sup, build_filter_bank, chi, spectrum_block_sups
from .runtime import worker_count


def amplitude(N):
    return float(N) ** -0.1


def carrier(N):
    return 2.0 ** (N + 5)


@dataclass(frozen=True)
class CounterexampleParams:
    """``N`` and the grid hosting ``u0(N)``.

    Defaults: ``L = pi`` and ``n = 2^{N+9}`` (nyquist ``2^{N+8}``).  The grid
    must host block ``N+6`` (``2^{N+6} 8/3 <= nyquist``) and the carrier must
    sit on the frequency lattice.
    """

    N: int
    L: float = math.pi
    n: int = 0
    jump_location: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if self.n == 0:
            object.__setattr__(self, "n", 2 ** (self.N + 9))
        g = self.grid
        if 2.0 ** (self.N + 6) * 8.0 / 3.0 > g.nyquist:
            raise ValueError(
                f"grid (L={self.L:g}, n={self.n}) too small for N={self.N}: "
                f"nyquist {g.nyquist:g} < 2^(N+6)*8/3")
        kc = carrier(self.N) / g.dxi
        if abs(kc - round(kc)) > 1e-9 * kc:
            raise ValueError(f"carrier 2^{self.N + 5} is not on the frequency lattice of L={self.L:g}")

    @property
    def grid(self):
        return make_grid(self.L, self.n)

    @property
    def carrier_index(self):
        return int(round(carrier(self.N) / self.grid.dxi))


def heaviside_coefficients(grid, k, x0=0.0):
    """Fourier-series coefficients ``c_k`` of the indicator of ``[x0, x0 + L/2)``."""
    L = grid.L
    k = np.asarray(k)
    xi = grid.dxi * k
    c = np.empty(k.shape, dtype=np.complex128)
    zero = k == 0
    c[zero] = 0.25
    xz = xi[~zero]
    c[~zero] = (np.exp(-1j * xz * x0) - np.exp(-1j * xz * (x0 + 0.5 * L))) / (2.0 * L * 1j * xz)
    return c


def _to_rfft(grid, k, c):
    # samples start at x = -L, so mode k picks up exp(-i pi k)
    sign = np.where(np.asarray(k) % 2 == 0, 1.0, -1.0)
    return grid.n * sign * c


def heaviside_spectrum(grid, x0=0.0):
    """rfft spectrum of the periodic Heaviside surrogate truncated below Nyquist."""
    k = np.arange(grid.n_modes)
    X = _to_rfft(grid, k, heaviside_coefficients(grid, k, x0))
    X[-1] = 0.0
    return X


def _snh_coefficients(grid, N, x0):
    top = int(math.ceil(4.0 / 3.0 * 2.0 ** N / grid.dxi)) + 1
    k = np.arange(min(top, grid.n_modes - 1))
    c = heaviside_coefficients(grid, k, x0) * chi(grid.dxi * k * 2.0 ** -N)
    nz = np.flatnonzero(c)
    return k[: nz[-1] + 1], c[: nz[-1] + 1]


def heaviside_partial_sum(N, grid, x0=0.0, truncated=False):
    """``S_N h`` for the periodic surrogate ``h = 1 on [x0, x0 + L/2)``.

    With ``truncated`` only the nonzero leading part of the spectrum is
    returned (a raw array), which is enough for block norms.
    """
    if 4.0 / 3.0 * 2.0 ** N >= grid.nyquist:
        raise ValueError(f"S_{N} h does not fit below nyquist {grid.nyquist:g}")
    k, c = _snh_coefficients(grid, N, x0)
    X = _to_rfft(grid, k, c)
    if truncated:
        return X
    full = np.zeros(grid.n_modes, dtype=np.complex128)
    full[: len(X)] = X
    return Field.from_spectrum(grid, full, copy=False)


def u0_spectrum(params, truncated=False):
    """rfft spectrum of ``u0`` (complex128).

    With ``truncated`` the array stops after the last nonzero mode.
    """
    g = params.grid
    N = params.N
    a = amplitude(N)
    k, c = _snh_coefficients(g, N, params.jump_location)
    gco = a * c
    gco[0] += 1.0
    B = len(k) - 1
    kc = params.carrier_index
    # cos(Kx) g(x) has coefficient g_{l-kc} / 2 at l >= 0 (g_{-k} = conj g_k)
    ell = np.arange(kc - B, kc + B + 1)
    d = 0.5 * np.concatenate([np.conj(gco[1:][::-1]), gco])
    X = np.zeros(kc + B + 1 if truncated else g.n_modes, dtype=np.complex128)
    xi = g.dxi * ell
    X[ell] = -a * (1j * xi / (1.0 + xi * xi)) * _to_rfft(g, ell, d)
    return X


def build_u0(params):
    return Field.from_spectrum(params.grid, u0_spectrum(params), copy=False)


def build_E0(u0):
    """``E0 = -d_x (1 - d_xx)^{-1} (u0_x^2 / 2)`` with a dealiased square."""
    ux = derivative(u0)
    return -helmholtz_inv_dx(product(ux, ux) * 0.5)


# -- scaling experiments ---------------------------------------------------

def fit_log2_slope(Ns, values):
    """Least-squares slope of ``log2(value)`` against ``log2(N)``.

    Returns ``(slope, intercept, rms_residual)``.
    """
    x = np.log2(np.asarray(Ns, dtype=np.float64))
    y = np.log2(np.asarray(values, dtype=np.float64))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def active_window(per_block, rel=1e-3):
    """``(j_min, j_max)`` of blocks whose contribution exceeds ``rel * max``."""
    vals = dict(per_block)
    top = max(vals.values())
    js = [j for j, v in vals.items() if v > rel * top]
    return (min(js), max(js)) if js else (None, None)


@dataclass
class ScalingRecord:
    N: int
    u0_b1: float
    u0x_b0: float
    u0x2_b0: float
    u0_b1log: float
    algebra_ratio: float
    E0_b1: float
    lipschitz: float
    window: tuple


@dataclass
class ScalingReport:
    records: list
    slopes: dict  # name -> (slope, intercept, residual)

    def to_dict(self):
        return {
            "records": [asdict(r) for r in self.records],
            "slopes": {k: {"slope": v[0], "intercept": v[1], "residual": v[2]}
                       for k, v in sorted(self.slopes.items())},
        }


def square_spectrum(seg, lo, n):
    """rfft of ``f^2`` where ``f`` has rfft coefficients ``seg`` on ``[lo, lo + W)``.

    With ``G(m) = sum_d seg_d e^{2 pi i d m / n}`` one has
    ``f^2 = (2/n)^2 (|G|^2 + Re(e^{4 pi i lo m / n} G^2)) / 2``, so the
    square only needs the autocorrelation and self-convolution of ``seg``,
    both computed with FFTs of length about ``4 W`` instead of ``n``.
    Requires ``lo >= 1`` and ``2 (lo + W) <= n / 2``.
    """
    W = len(seg)
    if lo < 1 or 2 * (lo + W) > n // 2 + 1:
        raise ValueError("band must avoid the zero mode and fit twice below nyquist")
    P = sfft.next_fast_len(2 * W)
    F = sfft.fft(seg, P)
    auto = sfft.ifft(F * F.conj())[:W]
    conv = sfft.ifft(F * F)[:2 * W - 1]
    del F
    out = np.zeros(2 * (lo + W) - 1, dtype=np.complex128)
    out[:W] = auto * (2.0 / n)
    out[0] = out[0].real
    out[2 * lo:] += conv / n
    return out


def scaling_record(params, cfg=None):
    """All static norms of ``u0(N)`` for one ``N``.

    Everything works on the narrow band of ``u0``; no grid-sized array is
    formed, which keeps ``N = 18`` (``n = 2^27``) within a few hundred MB.
    """
    g = params.grid
    n = g.n
    bank = build_filter_bank(g)
    cfg = cfg or BlockSupConfig()
    U = u0_spectrum(params, truncated=True)
    lo = int(np.flatnonzero(U)[0])
    hi = len(U)
    sup_u = spectrum_block_sups(U, bank, cfg=cfg)
    u0_b1 = weighted_blocks(sup_u, B1_INF_1)
    u0_b1log = combine(weighted_blocks(sup_u, B1_LOG), np.inf)
    u_sup = band_sup(U[lo:], lo, hi, n, cfg)
    # u0_x in place
    U[lo:] *= 1j * g.dxi * np.arange(lo, hi)
    sup_ux = spectrum_block_sups(U, bank, cfg=cfg)
    u0x_b0 = combine(weighted_blocks(sup_ux, B0_INF_1), 1)
    lip = band_sup(U[lo:], lo, hi, n, cfg)
    S2 = square_spectrum(U[lo:], lo, n)
    del U
    top = len(S2)
    sup_sq = spectrum_block_sups(S2, bank, cfg=cfg)
    u0x2_b0 = combine(weighted_blocks(sup_sq, B0_INF_1), 1)
    # E0 = -(1/2) i xi / (1 + xi^2) (u0_x^2)^, formed in place
    xi2 = g.dxi * np.arange(top)
    S2 *= -0.5j * xi2 / (1.0 + xi2 * xi2)
    del xi2
    sup_E = spectrum_block_sups(S2, bank, cfg=cfg)
    del S2
    E0_b1 = combine(weighted_blocks(sup_E, B1_INF_1), 1)
    return ScalingRecord(
        N=params.N,
        u0_b1=combine(u0_b1, 1),
        u0x_b0=u0x_b0,
        u0x2_b0=u0x2_b0,
        u0_b1log=u0_b1log,
        algebra_ratio=u0x2_b0 / u0x_b0 ** 2,
        E0_b1=E0_b1,
        lipschitz=u_sup + lip,
        window=active_window(u0_b1),
    )


SLOPE_KEYS = ("u0_b1", "u0x_b0", "u0x2_b0", "u0_b1log", "E0_b1", "algebra_ratio")


def algebra_failure_experiment(N_list, L=math.pi, n_of_N=None, cfg=None, workers=None):
    """Static norms of ``u0(N)`` over ``N_list`` plus fitted log2-slopes.

    Per-N work runs on up to ``workers`` threads (default from
    ``BESOVCH_THREADS``); results are ordered by ``N``.
    """
    Ns = sorted(int(N) for N in N_list)
    n_of_N = n_of_N or (lambda N: 2 ** (N + 9))
    params = [CounterexampleParams(N, L, n_of_N(N)) for N in Ns]
    workers = workers or worker_count()
    if workers > 1 and len(params) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(lambda p: scaling_record(p, cfg), params))
    else:
        records = [scaling_record(p, cfg) for p in params]
    slopes = {}
    if len(Ns) >= 2:
        for key in SLOPE_KEYS:
            slopes[key] = fit_log2_slope(Ns, [getattr(r, key) for r in records])
    return ScalingReport(records, slopes)


@dataclass
class SNHRecord:
    N: int
    b0: float
    b0_over_N: float
    delta0_h: float
    blocks: dict


def snh_calibration(N_list, L=math.pi, n_of_N=None, x0=0.0):
    """``||S_N h||_{B^0_{inf,1}} / N`` over ``N_list``.

    Only the leading part of the spectrum is formed, so large ``N`` is cheap.
    """
    n_of_N = n_of_N or (lambda N: 2 ** (N + 9))
    out = []
    for N in sorted(int(v) for v in N_list):
        g = make_grid(L, n_of_N(N))
        bank = build_filter_bank(g)
        X = heaviside_partial_sum(N, g, x0, truncated=True)
        sups = spectrum_block_sups(X, bank)
        b0 = combine(weighted_blocks(sups, B0_INF_1), 1)
        out.append(SNHRecord(N, b0, b0 / N, sups.get(0, 0.0), sups))
    return out


def heaviside_block_sups(grid, x0=0.0):
    """``{j: ||Delta_j h||_inf}`` for the (Nyquist-truncated) surrogate ``h``."""
    bank = build_filter_bank(grid)
    return spectrum_block_sups(heaviside_spectrum(grid, x0), bank)
