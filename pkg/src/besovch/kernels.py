"""Hot inner loops, each with a numba and a numpy implementation.

The public functions dispatch on :func:`besovch._accel.numba_enabled` at
call time, so flipping ``BESOVCH_NUMBA`` between calls is honoured.  Both
paths must agree to rounding; ``tests/test_kernels.py`` checks this.
"""
import numpy as np

from ._accel import njit, numba_enabled


# -- multipeakon right-hand side -------------------------------------------

def _peakon_rhs_py(p, q):
    m = p.shape[0]
    dp = np.zeros(m)
    dq = np.zeros(m)
    for i in range(m):
        acc_p = 0.0
        acc_q = 0.0
        for j in range(m):
            d = q[i] - q[j]
            e = np.exp(-abs(d))
            acc_q += p[j] * e
            if j != i:
                if d > 0.0:
                    acc_p += p[j] * e
                elif d < 0.0:
                    acc_p -= p[j] * e
        dp[i] = p[i] * acc_p
        dq[i] = acc_q
    return dp, dq


_peakon_rhs_nb = njit(_peakon_rhs_py)


def _peakon_rhs_np(p, q):
    d = q[:, None] - q[None, :]
    e = np.exp(-np.abs(d))
    dq = e @ p
    dp = p * ((np.sign(d) * e) @ p)
    return dp, dq


def peakon_rhs(p, q):
    """Return ``(dp, dq)`` for the multipeakon system with ``sign(0) = 0``."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    if numba_enabled():
        return _peakon_rhs_nb(p, q)
    return _peakon_rhs_np(p, q)


# -- peakon profile sampling -----------------------------------------------

def _peakon_sum_py(p, q, x, period):
    out = np.zeros(x.shape[0])
    half = 0.5 * period
    for m in range(x.shape[0]):
        acc = 0.0
        for i in range(p.shape[0]):
            d = abs(x[m] - q[i])
            if period > 0.0:
                d = d % period
                if d > half:
                    d = period - d
                # periodised kernel: sum over images of exp(-|d + k period|)
                acc += p[i] * np.cosh(half - d) / np.sinh(half)
            else:
                acc += p[i] * np.exp(-d)
        out[m] = acc
    return out


_peakon_sum_nb = njit(_peakon_sum_py)


def _peakon_sum_np(p, q, x, period):
    d = np.abs(x[:, None] - q[None, :])
    if period > 0.0:
        half = 0.5 * period
        d = np.mod(d, period)
        d = np.where(d > half, period - d, d)
        k = np.cosh(half - d) / np.sinh(half)
    else:
        k = np.exp(-d)
    return k @ p


def peakon_sum(p, q, x, period=0.0):
    """Sample ``sum_i p_i exp(-|x - q_i|)`` at ``x``.

    With ``period > 0`` the kernel is summed over all periodic images, which
    is ``cosh(period/2 - d) / sinh(period/2)`` for the wrapped distance ``d``.
    """
    p = np.ascontiguousarray(p, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if numba_enabled():
        return _peakon_sum_nb(p, q, x, float(period))
    return _peakon_sum_np(p, q, x, float(period))


# -- band-limited evaluation at scattered grid indices ---------------------

def _cexp_sum_py(coef_re, coef_im, d0, n, idx):
    # G(p) = sum_t c_t exp(2 pi i (d0 + t) p / n); phases reduced mod n in integers.
    # A tile of points advances together so the inner loop has no serial
    # dependency and vectorises.
    m = idx.shape[0]
    out_re = np.zeros(m)
    out_im = np.zeros(m)
    nk = coef_re.shape[0]
    w = 2.0 * np.pi / n
    tile = 256
    zr = np.empty(tile)
    zi = np.empty(tile)
    sr = np.empty(tile)
    si = np.empty(tile)
    ar = np.empty(tile)
    ai = np.empty(tile)
    pp = np.empty(tile, dtype=np.int64)
    for start in range(0, m, tile):
        P = min(tile, m - start)
        for s in range(P):
            pp[s] = idx[start + s] % n
            sr[s] = np.cos(w * pp[s])
            si[s] = np.sin(w * pp[s])
            ar[s] = 0.0
            ai[s] = 0.0
        for t in range(nk):
            if (t & 63) == 0:
                # re-anchor the rotating phasors from exact integer phases
                for s in range(P):
                    ph = ((d0 + t) * pp[s]) % n
                    zr[s] = np.cos(w * ph)
                    zi[s] = np.sin(w * ph)
            cr = coef_re[t]
            ci = coef_im[t]
            for s in range(P):
                x = zr[s]
                y = zi[s]
                ar[s] += cr * x - ci * y
                ai[s] += cr * y + ci * x
                zr[s] = x * sr[s] - y * si[s]
                zi[s] = x * si[s] + y * sr[s]
        for s in range(P):
            out_re[start + s] = ar[s]
            out_im[start + s] = ai[s]
    return out_re, out_im


_cexp_sum_nb = njit(_cexp_sum_py)


def _cexp_sum_np(coef_re, coef_im, d0, n, idx, chunk=2048):
    d = np.arange(d0, d0 + coef_re.shape[0], dtype=np.int64)
    c = coef_re + 1j * coef_im
    out = np.empty(idx.shape[0], dtype=np.complex128)
    for start in range(0, idx.shape[0], chunk):
        p = idx[start:start + chunk] % n
        phase = np.exp((2j * np.pi / n) * (np.outer(p, d) % n))
        out[start:start + chunk] = phase @ c
    return out.real, out.imag


def cexp_sum(coef, d0, n, idx):
    """``G(p) = sum_t coef[t] exp(2 pi i (d0 + t) p / n)`` at integer ``idx``.

    Phases are reduced modulo ``n`` in exact integer arithmetic, so large
    wavenumbers and indices lose no accuracy.
    """
    coef = np.asarray(coef)
    re = np.ascontiguousarray(coef.real, dtype=np.float64)
    im = np.ascontiguousarray(coef.imag, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if numba_enabled():
        g_re, g_im = _cexp_sum_nb(re, im, int(d0), int(n), idx)
    else:
        g_re, g_im = _cexp_sum_np(re, im, int(d0), int(n), idx)
    return g_re + 1j * g_im


def trig_eval(coef, lo, n, idx):
    """Evaluate a real band-limited field at fine-grid indices ``idx``.

    ``coef`` holds the unnormalised rfft coefficients for wavenumbers
    ``lo .. lo + len(coef) - 1`` (the Nyquist index must not be included);
    all other coefficients are zero.
    """
    coef = np.array(coef, dtype=np.complex128)
    if lo == 0 and coef.size:
        # the zero mode is unpaired in the one-sided sum
        coef[0] *= 0.5
    return 2.0 * cexp_sum(coef, lo, n, idx).real / n


def _max_abs_re_prod_py(g, c):
    best = 0.0
    for i in range(g.shape[0]):
        v = abs(g[i].real * c[i].real - g[i].imag * c[i].imag)
        if v > best:
            best = v
    return best


_max_abs_re_prod_nb = njit(_max_abs_re_prod_py)


def max_abs_re_prod(g, c):
    """``max_i |Re(g_i c_i)|`` without forming the product."""
    if numba_enabled():
        return float(_max_abs_re_prod_nb(g, c))
    v = g.real * c.real
    v -= g.imag * c.imag
    return max(float(v.max()), -float(v.min()))
