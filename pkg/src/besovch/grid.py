"""Periodic grids, fields and Fourier multipliers.

The real line is replaced by the torus ``[-L, L)`` sampled at
``x_m = -L + 2 L m / n``.  Spectra are stored in the one-sided
(``rfft``) layout: entry ``k`` holds the unnormalised coefficient of the
mode with wavenumber ``xi_k = pi k / L`` for ``k = 0 .. n/2``.
"""
from dataclasses import dataclass
import struct

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-L, L)`` with ``n`` points."""

    L: float
    n: int

    @property
    def dx(self):
        return 2.0 * self.L / self.n

    @property
    def dxi(self):
        """Spacing of the frequency lattice."""
        return np.pi / self.L

    @property
    def nyquist(self):
        return np.pi * self.n / (2.0 * self.L)

    @property
    def n_modes(self):
        return self.n // 2 + 1

    @property
    def x(self):
        return -self.L + self.dx * np.arange(self.n)

    @property
    def xi(self):
        """Non-negative half of the frequency lattice (rfft layout)."""
        return self.dxi * np.arange(self.n_modes, dtype=np.float64)

    def xi_slice(self, lo, hi):
        return self.dxi * np.arange(lo, hi, dtype=np.float64)

    @property
    def dealias_cutoff(self):
        """First rfft index removed by the 2/3 rule (keeps ``|xi| < 2/3 nyquist``)."""
        return -(-self.n // 3)


def make_grid(L, n_points):
    """Validate and return a :class:`GridSpec`.

    ``n_points`` must be a power of two no smaller than 16 and ``L`` must be
    positive and finite.
    """
    try:
        n = int(n_points)
    except (TypeError, ValueError):
        raise ValueError(f"n_points must be an integer, got {n_points!r}")
    if n != n_points or n < 16 or n & (n - 1):
        raise ValueError(f"n_points must be a power of two >= 16, got {n_points!r}")
    L = float(L)
    if not np.isfinite(L) or L <= 0:
        raise ValueError(f"half length L must be positive, got {L!r}")
    return GridSpec(L, n)


def _frozen(a):
    a.setflags(write=False)
    return a


class Field:
    """Real periodic function sampled on a grid, with a lazily cached spectrum.

    Either representation may be supplied; the other is computed on first
    access.  Both arrays are read-only, so fields can be shared freely.
    """

    __slots__ = ("grid", "_samples", "_spectrum")

    def __init__(self, grid, samples=None, spectrum=None):
        if samples is None and spectrum is None:
            raise ValueError("Field needs samples or spectrum")
        self.grid = grid
        self._samples = None
        self._spectrum = None
        if samples is not None:
            s = np.array(samples, dtype=np.float64)
            if s.shape != (grid.n,):
                raise ValueError(f"expected {grid.n} samples, got shape {s.shape}")
            if not np.all(np.isfinite(s)):
                raise ValueError("field samples must be finite")
            self._samples = _frozen(s)
        if spectrum is not None:
            c = np.array(spectrum, dtype=np.complex128)
            if c.shape != (grid.n_modes,):
                raise ValueError(f"expected {grid.n_modes} modes, got shape {c.shape}")
            self._spectrum = _frozen(c)

    @classmethod
    def from_samples(cls, grid, samples):
        return cls(grid, samples=samples)

    @classmethod
    def from_spectrum(cls, grid, spectrum, copy=True):
        if copy:
            return cls(grid, spectrum=spectrum)
        # caller hands over ownership of a complex128 array
        f = cls.__new__(cls)
        f.grid = grid
        f._samples = None
        f._spectrum = _frozen(spectrum)
        return f

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, samples=func(grid.x))

    @classmethod
    def zeros(cls, grid):
        return cls.from_spectrum(grid, np.zeros(grid.n_modes, complex), copy=False)

    @property
    def samples(self):
        if self._samples is None:
            s = sfft.irfft(self._spectrum, self.grid.n)
            if not np.all(np.isfinite(s)):
                raise FloatingPointError("non-finite samples")
            self._samples = _frozen(s)
        return self._samples

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = _frozen(sfft.rfft(self._samples))
        return self._spectrum

    def sup(self):
        return float(np.max(np.abs(self.samples)))

    def __add__(self, other):
        _same_grid(self, other)
        return Field.from_spectrum(self.grid, self.spectrum + other.spectrum, copy=False)

    def __sub__(self, other):
        _same_grid(self, other)
        return Field.from_spectrum(self.grid, self.spectrum - other.spectrum, copy=False)

    def __mul__(self, a):
        if isinstance(a, Field):
            return product(self, a)
        return Field.from_spectrum(self.grid, self.spectrum * float(a), copy=False)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"Field(L={self.grid.L!r}, n={self.grid.n})"


def _same_grid(f, g):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def apply_multiplier(f, m):
    """Return the field with spectrum ``m(xi_k) * f_hat(xi_k)``.

    ``m`` is either a callable evaluated on ``grid.xi`` (non-negative
    frequencies) or an array of length ``n/2 + 1``.  The symbol is assumed
    Hermitian, ``m(-xi) = conj(m(xi))``, so the output is real; at the
    unpaired Nyquist mode only ``Re m`` is kept.
    """
    grid = f.grid
    vals = m(grid.xi) if callable(m) else m
    vals = np.broadcast_to(np.asarray(vals), (grid.n_modes,))
    if not np.all(np.isfinite(vals)):
        raise ValueError("multiplier has non-finite values on the lattice")
    out = f.spectrum * vals
    out[-1] = f.spectrum[-1] * np.real(vals[-1])
    return Field.from_spectrum(grid, out, copy=False)


def derivative_symbol(grid):
    s = 1j * grid.xi
    s[-1] = 0.0
    return s


def helmholtz_inv_symbol(grid):
    xi = grid.xi
    return 1.0 / (1.0 + xi * xi)


def helmholtz_inv_dx_symbol(grid):
    xi = grid.xi
    s = 1j * xi / (1.0 + xi * xi)
    s[-1] = 0.0
    return s


def derivative(f):
    """Spectral ``d/dx``; the Nyquist mode is zeroed."""
    return apply_multiplier(f, derivative_symbol(f.grid))


def helmholtz_inv(f):
    """``(1 - d_xx)^{-1} f``."""
    return apply_multiplier(f, helmholtz_inv_symbol(f.grid))


def helmholtz_inv_dx(f):
    """``d_x (1 - d_xx)^{-1} f``, multiplier ``i xi / (1 + xi^2)``."""
    return apply_multiplier(f, helmholtz_inv_dx_symbol(f.grid))


def dealias_mask(grid):
    """0/1 mask of the 2/3 rule in rfft layout."""
    mask = np.zeros(grid.n_modes)
    mask[:grid.dealias_cutoff] = 1.0
    return mask


def dealias(f):
    out = np.array(f.spectrum)
    out[f.grid.dealias_cutoff:] = 0.0
    return Field.from_spectrum(f.grid, out, copy=False)


def product(f, g, dealiased=True):
    """Pointwise product ``f g``.

    With ``dealiased`` both factors and the result are truncated by the 2/3
    rule, which makes the result the exact truncation of the product of the
    truncated factors (no aliasing).
    """
    _same_grid(f, g)
    if dealiased:
        f, g = dealias(f), dealias(g)
    out = sfft.rfft(f.samples * g.samples)
    if dealiased:
        out[f.grid.dealias_cutoff:] = 0.0
    return Field.from_spectrum(f.grid, out, copy=False)


def shift(f, a):
    """Translate by ``a``: returns ``x -> f(x - a)``."""
    grid = f.grid
    steps = a / grid.dx
    if abs(steps - round(steps)) < 1e-12:
        return Field.from_samples(grid, np.roll(f.samples, int(round(steps))))
    return apply_multiplier(f, np.exp(-1j * grid.xi * a))


# -- serialization ---------------------------------------------------------

_HEADER = struct.Struct("<dQ")


def write_csv(f, path):
    data = np.column_stack([f.grid.x, f.samples])
    try:
        np.savetxt(path, data, delimiter=",", header="x,value", comments="", fmt="%.17g")
    except OSError as exc:
        raise OSError(f"cannot write field CSV {path}: {exc}") from exc


def read_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read field CSV {path}: {exc}") from exc
    x, v = data[:, 0], data[:, 1]
    n = len(x)
    dx = x[1] - x[0]
    L = n * dx / 2.0
    grid = make_grid(L, n)
    if abs(x[0] + L) > 1e-9 * L:
        raise ValueError(f"{path}: first sample must sit at -L")
    return Field.from_samples(grid, v)


def write_binary(f, path):
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(f.grid.L, f.grid.n))
            fh.write(np.ascontiguousarray(f.samples, dtype="<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write field binary {path}: {exc}") from exc


def read_binary(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read field binary {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    L, n = _HEADER.unpack_from(raw)
    grid = make_grid(L, n)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != n:
        raise ValueError(f"{path}: expected {n} samples, found {body.size}")
    return Field.from_samples(grid, body.astype(np.float64))


def read_field(path):
    """Load a field from ``.csv`` or the raw binary layout (any other suffix)."""
    if str(path).lower().endswith(".csv"):
        return read_csv(path)
    return read_binary(path)


def write_field(f, path):
    if str(path).lower().endswith(".csv"):
        write_csv(f, path)
    else:
        write_binary(f, path)
