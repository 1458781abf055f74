"""Camassa-Holm evolution in nonlocal form and the multipeakon system.

The PDE ``u_t + u u_x + d_x (1 - d_xx)^{-1} (u^2 + u_x^2 / 2) = 0`` is
advanced with classical RK4 in Fourier space; quadratic terms are formed in
physical space and truncated by the 2/3 rule.
"""
from dataclasses import dataclass, field as dc_field
import math

import numpy as np
import scipy.fft as sfft

from .besov import B1_INF_1, besov_value, h1_energy
from .grid import Field, derivative_symbol, helmholtz_inv_dx_symbol
from .kernels import peakon_rhs, peakon_sum


@dataclass(frozen=True)
class SolveConfig:
    """Time-stepping controls.

    ``dt = cfl * dx / max(speed_floor, max|u|, dx * max|u_x|)``, further
    capped by ``cfl / sqrt(max|u_x| max|u_xx|)`` (resolves the fastest
    nonlinear exchange between steep and smooth scales) and ``dt_max``.
    ``record_times`` are hit exactly; ``record_every`` adds a record every
    that many steps.
    """

    t_end: float = 1.0
    cfl: float = 0.4
    dealias: bool = True
    breaking_threshold: float = 1e3
    record_every: int = 0
    record_times: tuple = ()
    speed_floor: float = 1.0
    curvature_guard: bool = True
    dt_max: float = math.inf
    track_besov: bool = False
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not (self.t_end > 0.0):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.record_every < 0:
            raise ValueError("record_every must be >= 0")
        if self.breaking_threshold <= 0:
            raise ValueError("breaking_threshold must be positive")
        object.__setattr__(self, "record_times", tuple(sorted(float(t) for t in self.record_times)))


@dataclass(frozen=True)
class SolverState:
    t: float
    u: Field
    dt: float = 0.0
    diagnostics: dict = dc_field(default_factory=dict)


@dataclass
class Trajectory:
    states: list
    broke_at: float = None
    reason: str = ""
    steps: int = 0

    @property
    def final(self):
        return self.states[-1]

    @property
    def times(self):
        return np.array([s.t for s in self.states])


class CHOperator:
    """Precomputed symbols for the CH right-hand side on one grid."""

    def __init__(self, grid, dealias=True):
        self.grid = grid
        self.n = grid.n
        self.dealias = dealias
        self.cut = grid.dealias_cutoff if dealias else grid.n_modes
        self.ik = derivative_symbol(grid)
        self.hel = helmholtz_inv_dx_symbol(grid)

    def truncate(self, U):
        if self.dealias:
            U = U.copy()
            U[self.cut:] = 0.0
        return U

    def rhs(self, U):
        """Return ``(dU/dt, u, u_x)`` with ``u, u_x`` the physical fields of ``U``."""
        n, cut = self.n, self.cut
        if self.dealias:
            U = U.copy()
            U[cut:] = 0.0
        u = sfft.irfft(U, n)
        ux = sfft.irfft(self.ik * U, n)
        P = sfft.rfft(u * ux)
        Q = sfft.rfft(u * u + 0.5 * ux * ux)
        R = -(P + self.hel * Q)
        if self.dealias:
            R[cut:] = 0.0
        return R, u, ux

    def uxx_sup(self, U):
        return float(np.max(np.abs(sfft.irfft(self.ik * self.ik * U, self.n))))


def ch_rhs(u, dealias=True):
    """``-u u_x - d_x (1 - d_xx)^{-1} (u^2 + u_x^2 / 2)`` as a Field."""
    op = CHOperator(u.grid, dealias)
    R, _, _ = op.rhs(np.asarray(u.spectrum))
    return Field.from_spectrum(u.grid, R, copy=False)


def _stable_dt(cfg, dx, umax, uxmax, uxxmax):
    denom = max(cfg.speed_floor, umax, dx * uxmax)
    dt = cfg.dt_max
    if denom > 0:
        dt = min(dt, cfg.cfl * dx / denom)
    if cfg.curvature_guard and uxmax * uxxmax > 0:
        dt = min(dt, cfg.cfl / math.sqrt(uxmax * uxxmax))
    return dt


def spectral_tail(grid, U, cut=None):
    """Share of the H^1 energy carried by the top third of the retained modes.

    The truncated system conserves H^1 exactly, so steepening below the grid
    scale saturates instead of breaking; a growing tail is the symptom.
    """
    cut = cut or grid.dealias_cutoff
    a = np.abs(U[:cut]) ** 2 * (1.0 + grid.xi[:cut] ** 2)
    tot = float(a.sum())
    return float(a[2 * cut // 3:].sum()) / tot if tot > 0 else 0.0


def _diagnostics(grid, U, u, ux, cfg):
    f = Field.from_spectrum(grid, U)
    d = {
        "h1": h1_energy(f),
        "min_ux": float(ux.min()),
        "max_abs_u": float(np.max(np.abs(u))),
        "tail": spectral_tail(grid, U),
    }
    if cfg.track_besov:
        d["b1inf1"] = besov_value(f, B1_INF_1)
    return d


def _rk4(op, U, dt, k1):
    k2, _, _ = op.rhs(U + (0.5 * dt) * k1)
    k3, _, _ = op.rhs(U + (0.5 * dt) * k2)
    k4, _, _ = op.rhs(U + dt * k3)
    return U + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(state, cfg, dt=None, op=None):
    """One classical RK4 step; ``dt`` defaults to the configured stable step."""
    grid = state.u.grid
    op = op or CHOperator(grid, cfg.dealias)
    U = np.asarray(state.u.spectrum)
    k1, u, ux = op.rhs(U)
    if dt is None:
        uxx = op.uxx_sup(op.truncate(U)) if cfg.curvature_guard else 0.0
        dt = _stable_dt(cfg, grid.dx, float(np.max(np.abs(u))), float(np.max(np.abs(ux))), uxx)
    if dt < 1e-12:
        raise FloatingPointError(f"time step underflow (dt={dt:.3g})")
    Un = _rk4(op, U, dt, k1)
    if not np.all(np.isfinite(Un)):
        raise FloatingPointError("non-finite state after RK4 step")
    f = Field.from_spectrum(grid, Un, copy=False)
    ux_new = np.asarray(derivative_symbol(grid) * Un)
    diag = {"h1": h1_energy(f), "min_ux": float(sfft.irfft(ux_new, grid.n).min()),
            "max_abs_u": f.sup()}
    return SolverState(state.t + dt, f, dt, diag)


def solve(u0, cfg, callback=None):
    """Integrate from ``u0`` to ``cfg.t_end``.

    Records the initial state, every ``record_every`` steps, each time in
    ``record_times`` and the final time.  Stops early when
    ``min u_x < -breaking_threshold``, when the state stops being finite or
    when ``dt`` underflows; the trajectory then carries ``broke_at``.
    With dealiasing on, the initial data is truncated by the 2/3 rule.
    """
    grid = u0.grid
    op = CHOperator(grid, cfg.dealias)
    U = op.truncate(np.array(u0.spectrum))
    dx = grid.dx
    t = 0.0
    marks = [tm for tm in cfg.record_times if 0.0 < tm < cfg.t_end] + [cfg.t_end]
    mi = 0
    k1, u, ux = op.rhs(U)
    states = [SolverState(0.0, Field.from_spectrum(grid, U), 0.0, _diagnostics(grid, U, u, ux, cfg))]
    traj = Trajectory(states)
    steps = 0
    while mi < len(marks):
        target = marks[mi]
        min_ux = float(ux.min())
        if not np.isfinite(min_ux):
            traj.broke_at, traj.reason = t, "non-finite state"
            break
        if min_ux < -cfg.breaking_threshold:
            traj.broke_at, traj.reason = t, "slope below -breaking_threshold"
            break
        uxx = op.uxx_sup(U) if cfg.curvature_guard else 0.0
        dt = _stable_dt(cfg, dx, float(np.max(np.abs(u))), float(np.max(np.abs(ux))), uxx)
        hit = False
        if t + dt >= target - 1e-13 * max(1.0, target):
            dt = target - t
            hit = True
        if dt < 1e-12 and not hit:
            traj.broke_at, traj.reason = t, "time step underflow"
            break
        Un = _rk4(op, U, dt, k1)
        if not np.all(np.isfinite(Un)):
            traj.broke_at, traj.reason = t, "non-finite state"
            break
        U = Un
        t = target if hit else t + dt
        steps += 1
        k1, u, ux = op.rhs(U)
        record = hit or (cfg.record_every and steps % cfg.record_every == 0)
        if record:
            st = SolverState(t, Field.from_spectrum(grid, U), dt, _diagnostics(grid, U, u, ux, cfg))
            states.append(st)
            if callback is not None:
                callback(st)
        if hit:
            mi += 1
        if steps >= cfg.max_steps:
            traj.broke_at, traj.reason = t, "max_steps reached"
            break
    traj.steps = steps
    return traj


# -- multipeakon ODE -------------------------------------------------------

@dataclass(frozen=True)
class PeakonState:
    p: np.ndarray
    q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=np.float64)).copy()
        q = np.atleast_1d(np.asarray(self.q, dtype=np.float64)).copy()
        if p.shape != q.shape or p.ndim != 1 or p.size < 1:
            raise ValueError("p and q must be equal-length non-empty vectors")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("peakon state must be finite")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


def multipeakon_rhs(state):
    """``(dp, dq)`` of the multipeakon system (``sign(0) = 0``)."""
    return peakon_rhs(state.p, state.q)


def integrate_peakons(state, t_end, dt=1e-3, record_every=0):
    """Fixed-step RK4 for the multipeakon ODE; the last step is shortened
    to land on ``t_end``.  Returns the list of recorded states (initial and
    final always included)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    p, q = np.array(state.p), np.array(state.q)
    t = state.t
    out = [state]
    nsteps = int(math.ceil((t_end - t) / dt - 1e-9))
    t0 = t
    for s in range(1, nsteps + 1):
        h = min(dt, t_end - t)
        a_p, a_q = peakon_rhs(p, q)
        b_p, b_q = peakon_rhs(p + 0.5 * h * a_p, q + 0.5 * h * a_q)
        c_p, c_q = peakon_rhs(p + 0.5 * h * b_p, q + 0.5 * h * b_q)
        d_p, d_q = peakon_rhs(p + h * c_p, q + h * c_q)
        p = p + (h / 6.0) * (a_p + 2 * b_p + 2 * c_p + d_p)
        q = q + (h / 6.0) * (a_q + 2 * b_q + 2 * c_q + d_q)
        t = t0 + s * dt if s < nsteps else t_end
        if s == nsteps or (record_every and s % record_every == 0):
            out.append(PeakonState(p, q, t))
    return out


def mollifier(grid, width):
    """Unit-mass C-infinity bump ``exp(-1/(1 - (x/w)^2))`` on the grid, centred at 0."""
    if width <= 0:
        raise ValueError("mollifier width must be positive")
    x = grid.x
    r = x / width
    b = np.zeros(grid.n)
    inside = np.abs(r) < 1
    b[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    if not b.any():
        raise ValueError("mollifier width below grid resolution")
    return b / (b.sum() * grid.dx)


def mollify(f, width):
    """Circular convolution of ``f`` with :func:`mollifier`."""
    grid = f.grid
    kern = mollifier(grid, width)
    # move the bump centre from x = 0 to index 0
    kern = np.roll(kern, -grid.n // 2)
    spec = f.spectrum * sfft.rfft(kern) * grid.dx
    return Field.from_spectrum(grid, spec, copy=False)


def peakon_field(state, grid, mollify_width=None, periodic=False):
    """Samples of ``sum_i p_i exp(-|x - q_i|)``.

    ``mollify_width`` (``None`` for raw, ``"default"`` for ``4 dx``) smooths the
    peaks.  With ``periodic`` the profile is summed over periodic images.
    """
    q = np.asarray(state.q)
    if np.any(q <= -grid.L) or np.any(q >= grid.L):
        raise ValueError("peakon positions must lie inside (-L, L)")
    period = 2.0 * grid.L if periodic else 0.0
    f = Field.from_samples(grid, peakon_sum(state.p, q, grid.x, period))
    if mollify_width is None:
        return f
    if mollify_width == "default":
        mollify_width = 4.0 * grid.dx
    return mollify(f, mollify_width)


def gaussian_bump(grid, amplitude=0.5, width=1.0, center=0.0):
    return Field.from_function(grid, lambda x: amplitude * np.exp(-((x - center) / width) ** 2))
