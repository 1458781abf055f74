"""Dynamic experiments: norm inflation along the CH flow, the linearized
early-time mechanism, the transported ``E`` residual, smooth controls, and
deterministic reporting.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
import csv
import hashlib
import io
import json
import math
import os
import time

import numpy as np
import scipy.fft as sfft

from . import __version__
from .besov import B0_INF_1, B1_INF_1, combine, h1_energy, weighted_blocks
from .config import ExperimentConfig, config_items, parse_config
from .counterexample import CounterexampleParams, build_E0, build_u0, fit_log2_slope
from .dynamics import SolveConfig, ch_rhs, gaussian_bump, solve
from .grid import GridSpec, derivative_symbol, helmholtz_inv_symbol, make_grid
from .littlewood_paley import BlockSupConfig, build_filter_bank, spectrum_block_sups
from .runtime import worker_count


def _b(spec_arr, bank, spec):
    sups = spectrum_block_sups(spec_arr, bank, cfg=BlockSupConfig())
    return combine(weighted_blocks(sups, spec), spec.r)


def field_norms(f, bank=None):
    """``(||u||_{B^1_{inf,1}}, ||u_x||_{B^0_{inf,1}}, ||u||_{C^{0,1}}, h1)``."""
    bank = bank or build_filter_bank(f.grid)
    U = np.asarray(f.spectrum)
    Ux = derivative_symbol(f.grid) * U
    ux = sfft.irfft(Ux, f.grid.n)
    lip = f.sup() + max(float(ux.max()), -float(ux.min()))
    return _b(U, bank, B1_INF_1), _b(Ux, bank, B0_INF_1), lip, h1_energy(f)


def t_bar(N):
    return 2.0 / math.sqrt(N)


def dynamic_params(N, cfg=None, extra=None):
    cfg = cfg or ExperimentConfig()
    extra = cfg.grid_extra if extra is None else extra
    return CounterexampleParams(N, L=math.pi / cfg.dyn_L_div, n=2 ** (N + 6 + extra))


def _solve_config(cfg, t_end, record_times):
    return SolveConfig(t_end=t_end, cfl=cfg.cfl, speed_floor=cfg.speed_floor,
                       breaking_threshold=cfg.breaking_threshold,
                       record_times=tuple(record_times))


# -- inflation ---------------------------------------------------------------

@dataclass(frozen=True)
class InflationRun:
    N: int
    T_bar: float
    L: float
    n: int
    history: tuple  # ((t, b1, ux_b0, lipschitz, h1), ...)
    amplification: float
    ux_growth_mid: float  # ||u_x||_{B^0_{inf,1}} at t = N^{-1/2} over its t = 0 value
    broke: bool
    reason: str
    steps: int
    max_tail: float = 0.0  # largest share of H^1 in the top third of retained modes

    def to_dict(self):
        d = asdict(self)
        d["history"] = [list(h) for h in self.history]
        return d


def evolve_with_norms(u0, t_end, record_times, cfg, N=0, mid=None):
    """Solve from ``u0`` and evaluate the norm history at every record."""
    bank = build_filter_bank(u0.grid)
    traj = solve(u0, _solve_config(cfg, t_end, record_times))
    hist = tuple((s.t,) + field_norms(s.u, bank) for s in traj.states)
    b0 = hist[0][1]
    amp = max(h[1] for h in hist) / b0 if b0 > 0 else 1.0
    growth = float("nan")
    if mid is not None:
        at = [h for h in hist if abs(h[0] - mid) <= 1e-12 * max(1.0, mid)]
        if at and hist[0][2] > 0:
            growth = at[0][2] / hist[0][2]
    g = u0.grid
    tail = max(s.diagnostics.get("tail", 0.0) for s in traj.states)
    return InflationRun(N, t_end, g.L, g.n, hist, amp, growth,
                        traj.broke_at is not None, traj.reason, traj.steps, tail)


def inflation_experiment(N, cfg=None):
    """Evolve ``u0(N)`` over ``[0, 2 N^{-1/2}]`` recording the Besov diagnostics.

    Records fall on ``cfg.records`` equal subintervals plus ``t = N^{-1/2}``.
    """
    cfg = cfg or ExperimentConfig()
    T = t_bar(N)
    mid = 1.0 / math.sqrt(N)
    rec = sorted({T * i / cfg.records for i in range(1, cfg.records)} | {mid})
    u0 = build_u0(dynamic_params(N, cfg, cfg.ladder_grid_extra))
    return evolve_with_norms(u0, T, rec, cfg, N, mid)


def control_run(N, cfg=None):
    """Smooth bump evolved over the same window ``[0, 2 N^{-1/2}]`` as ``u0(N)``."""
    cfg = cfg or ExperimentConfig()
    g = make_grid(cfg.control_L, cfg.control_n)
    u0 = gaussian_bump(g, cfg.control_amp, cfg.control_width)
    T = t_bar(N)
    mid = 1.0 / math.sqrt(N)
    rec = sorted({T * i / cfg.records for i in range(1, cfg.records)} | {mid})
    return evolve_with_norms(u0, T, rec, cfg, N, mid)


def no_inflation_experiment(amp=None, width=None, cfg=None):
    """Bump of amplitude ``amp`` and width ``width`` over ``T = f / (4 ||u0||_{C^{0,1}})``
    with ``f = cfg.window_factor``.  ``K`` is the largest ``||u(t)||_{B^1_{inf,1}}``
    relative to ``t = 0`` (1 for zero data).
    """
    cfg = cfg or ExperimentConfig()
    amp = cfg.control_amp if amp is None else amp
    width = cfg.control_width if width is None else width
    g = make_grid(cfg.control_L, cfg.control_n)
    u0 = gaussian_bump(g, amp, width)
    b1, _, lip, _ = field_norms(u0)
    if lip == 0.0:
        return {"amp": amp, "width": width, "window": 0.0, "K": 1.0, "broke": False,
                "history": [[0.0, 0.0, 0.0, 0.0, 0.0]], "b1_u0": 0.0}
    T = cfg.window_factor / (4.0 * lip)
    rec = [T * i / cfg.records for i in range(1, cfg.records)]
    run = evolve_with_norms(u0, T, rec, cfg)
    return {"amp": amp, "width": width, "window": T, "K": run.amplification,
            "broke": run.broke, "history": [list(h) for h in run.history], "b1_u0": b1}


def inflation_ladder(cfg=None):
    """Inflation and control runs over ``cfg.n_list`` with the trend checks."""
    cfg = cfg or ExperimentConfig()
    Ns = sorted(cfg.n_list)
    workers = worker_count()
    if workers > 1 and len(Ns) > 1:
        # independent runs; results come back in N order
        with ThreadPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(lambda N: inflation_experiment(N, cfg), Ns))
            controls = list(ex.map(lambda N: control_run(N, cfg), Ns))
    else:
        runs = [inflation_experiment(N, cfg) for N in Ns]
        controls = [control_run(N, cfg) for N in Ns]
    amps = [r.amplification for r in runs]
    return {
        "runs": [r.to_dict() for r in runs],
        "controls": [c.to_dict() for c in controls],
        "amplification": amps,
        "control_amplification": [c.amplification for c in controls],
        "strictly_increasing": all(b > a for a, b in zip(amps, amps[1:])),
        "separated": all(r.amplification > c.amplification for r, c in zip(runs, controls)),
    }


# -- early-time linearization --------------------------------------------------

def _b1(f, bank):
    return _b(np.asarray(f.spectrum), bank, B1_INF_1)


def linearization_from(u0, t_list, cfg=None):
    """``r(t) = ||u(t) - u0 - t E0||_{B^1_{inf,1}} / (t ||E0||_{B^1_{inf,1}})``.

    Also returns ``r_full(t)``, the same ratio with ``t E0`` replaced by the full
    first-order term ``t F(u0)`` (``F`` the CH right-hand side), which includes
    the transport ``-u0 u0_x`` that the Lagrangian description removes.
    """
    cfg = cfg or ExperimentConfig()
    ts = sorted(float(t) for t in t_list)
    grid = u0.grid
    bank = build_filter_bank(grid)
    E0 = build_E0(u0)
    F0 = ch_rhs(u0)
    e_norm = _b1(E0, bank)
    traj = solve(u0, _solve_config(cfg, ts[-1], ts[:-1]))
    if traj.broke_at is not None:
        raise FloatingPointError(f"breaking at t={traj.broke_at:.4g} inside the linearization times")
    U0 = np.asarray(u0.spectrum)
    rows = []
    for s in traj.states[1:]:
        dU = np.asarray(s.u.spectrum) - U0
        num = _b(dU - s.t * np.asarray(E0.spectrum), bank, B1_INF_1)
        num_full = _b(dU - s.t * np.asarray(F0.spectrum), bank, B1_INF_1)
        den = s.t * e_norm
        rows.append({"t": s.t, "r": num / den if den > 0 else 0.0,
                     "r_full": num_full / den if den > 0 else 0.0, "defect": num})
    rs = [row["r"] for row in rows]
    rf = [row["r_full"] for row in rows]
    return {
        "E0_b1": e_norm,
        "rows": rows,
        "r_decreasing_as_t_decreases": all(a < b for a, b in zip(rs, rs[1:])),
        "r_full_decreasing_as_t_decreases": all(a < b for a, b in zip(rf, rf[1:])),
    }


def early_time_linearization(N, t_list, cfg=None):
    cfg = cfg or ExperimentConfig()
    out = linearization_from(build_u0(dynamic_params(N, cfg)), t_list, cfg)
    out["N"] = N
    return out


# -- transported E residual ----------------------------------------------------

class _Padded:
    """Alias-free cubic products: fields are lifted to a grid with ``2n`` points."""

    def __init__(self, grid):
        self.grid = grid
        self.pgrid = GridSpec(grid.L, 2 * grid.n)
        self.ik = derivative_symbol(self.pgrid)
        self.H = helmholtz_inv_symbol(self.pgrid)
        self.N = self.pgrid.n

    def lift(self, U):
        P = np.zeros(self.pgrid.n_modes, dtype=np.complex128)
        # the top original mode is the unpaired Nyquist one: split it symmetrically
        P[:len(U) - 1] = 2.0 * U[:-1]
        P[len(U) - 1] = U[-1]
        return P

    def phys(self, P):
        return sfft.irfft(P, self.N)

    def spec(self, v):
        return sfft.rfft(v)

    def E(self, u, ux):
        """``-(1 - d_xx)^{-1} d_x (u_x^2 / 2)``."""
        return -self.H * self.ik * self.spec(0.5 * ux * ux)

    def G(self, u, ux):
        H, ik, ph, sp = self.H, self.ik, self.phys, self.spec
        Hf = ph(H * sp(u * u + 0.5 * ux * ux))
        inner = u ** 3 / 3.0 - 0.5 * u * ux * ux - ph(ik * sp(ux * Hf))
        return sp(u ** 3 / 3.0 - u * ph(H * sp(0.5 * ux * ux))) - H * sp(inner)


@dataclass(frozen=True)
class TransportResidual:
    t: float
    tau: float
    residual_norm: float
    relative: float      # residual over ||u E_x - G||_{B^0_{inf,1}}
    g_b1: float
    g_ratio: float       # ||G||_{B^1_{inf,1}} / (||u||_{C^{0,1}}^2 ||u||_{B^1_{inf,1}})


def transport_residual_from(u0, centres, taus, cfg=None):
    """Residual of ``E_t + u E_x = G`` with ``E_t`` by centred differences.

    For every centre ``t`` and step ``tau`` the solver records ``t - tau`` and
    ``t + tau`` exactly.  Returns the residual records and the fitted order
    ``d log(residual) / d log(tau)`` per centre.
    """
    cfg = cfg or ExperimentConfig()
    centres = sorted(float(c) for c in centres)
    taus = sorted((float(t) for t in taus), reverse=True)
    if taus[0] >= centres[0]:
        raise ValueError("every tau must be smaller than the first centre")
    grid = u0.grid
    pad = _Padded(grid)
    pbank = build_filter_bank(pad.pgrid)
    bank = build_filter_bank(grid)
    times = sorted({c + s * t for c in centres for t in taus for s in (-1.0, 1.0)} | set(centres))
    traj = solve(u0, _solve_config(cfg, times[-1], times[:-1]))
    if traj.broke_at is not None:
        raise FloatingPointError(f"breaking at t={traj.broke_at:.4g} before the residual window ends")
    by_t = {s.t: s.u for s in traj.states}

    def lifted(t):
        P = pad.lift(np.asarray(_at(by_t, t).spectrum))
        return pad.phys(P), pad.phys(pad.ik * P)

    out = []
    orders = []
    for c in centres:
        u, ux = lifted(c)
        E = pad.E(u, ux)
        G = pad.G(u, ux)
        uEx = pad.spec(u * pad.phys(pad.ik * E))
        base = uEx - G
        scale = _b(base, pbank, B0_INF_1)
        f = _at(by_t, c)
        b1, _, lip, _ = field_norms(f, bank)
        g_b1 = _b(G, pbank, B1_INF_1)
        g_ratio = g_b1 / (lip * lip * b1) if b1 > 0 and lip > 0 else 0.0
        res = []
        for tau in taus:
            Ep = pad.E(*lifted(c + tau))
            Em = pad.E(*lifted(c - tau))
            R = (Ep - Em) / (2.0 * tau) + base
            r = _b(R, pbank, B0_INF_1)
            res.append(r)
            out.append(TransportResidual(c, tau, r, r / scale if scale > 0 else 0.0, g_b1, g_ratio))
        if len(taus) >= 2 and min(res) > 0:
            orders.append(float(np.polyfit(np.log(taus), np.log(res), 1)[0]))
        else:
            orders.append(float("nan"))
    return out, orders


def _at(by_t, t):
    for k, v in by_t.items():
        if abs(k - t) <= 1e-12 * max(1.0, abs(t)):
            return v
    raise KeyError(f"no record at t={t!r}")


def e_transport_residual(N, cfg=None):
    cfg = cfg or ExperimentConfig()
    u0 = build_u0(dynamic_params(N, cfg))
    rows, orders = transport_residual_from(u0, cfg.residual_centres, cfg.residual_tau, cfg)
    ratios = [r.g_ratio for r in rows if r.tau == rows[0].tau]
    finite = [o for o in orders if np.isfinite(o)]
    return {
        "N": N,
        "rows": [asdict(r) for r in rows],
        "orders": orders,
        "min_order": min(finite) if finite else float("nan"),
        "coarse_flag": not finite or min(finite) < 1.8,
        "g_ratio": ratios,
        "g_ratio_spread": max(ratios) / min(ratios) if ratios and min(ratios) > 0 else float("inf"),
    }


# -- manifests and reports ---------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    code_version: str
    grids: list
    wall_time: float
    outputs: list

    def to_dict(self):
        return asdict(self)


def run_manifest(cfg, command, grids=(), wall_time=0.0, outputs=()):
    return RunManifest(command, dict(config_items(cfg)), __version__, [list(g) for g in grids],
                       float(wall_time), sorted(outputs))


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_json(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, repr(obj) if isinstance(obj, float) else obj))


def report_csv(report):
    rows = []
    _flatten("", _clean(report), rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def emit_report(report, fmt, path):
    """Write ``report`` as ``json`` or ``csv`` to ``path``; returns the SHA-256."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r} (json or csv)")
    d = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(manifest, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(_clean(manifest.to_dict()), sort_keys=True, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write manifest {path}: {exc}") from exc


def load_manifest(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    return RunManifest(**d)


def manifest_config(manifest):
    """Rebuild the :class:`ExperimentConfig` echoed in a manifest."""
    cfg = ExperimentConfig()
    lines = []
    for k, v in manifest.config.items():
        if isinstance(v, list):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} = {v}")
    return parse_config("\n".join(lines), cfg)


def replay_inflation(manifest, N):
    """Re-run the inflation experiment of ``N`` under the manifest's config."""
    return inflation_experiment(N, manifest_config(manifest))


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False


def scaling_summary(Ns, values):
    slope, intercept, rms = fit_log2_slope(Ns, values)
    return {"slope": slope, "intercept": intercept, "rms": rms}
