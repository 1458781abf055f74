"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored.  Every key must be known; values
are parsed according to the type of the default.  Lists are comma separated.
"""
from dataclasses import dataclass, fields, replace
import math


class ConfigError(ValueError):
    """Bad configuration; ``key`` names the offending entry (or ``None``)."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key {key!r}: {message}" if key else message)


@dataclass(frozen=True)
class ExperimentConfig:
    # dynamic runs: torus [-L, L) with L = pi / dyn_L_div, n = 2^(N + 6 + grid_extra)
    n_list: tuple = (8, 10, 12)
    dyn_L_div: int = 8
    grid_extra: int = 1
    # inflation ladder only; N = 12 at grid_extra 1 does not fit a 30 min budget on one core
    ladder_grid_extra: int = 0
    cfl: float = 0.4
    speed_floor: float = 0.0
    breaking_threshold: float = 1e3
    records: int = 16
    # static scaling on L = pi with n = 2^(N + 9)
    static_n_list: tuple = (10, 12, 14, 16, 18)
    snh_n_list: tuple = (8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18)
    # smooth bump runs
    control_amp: float = 0.5
    control_width: float = 1.0
    control_L: float = 8.0 * math.pi
    control_n: int = 4096
    window_factor: float = 1.0
    # early-time linearization and transported-E residual
    linearize_n: int = 10
    linearize_t: tuple = (1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3, 3.2e-3)
    residual_n: int = 10
    residual_centres: tuple = (0.05, 0.1, 0.15)
    residual_tau: tuple = (4e-3, 2e-3, 1e-3)
    outdir: str = "besovch_out"


_LISTS = {"n_list": int, "static_n_list": int, "snh_n_list": int,
          "linearize_t": float, "residual_centres": float, "residual_tau": float}


def _convert(key, raw, default):
    raw = raw.strip()
    try:
        if key in _LISTS:
            items = [s for s in (p.strip() for p in raw.split(",")) if s]
            if not items:
                raise ValueError("empty list")
            return tuple(_LISTS[key](_num(s, _LISTS[key])) for s in items)
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(default, int):
            return _num(raw, int)
        if isinstance(default, float):
            v = float(raw)
            if math.isnan(v):
                raise ValueError("nan")
            return v
        return raw
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None


def _num(s, kind):
    if kind is int:
        v = float(s)
        if v != int(v):
            raise ValueError(f"not an integer: {s!r}")
        return int(v)
    return float(s)


def _validate(cfg):
    checks = [
        ("cfl", 0.0 < cfg.cfl <= 1.0, "must lie in (0, 1]"),
        ("grid_extra", cfg.grid_extra >= 0, "must be >= 0"),
        ("ladder_grid_extra", cfg.ladder_grid_extra >= 0, "must be >= 0"),
        ("dyn_L_div", cfg.dyn_L_div >= 1, "must be >= 1"),
        ("records", cfg.records >= 1, "must be >= 1"),
        ("speed_floor", cfg.speed_floor >= 0, "must be >= 0"),
        ("breaking_threshold", cfg.breaking_threshold > 0, "must be positive"),
        ("control_width", cfg.control_width > 0, "must be positive"),
        ("control_L", cfg.control_L > 0, "must be positive"),
        ("window_factor", cfg.window_factor > 0, "must be positive"),
        ("n_list", all(N >= 1 for N in cfg.n_list), "entries must be >= 1"),
        ("linearize_t", all(t > 0 for t in cfg.linearize_t), "times must be positive"),
        ("residual_tau", all(t > 0 for t in cfg.residual_tau), "steps must be positive"),
    ]
    n = cfg.control_n
    checks.append(("control_n", n >= 16 and n & (n - 1) == 0, "must be a power of two >= 16"))
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(key, msg)
    return cfg


def parse_config(text, base=None):
    """Parse config text on top of ``base`` (defaults when ``None``)."""
    base = base or ExperimentConfig()
    known = {f.name: getattr(base, f.name) for f in fields(base)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(key, f"unknown key (line {lineno})")
        if key in updates:
            raise ConfigError(key, f"given twice (line {lineno})")
        updates[key] = _convert(key, raw, known[key])
    return _validate(replace(base, **updates))


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def config_items(cfg):
    """Sorted ``(key, value)`` pairs, lists rendered as plain lists."""
    out = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        v = getattr(cfg, f.name)
        out.append((f.name, list(v) if isinstance(v, tuple) else v))
    return out


def dump_config(cfg):
    lines = []
    for k, v in config_items(cfg):
        if isinstance(v, list):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def config_help():
    """One line per key with its default, for ``--help``."""
    return "\n".join(f"  {k} = {v}" for k, v in config_items(ExperimentConfig()))
