"""Besov, logarithmic Besov, Lipschitz and H^1 functionals."""
from dataclasses import dataclass
import math

import numpy as np

from .grid import derivative
from .littlewood_paley import block_norms, build_filter_bank

_ALLOWED = {1: 1, 2: 2, np.inf: np.inf, "inf": np.inf, float("inf"): np.inf}


def _index(v, name):
    if isinstance(v, str):
        v = v.strip().lower()
        v = float("inf") if v in ("inf", "infinity") else float(v)
    if v not in _ALLOWED:
        raise ValueError(f"{name}={v!r} not implemented (use 1, 2 or inf)")
    return _ALLOWED[v]


@dataclass(frozen=True)
class BesovSpec:
    """Which norm to evaluate.

    ``log_weight`` selects ``sup_j max(j, 1) 2^{js} ||Delta_j f||_p`` and
    requires ``r = inf``.
    """

    s: float = 0.0
    p: float = np.inf
    r: float = 1
    log_weight: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p", _index(self.p, "p"))
        object.__setattr__(self, "r", _index(self.r, "r"))
        if self.log_weight and self.r != np.inf:
            raise ValueError("log_weight requires r = inf")


B0_INF_1 = BesovSpec(0.0, np.inf, 1)
B1_INF_1 = BesovSpec(1.0, np.inf, 1)
B1_LOG = BesovSpec(1.0, np.inf, np.inf, log_weight=True)
B0_LOG = BesovSpec(0.0, np.inf, np.inf, log_weight=True)


@dataclass(frozen=True)
class NormReport:
    value: float
    per_block: tuple  # ((j, weighted contribution), ...)

    def to_dict(self):
        return {"value": self.value, "per_block": [[j, c] for j, c in self.per_block]}


def combine(contribs, r):
    c = np.array([v for _, v in contribs], dtype=np.float64)
    if c.size == 0:
        return 0.0
    if r == np.inf:
        return float(c.max())
    if r == 1:
        return float(math.fsum(c))
    return math.sqrt(math.fsum(c * c))


def weighted_blocks(norms, spec):
    out = []
    for j in sorted(norms):
        w = 2.0 ** (j * spec.s)
        if spec.log_weight:
            w *= max(j, 1)
        out.append((j, w * norms[j]))
    return tuple(out)


def besov_norm(f, spec=B0_INF_1, bank=None, cfg=None):
    """``||f||_{B^s_{p,r}}`` (or the log-weighted variant) as a :class:`NormReport`."""
    bank = bank or build_filter_bank(f.grid)
    norms = block_norms(f, spec.p, bank, cfg=cfg)
    per = weighted_blocks(norms, spec)
    return NormReport(combine(per, spec.r), per)


def besov_value(f, spec=B0_INF_1, bank=None, cfg=None):
    return besov_norm(f, spec, bank, cfg).value


def lipschitz_norm(f):
    """``||f||_inf + ||f_x||_inf`` on grid samples."""
    return f.sup() + derivative(f).sup()


def h1_energy(f):
    """``int f^2 + f_x^2 dx`` evaluated exactly from the spectrum.

    The derivative is the spectral one, whose Nyquist mode is zero.
    """
    g = f.grid
    a2 = np.abs(f.spectrum) ** 2
    xi = g.xi
    w = np.full(g.n_modes, 2.0) * (1.0 + xi * xi)
    w[0] = 1.0
    w[-1] = 1.0
    return g.dx * float(np.dot(w, a2)) / g.n
