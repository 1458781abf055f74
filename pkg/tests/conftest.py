import numpy as np
import pytest

from besovch.grid import Field, make_grid


def band_limited(grid, rng, kmax=None, decay=0.0):
    """Random real field with modes ``0 .. kmax`` (inside the 2/3 band by default)."""
    kmax = kmax or grid.dealias_cutoff // 2 - 1
    spec = np.zeros(grid.n_modes, dtype=np.complex128)
    k = np.arange(kmax + 1)
    spec[: kmax + 1] = (rng.normal(size=kmax + 1) + 1j * rng.normal(size=kmax + 1)) / (1.0 + k) ** decay
    spec[0] = spec[0].real
    return Field.from_spectrum(grid, spec * grid.n / (kmax + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture(scope="session")
def corpus():
    """Twenty band-limited fields on varied grids."""
    r = np.random.default_rng(7)
    out = []
    for i in range(20):
        g = make_grid(float(r.choice([np.pi, 2 * np.pi, 10.0, 64 * np.pi])), int(2 ** r.integers(7, 12)))
        out.append(band_limited(g, r, decay=float(r.uniform(0, 2))))
    return out


@pytest.fixture(scope="session")
def static_report():
    """The static scaling ladder at its configured N, with its wall time."""
    import time
    from besovch.config import ExperimentConfig
    from besovch.counterexample import algebra_failure_experiment
    t0 = time.perf_counter()
    rep = algebra_failure_experiment(ExperimentConfig().static_n_list)
    return rep, time.perf_counter() - t0


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
