"""Process-level settings read from the environment."""
import os


def worker_count(default=None):
    """Worker cap from ``BESOVCH_THREADS`` (falls back to the CPU count)."""
    raw = os.environ.get("BESOVCH_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"BESOVCH_THREADS must be an integer, got {raw!r}")
        if n < 1:
            raise ValueError(f"BESOVCH_THREADS must be >= 1, got {n}")
        return n
    return default or os.cpu_count() or 1
