"""Worker-count policy shared by the FFT and Monte Carlo code."""

import os

ENV_VAR = "GRAPHWAVE_THREADS"


def worker_count() -> int:
    """Workers allowed by ``GRAPHWAVE_THREADS`` (default: CPU count)."""
    raw = os.environ.get(ENV_VAR)
    cpus = os.cpu_count() or 1
    if raw is None:
        return cpus
    try:
        n = int(raw)
    except ValueError:
        return cpus
    return max(1, n)
