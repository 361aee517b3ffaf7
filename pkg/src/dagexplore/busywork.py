"""Calibrated CPU burner for synthetic workloads.

The burn must hold a core without holding the GIL, or worker threads cannot
scale with processor count; ``hashlib.pbkdf2_hmac`` releases the GIL for the
duration of the call, unlike a pure-Python spin loop. ``time.sleep`` would
scale perfectly but exercises no CPU, which defeats the benchmark.
"""

from __future__ import annotations

import hashlib
import threading
import time

_TARGET_CHUNK_NS = 100_000  # ~0.1 ms per hash call keeps burn granularity fine
_calibration_lock = threading.Lock()
_iters_per_chunk: int | None = None


def _spin(iterations: int) -> None:
    hashlib.pbkdf2_hmac("sha256", b"dagexplore", b"busywork", iterations)


def _calibrate() -> int:
    global _iters_per_chunk
    with _calibration_lock:
        if _iters_per_chunk is None:
            iterations = 1024
            while True:
                start = time.perf_counter_ns()
                _spin(iterations)
                elapsed = max(time.perf_counter_ns() - start, 1)
                if elapsed >= _TARGET_CHUNK_NS // 4:
                    break
                iterations *= 4
            _iters_per_chunk = max(1, iterations * _TARGET_CHUNK_NS // elapsed)
        return _iters_per_chunk


def burn(duration_ns: int) -> int:
    """Occupy the CPU for roughly ``duration_ns``; returns the elapsed time."""
    start = time.perf_counter_ns()
    if duration_ns <= 0:
        return 0
    chunk = _calibrate()
    while True:
        elapsed = time.perf_counter_ns() - start
        if elapsed >= duration_ns:
            return elapsed
        # Shrink the final chunk so short targets do not overshoot badly.
        fraction = min(1.0, (duration_ns - elapsed) / _TARGET_CHUNK_NS)
        _spin(max(1, int(chunk * fraction)))


__all__ = ["burn"]
