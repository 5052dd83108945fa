"""Wall-clock cost of creating global references with and without the purger."""

from __future__ import annotations

import gc
import math
import statistics
import time
from typing import Sequence

from .engine import Simulator
from .model import DEFAULT_PURGER_THRESHOLD, Call, NoDefense, Purger, SimConfig

REQUEST_GRID = (1, 10, 100, 1000, 6000, 10000, 48000)
ROW_LABELS = {"purger": "JGRE Purger", "none": "AOSP"}


BLOCK = 1000  # requests per interleaved slice in bench_pair


def _setup(n: int, policy: str):
    threshold = DEFAULT_PURGER_THRESHOLD
    pol = Purger(threshold) if policy == "purger" else NoDefense()
    sim = Simulator(SimConfig(jgr_capacity=n + 1, policy=pol, max_steps=n + 1))
    # Spread requests over enough apps that the purger never has to deny;
    # both policies see the same app sequence.
    apps = max(1, math.ceil(n / threshold))
    return sim.step, [Call(10000 + i % apps, "bench.create") for i in range(n)]


def _timed(step, calls) -> float:
    t0 = time.perf_counter()
    for c in calls:
        step(c)
    return time.perf_counter() - t0


def _one_run(n: int, policy: str) -> float:
    step, calls = _setup(n, policy)
    gc.collect()  # same heap state for every trial
    return _timed(step, calls)


def _paired_run(n: int) -> tuple[float, float]:
    """One trial of both policies, advanced in alternating slices of BLOCK
    requests so machine-level slowdowns hit both sides alike."""
    p_step, p_calls = _setup(n, "purger")
    a_step, a_calls = _setup(n, "none")
    gc.collect()
    p = a = 0.0
    for k, i in enumerate(range(0, n, BLOCK)):
        if k % 2 == 0:
            p += _timed(p_step, p_calls[i : i + BLOCK])
            a += _timed(a_step, a_calls[i : i + BLOCK])
        else:
            a += _timed(a_step, a_calls[i : i + BLOCK])
            p += _timed(p_step, p_calls[i : i + BLOCK])
    return p, a


def bench_creation(n: int, policy: str, trials: int = 5) -> float:
    """Median seconds for ``n`` creation steps; ``policy`` is ``none`` or ``purger``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if policy not in ROW_LABELS:
        raise ValueError(f"policy must be one of {sorted(ROW_LABELS)}")
    enabled = gc.isenabled()
    gc.disable()
    try:
        return statistics.median(_one_run(n, policy) for _ in range(trials))
    finally:
        if enabled:
            gc.enable()


def bench_pair(n: int, trials: int = 5) -> tuple[float, float, float]:
    """(purger, none) medians plus the median per-trial ratio purger/none."""
    enabled = gc.isenabled()
    gc.disable()
    try:
        _paired_run(min(n, BLOCK))  # warm-up
        runs = [_paired_run(n) for _ in range(trials)]
        p = [x for x, _ in runs]
        a = [y for _, y in runs]
        return statistics.median(p), statistics.median(a), statistics.median(x / y for x, y in runs)
    finally:
        if enabled:
            gc.enable()


def bench_grid(grid: Sequence[int] = REQUEST_GRID, trials: int = 5) -> dict[str, dict[int, float]]:
    out: dict[str, dict[int, float]] = {"purger": {}, "none": {}, "ratio": {}}
    for n in grid:
        p, a, ratio = bench_pair(n, trials)
        out["purger"][n] = p
        out["none"][n] = a
        out["ratio"][n] = ratio
    return out


def grid_csv(results: dict[str, dict[int, float]]) -> str:
    grid = sorted(results["none"])
    lines = ["Defense," + ",".join(str(n) for n in grid)]
    for key in ("purger", "none"):
        lines.append(ROW_LABELS[key] + "," + ",".join(f"{results[key][n]:.4f}" for n in grid))
    return "\n".join(lines) + "\n"


def overhead(results: dict[str, dict[int, float]], n: int) -> float:
    """Median relative overhead of the purger over the baseline at ``n``."""
    if "ratio" in results:
        return results["ratio"][n] - 1.0
    return results["purger"][n] / results["none"][n] - 1.0
