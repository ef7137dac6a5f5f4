"""Wall-clock scaling of the fast transform.

Times the two stages of :func:`sst_fast` separately over a list of
bandlimits and fits ``log t = slope * log L + c`` to each.  The test signal
has real and imaginary parts drawn uniformly on ``(0, 1)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .slepian import zonal_basis
from .sphere import HarmonicCoefficients
from .sst import compute_C, sst_from_C

__all__ = ["BenchRow", "BenchReport", "loglog_slope", "run_bench", "bench_bandlimits"]

BENCH_CAP_DEG = 40.0


@dataclass(frozen=True)
class BenchRow:
    L: int
    t_C: float
    t_fft: float
    t_total: float


@dataclass(frozen=True)
class BenchReport:
    rows: list = field(default_factory=list)
    slope_C: float = float("nan")
    slope_fft: float = float("nan")
    slope_total: float = float("nan")

    def to_csv(self) -> str:
        lines = ["L,t_C,t_fft,t_total"]
        lines += [f"{r.L},{r.t_C!r},{r.t_fft!r},{r.t_total!r}" for r in self.rows]
        lines.append(f"slope,{self.slope_C!r},{self.slope_fft!r},{self.slope_total!r}")
        return "\n".join(lines) + "\n"


def loglog_slope(Ls, times) -> float:
    """Least-squares slope of ``log(times)`` against ``log(Ls)``."""
    Ls = np.asarray(Ls, dtype=float)
    times = np.asarray(times, dtype=float)
    if Ls.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(Ls), np.log(times), 1)[0])


def bench_bandlimits(lmin, lmax):
    """Powers of two from ``lmin`` to ``lmax`` inclusive."""
    if lmin < 1 or lmax < lmin:
        raise ValueError("need 1 <= lmin <= lmax")
    out, L = [], lmin
    while L <= lmax:
        out.append(L)
        L *= 2
    return out


def _best(fn, repeats):
    best, result = math.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def run_bench(Ls, seed, repeats=3, workers=1, max_repeat_L=64) -> BenchReport:
    """Best-of-``repeats`` timings per bandlimit (one run above ``max_repeat_L``).

    A zonal cap basis is used because its construction is cheap at every
    bandlimit; the cost of :func:`compute_C` does not depend on the basis.
    """
    Ls = [int(L) for L in Ls]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError("bandlimits must increase monotonically")
    rng = np.random.default_rng(seed)
    # compile and warm caches outside the timed region
    warm = zonal_basis(math.radians(BENCH_CAP_DEG), 4)
    sst_from_C(compute_C(HarmonicCoefficients(4, np.ones(16, complex)), warm, 1, workers))
    rows = []
    for L in Ls:
        basis = zonal_basis(math.radians(BENCH_CAP_DEG), L)
        f = HarmonicCoefficients(L, rng.random(L * L) + 1j * rng.random(L * L))
        reps = repeats if L <= max_repeat_L else 1
        t_C, cube = _best(partial(compute_C, f, basis, 1, workers), reps)
        t_fft, _ = _best(partial(sst_from_C, cube), reps)
        rows.append(BenchRow(L, t_C, t_fft, t_C + t_fft))
        del cube
    return BenchReport(
        rows,
        loglog_slope(Ls, [r.t_C for r in rows]),
        loglog_slope(Ls, [r.t_fft for r in rows]),
        loglog_slope(Ls, [r.t_total for r in rows]),
    )
