"""Single-threaded wall-clock comparison of enumeration (SOPA) against dense (FOPA) scoring."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass
from typing import Callable, Optional

from threadpoolctl import threadpool_limits

from ..autodiff import Tensor, no_grad
from ..models import FopaModel, SopaModel
from ..scene import Background, ForegroundObject, Placement, composite_array
from ..training.loops import network_inputs
from .flops import count_flops
from .predict import sopa_enumerate_map

MB = 2**20


@dataclass
class BenchReport:
    method: str
    time_single_s: float
    time_all_s: float
    flops_per_map: int
    param_memory_mb: float
    passes_per_map: int
    time_all_measured_s: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def median_time(fn: Callable[[], object], reps: int = 10, warmup: int = 3) -> float:
    """Median wall time of ``fn`` over ``reps`` calls after ``warmup`` discarded calls."""
    if reps < 1:
        raise ValueError("need at least one repetition")
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times)


def param_memory_mb(model) -> float:
    return sum(p.data.nbytes for p in model.parameters()) / MB


def bench_sopa(
    sopa: SopaModel,
    bg: Background,
    fg: ForegroundObject,
    scale: float,
    reps: int = 10,
    warmup: int = 3,
    measure_enumeration: bool = True,
) -> BenchReport:
    H = sopa.cfg.size
    x = Tensor(composite_array(bg, fg, Placement(scale, H // 2, H // 2), H)[None])

    def one():
        with no_grad():
            sopa(x)

    with threadpool_limits(limits=1):
        t_single = median_time(one, reps, warmup)
        measured = None
        if measure_enumeration:
            sopa.reset_passes()
            t = time.perf_counter()
            sopa_enumerate_map(bg, fg, scale, sopa)
            measured = time.perf_counter() - t
            if sopa.passes != H * H:
                raise RuntimeError(f"enumeration issued {sopa.passes} passes, expected {H * H}")
    fl = count_flops(sopa.cfg, "sopa")
    return BenchReport("SOPA", t_single, t_single * H * H, fl.per_map, param_memory_mb(sopa), H * H, measured)


def bench_fopa(
    fopa: FopaModel, bg: Background, fg: ForegroundObject, scale: float, reps: int = 10, warmup: int = 3
) -> BenchReport:
    f, b, hot = network_inputs(bg, fg, scale, fopa.cfg)
    args = (Tensor(f[None]), Tensor(b[None]), None if hot is None else hot[None])

    def one():
        with no_grad():
            fopa(*args)

    with threadpool_limits(limits=1):
        fopa.reset_passes()
        one()
        if fopa.passes != 1:
            raise RuntimeError(f"dense scoring issued {fopa.passes} passes, expected 1")
        t_single = median_time(one, reps, warmup)
    fl = count_flops(fopa.cfg, "fopa")
    return BenchReport("FOPA", t_single, t_single, fl.per_map, param_memory_mb(fopa), 1, t_single)


def benchmark(
    sopa: SopaModel,
    fopa: FopaModel,
    bg: Background,
    fg: ForegroundObject,
    scale: float,
    reps: int = 10,
    warmup: int = 3,
    measure_enumeration: bool = True,
) -> tuple[BenchReport, BenchReport]:
    if reps < 10:
        raise ValueError("benchmarks need at least 10 repetitions")
    return (
        bench_sopa(sopa, bg, fg, scale, reps, warmup, measure_enumeration),
        bench_fopa(fopa, bg, fg, scale, reps, warmup),
    )


def speedup(sopa: BenchReport, fopa: BenchReport, measured: bool = True) -> float:
    num = sopa.time_all_measured_s if measured and sopa.time_all_measured_s is not None else sopa.time_all_s
    return num / fopa.time_all_s


def enumeration_agreement(sopa: BenchReport) -> float:
    """Relative gap between computed and directly measured enumeration Time-a."""
    if sopa.time_all_measured_s is None:
        return float("nan")
    return abs(sopa.time_all_s - sopa.time_all_measured_s) / sopa.time_all_measured_s
