"""Timing utilities and the resolution sweep behind ``lutforge bench``."""

import hashlib
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import resolve_threads, run_pipeline
from .lut import COLOR_RANGE, PARAM_RANGE, Lut3D, identity_lut
from .synth import value_noise

DEFAULT_RESOLUTIONS = ((640, 480), (1920, 1080), (3840, 2160))
RESOLUTION_NAMES = {(640, 480): "480P", (1920, 1080): "1080P", (3840, 2160): "4K"}
# published GPU timings (ms) of the reference implementation, for side-by-side display only
REFERENCE_GPU_MS = {(640, 480): 6.3, (1920, 1080): 6.6, (3840, 2160): 19.8}
SUPERLINEAR_FACTOR = 1.3


@dataclass
class TimingStats:
    min: float
    median: float
    mean: float
    stddev: float
    repeat: int

    def to_dict(self):
        return asdict(self)


def measure(fn, warmup=3, repeat=100):
    """Time ``fn()`` ``repeat`` times after ``warmup`` discarded calls; milliseconds."""
    if repeat < 1:
        raise ValueError(f"repeat must be >= 1, got {repeat}")
    if warmup < 0:
        raise ValueError(f"warmup must be >= 0, got {warmup}")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1e3)
    return TimingStats(
        min=min(samples),
        median=statistics.median(samples),
        mean=statistics.fmean(samples),
        stddev=statistics.pstdev(samples) if repeat > 1 else 0.0,
        repeat=repeat,
    )


def scaling_check(samples, factor=SUPERLINEAR_FACTOR):
    """Compare time growth with pixel-count growth relative to the smallest case.

    Args:
        samples: mapping of label -> (pixel_count, median_ms).

    Returns:
        dict with one entry per label holding ``pixel_ratio``, ``time_ratio``,
        ``normalized`` (time_ratio / pixel_ratio) and ``superlinear``, plus
        ``ok`` which is False if any entry exceeds ``factor``.
    """
    items = sorted(samples.items(), key=lambda kv: kv[1][0])
    base_px, base_ms = items[0][1]
    report = {}
    for label, (px, ms) in items:
        pixel_ratio = px / base_px
        time_ratio = ms / base_ms
        normalized = time_ratio / pixel_ratio
        report[label] = {
            "pixel_ratio": pixel_ratio,
            "time_ratio": time_ratio,
            "normalized": normalized,
            "superlinear": normalized > factor,
        }
    return {"factor": factor, "ok": not any(r["superlinear"] for r in report.values()), "ratios": report}


def bench_tables(seed=0):
    """Fixed pseudo-random LLUT (size 9) and NLUT (size 17) used for timing."""
    rng = np.random.default_rng(seed)
    llut = Lut3D(rng.uniform(-0.5, 0.5, (3, 9, 9, 9)), PARAM_RANGE)
    base = identity_lut(17, COLOR_RANGE).table
    nlut = Lut3D(np.clip(base + rng.normal(0.0, 0.01, base.shape), 0.0, 1.0), COLOR_RANGE)
    return llut, nlut


def parse_resolutions(text):
    out = []
    for item in text.split(","):
        try:
            w, h = (int(v) for v in item.lower().strip().split("x"))
        except ValueError:
            raise ValueError(f"bad resolution {item!r}; expected WIDTHxHEIGHT") from None
        if w < 1 or h < 1:
            raise ValueError(f"bad resolution {item!r}")
        out.append((w, h))
    return out


def run_bench(resolutions=DEFAULT_RESOLUTIONS, repeat=100, warmup=3, threads=None, steps=8, seed=0):
    """Time the fused enhance pass at each resolution.

    Returns a JSON-ready dict with per-resolution statistics, throughput,
    a digest of the produced image bytes, and the scaling analysis.
    """
    llut, nlut = bench_tables(seed)
    threads = resolve_threads(threads)
    rows = []
    for w, h in resolutions:
        img = value_noise(h, w, seed=seed) * 0.25
        m = np.ones_like(img)
        result = {}

        def run():
            result["out"] = run_pipeline(img, llut, nlut, m, n=steps, threads=threads)[1]

        stats = measure(run, warmup=warmup, repeat=repeat)
        digest = hashlib.sha256(np.ascontiguousarray(result["out"]).tobytes()).hexdigest()
        rows.append({
            "resolution": f"{w}x{h}",
            "name": RESOLUTION_NAMES.get((w, h), f"{w}x{h}"),
            "pixels": w * h,
            "timing_ms": stats.to_dict(),
            "megapixels_per_second": w * h / (stats.median / 1e3) / 1e6,
            "reference_gpu_ms": REFERENCE_GPU_MS.get((w, h)),
            "output_sha256": digest,
        })
    scaling = scaling_check({r["resolution"]: (r["pixels"], r["timing_ms"]["median"]) for r in rows})
    return {"threads": threads, "steps": steps, "repeat": repeat, "warmup": warmup,
            "results": rows, "scaling": scaling}


def format_table(report):
    header = f"{'Resolution':<12}{'min':>10}{'median':>10}{'mean':>10}{'MP/s':>10}{'ref GPU':>10}"
    lines = ["Runtime (ms) of the enhance pass", header, "-" * len(header)]
    for r in report["results"]:
        t = r["timing_ms"]
        ref = "-" if r["reference_gpu_ms"] is None else f"{r['reference_gpu_ms']:.1f}"
        lines.append(f"{r['resolution']:<12}{t['min']:>10.1f}{t['median']:>10.1f}{t['mean']:>10.1f}"
                     f"{r['megapixels_per_second']:>10.1f}{ref:>10}")
    verdict = "linear" if report["scaling"]["ok"] else "SUPER-LINEAR"
    lines.append(f"scaling vs pixel count: {verdict} (threshold x{report['scaling']['factor']})")
    return "\n".join(lines)
