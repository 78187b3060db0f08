# robustHorseshoe/scripts/bench_rbhs.py
"""Timing run: RBHS at n=200, p=600, 10,000 iterations, single thread.

usage: python -m robustHorseshoe.scripts.bench_rbhs [out_dir] [iters]
"""
from __future__ import annotations
import os, time, logging
from pathlib import Path
from typing import Dict

import numpy as np

from robustHorseshoe import __version__
from robustHorseshoe.services.distributions import ErrorKind
from robustHorseshoe.services.gibbs import run_chain
from robustHorseshoe.services.model import SamplerSpec
from robustHorseshoe.services.simulate import SimDesign, gen_dataset

logging.basicConfig(level=os.getenv("LOGLEVEL","INFO"))
log = logging.getLogger("bench_rbhs")

BENCH_N = 200
BENCH_P = 600
BENCH_ITERS = 10000
BENCH_LIMIT_S = 60.0

def run(out_dir: str = "bench", iters: int = BENCH_ITERS, seed: int = 1) -> Dict[str, float]:
    design = SimDesign(n=BENCH_N, p=BENCH_P, error_kind=ErrorKind.STUDENT_T2)
    data, _ = gen_dataset(design, seed)
    spec = SamplerSpec.for_method("rbhs", n_iter=iters, seed=seed)

    t0 = time.perf_counter()
    draws = run_chain(spec, data)
    elapsed = time.perf_counter() - t0

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        "command=bench_rbhs", f"version={__version__}", f"numpy={np.__version__}",
        f"n={BENCH_N}", f"p={BENCH_P}", f"iters={iters}", f"seed={seed}",
        f"retained={draws.m}", f"elapsed_seconds={elapsed:.3f}",
        f"within_limit={elapsed <= BENCH_LIMIT_S * iters / BENCH_ITERS}",
    ]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.info("rbhs n=%d p=%d iters=%d: %.2fs (%.1f sweeps/s)", BENCH_N, BENCH_P, iters, elapsed, iters / elapsed)
    return {"elapsed": elapsed, "sweeps_per_s": iters / elapsed}

if __name__ == "__main__":
    import sys
    if len(sys.argv) > 3:
        print("usage: python -m robustHorseshoe.scripts.bench_rbhs [out_dir] [iters]", file=sys.stderr)
        sys.exit(1)
    run(sys.argv[1] if len(sys.argv) > 1 else "bench", int(sys.argv[2]) if len(sys.argv) > 2 else BENCH_ITERS)
