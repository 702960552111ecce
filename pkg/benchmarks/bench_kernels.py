"""Compiled vs pure-Python kernels on inputs shaped like the real workload.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the environment switch that picks
the default backend does not matter here.
"""

import argparse
import timeit

import numpy as np

from cbrl import _fallback, env

try:
    from cbrl import _kernels
except ImportError:
    _kernels = None


def workloads(rng):
    state = env.reset("Brawl", 0)
    frames = []
    for _ in range(100):
        state, _, _ = env.step(state, int(rng.integers(6)))
        frames.append(env.render(state).pixels)
    stack = np.stack(frames)
    bg = env.backdrop("Brawl")
    mask = np.abs(stack[-1].astype(int) - bg.astype(int)).max(axis=2) > 25
    noise = rng.random((128, 128)) < 0.3
    vals = np.sort(rng.random(50_000))
    labels = rng.integers(0, 3, 50_000)
    return {
        "label_components (frame mask)": ("label_components", (mask,)),
        "label_components (30% noise)": ("label_components", (noise,)),
        "channel_mode (100 frames)": ("channel_mode", (stack,)),
        "split_stats (50k rows)": ("split_stats", (vals, labels, 3)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, (fn, a) in workloads(rng).items():
        slow = min(timeit.repeat(lambda: getattr(_fallback, fn)(*a), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:34s} {slow:10.2f} {'-':>12s} {'-':>8s}")
            continue
        fast = min(timeit.repeat(lambda: getattr(_kernels, fn)(*a), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {slow:10.2f} {fast:12.3f} {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
