"""Time the MPS forward and backward sweeps on both kernel backends.

    python benchmarks/bench_sweep.py --sites 784 --chi 1 2 4 --batch 1 100
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from tnvqc import _sweep_py
from tnvqc.features import local_feature_map
from tnvqc.mps import calibrate_site_scales, init_mps

try:
    from tnvqc import _sweep_ext
except ImportError:
    _sweep_ext = None


def bench(impl, model, phi, repeat: int) -> tuple[float, float]:
    k = model.output_site
    out = impl.forward(model.cores, model.out_core, phi, k)
    grad = np.ones((phi.shape[0], model.output_dim))

    def fwd():
        impl.forward(model.cores, model.out_core, phi, k)

    def bwd():
        impl.backward(model.cores, model.out_core, phi, k, out[1], out[2], grad)

    t_f = min(timeit.repeat(fwd, number=1, repeat=repeat))
    t_b = min(timeit.repeat(bwd, number=1, repeat=repeat))
    return t_f, t_b


def main(argv=None):
    parser = argparse.ArgumentParser(description="MPS sweep kernel benchmark")
    parser.add_argument("--sites", type=int, default=784)
    parser.add_argument("--chi", type=int, nargs="+", default=[1, 2, 4, 8])
    parser.add_argument("--batch", type=int, nargs="+", default=[1, 100])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    backends = [("python", _sweep_py)] + ([("cython", _sweep_ext)] if _sweep_ext else [])
    print(f"{'chi':>4} {'batch':>6} {'backend':>8} {'forward ms':>11} {'backward ms':>12} {'speedup':>8}")
    for chi in args.chi:
        for batch in args.batch:
            images = rng.random((batch, args.sites)) * (rng.random((batch, args.sites)) < 0.2)
            model = init_mps(
                args.sites, chi, 4, args.sites // 2, seed=1, site_scales=calibrate_site_scales(images)
            )
            phi = local_feature_map(images)
            base = None
            for name, impl in backends:
                t_f, t_b = bench(impl, model, phi, args.repeat)
                base = base or (t_f + t_b)
                print(
                    f"{chi:>4} {batch:>6} {name:>8} {1e3 * t_f:>11.3f} {1e3 * t_b:>12.3f} "
                    f"{base / (t_f + t_b):>7.1f}x"
                )
    if _sweep_ext is None:
        print("compiled extension not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
