"""Compiled vs numpy backend timings for the hidden-layer kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--width 200] [--q1 20]

Times three stages on a Poisson-sized instance: the basis jets used to
build H, the per-term parameter gradients used to build J0, and a full
reduced residual + Jacobian evaluation (which also pays for the SVD and
dense products, identical for both backends).
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from varpro_pde import network
from varpro_pde.network import Architecture, hidden_eval, param_jacobian_rows
from varpro_pde.problems import build_collocation, get_problem
from varpro_pde.varpro import VarProblem


def stages(arch, problem, Q1, seed=0):
    colloc = build_collocation(problem, Q1)
    theta = arch.random_theta(np.random.default_rng(seed), 1.0)
    beta = np.random.default_rng(seed + 1).standard_normal(arch.width)
    pts, box, terms = colloc.points, problem.box, colloc.terms

    def basis():
        hidden_eval(arch, theta, pts, box, 2)

    def gradients():
        param_jacobian_rows(arch, theta, beta, pts, box, terms)

    def reduced():
        vp = VarProblem(arch, box, pts, terms, colloc.rhs)
        vp.residual(theta)
        vp.jacobian(theta)

    return {"basis jets": basis, "term gradients": gradients, "residual+jacobian": reduced}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--width", type=int, default=200)
    ap.add_argument("--q1", type=int, default=20)
    ap.add_argument("--activation", default="cos")
    args = ap.parse_args(argv)

    if not network.HAVE_COMPILED:
        print("compiled kernels not built; only the numpy backend is available")
    backends = ["numpy"] + (["cython"] if network.HAVE_COMPILED else [])
    arch = Architecture((2, args.width, 1), args.activation)
    problem = get_problem("poisson2d")
    results = {}
    original = network.backend_name()
    try:
        for name in backends:
            network.set_backend(name)
            for stage, fn in stages(arch, problem, args.q1).items():
                fn()  # warm up
                best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
                results[(stage, name)] = best
    finally:
        network.set_backend(original)

    print(f"[2,{args.width},1] {args.activation}, Q1={args.q1}, best of {args.repeat}")
    print(f"{'stage':<20}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for stage in stages(arch, problem, args.q1):
        row = f"{stage:<20}" + "".join(f"{results[(stage, b)] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{results[(stage, 'numpy')] / results[(stage, 'cython')]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
