"""Time the compiled and pure-Python kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import timeit

import numpy as np

from besr import kernels
from besr.dynamics import _coefficients, equilibrium
from besr.hamiltonian import FieldOrientation, SpinSystem, build_hamiltonian
from besr.rates import RelaxationParams


def cases():
    H = build_hamiltonian(SpinSystem.er167(), FieldOrientation(0.25, math.pi / 4))
    a = np.ascontiguousarray(H.real) if np.allclose(H.imag, 0) else H
    prm = RelaxationParams.from_anchor(1.2, 0.254, tau_ph=5.0, c=5e23)
    eq = equilibrium(prm, 0.020)
    pump = _coefficients(prm, 0.020, 1000.0)
    free = _coefficients(prm, 0.020, 0.0)
    times = np.geomspace(1e-3, 60.0, 200)

    def eig(mod):
        return lambda: mod.jacobi_eigh(a.copy())

    def ode(mod):
        def run():
            out, *_ = mod.integrate_bottleneck(eq.n / prm.c, eq.p, 0.0, np.array([3.0]), *pump)
            mod.integrate_bottleneck(out[-1][0], out[-1][1], 0.0, times, *free)
        return run

    return {"jacobi_eigh (16x16 Hamiltonian)": eig, "integrate_bottleneck (pump + recovery)": ode}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(backends)}")
    for label, make in cases().items():
        best = {}
        for name, mod in backends.items():
            fn = make(mod)
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            best[name] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
        row = "  ".join(f"{n}: {1e3 * t:9.3f} ms" for n, t in best.items())
        speedup = ""
        if "cython" in best:
            speedup = f"  speed-up x{best['python'] / best['cython']:.1f}"
        print(f"{label:42s} {row}{speedup}")


if __name__ == "__main__":
    main()
