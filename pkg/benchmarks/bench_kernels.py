"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 13,50]

Per-kernel timings call both backend modules directly on identical inputs
and check that they agree.  The end-to-end row runs a full minimization in a
fresh interpreter per backend, with PEPPY_PURE_PYTHON selecting the fallback.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from peppy import kernels
from peppy.chainmodel import build_topology, canonical_conformation, default_config
from peppy.fold import EnergyModel
from peppy.geometry import _geom_vector, _side_chain_lengths

MINIMIZE_SNIPPET = """
import time, numpy as np
from peppy import kernels
from peppy.chainmodel import Conformation, build_topology, canonical_conformation
from peppy.fold import minimize
t = build_topology("A" * 13)
c = canonical_conformation("alpha_helix", 13)
rng = np.random.default_rng(1)
starts = [Conformation.from_vector(13, c.vector() + rng.uniform(-10, 10, 24)) for _ in range(5)]
t0 = time.perf_counter()
for s in starts:
    minimize(s, t)
print(kernels.BACKEND, (time.perf_counter() - t0) / len(starts))
"""


def kernel_inputs(n):
    t = build_topology("A" * n)
    g = default_config().backbone
    m = EnergyModel(t)
    c = canonical_conformation("alpha_helix", n)
    phi = np.array([g.terminal_phi_deg] + list(c.phi[1:]), dtype=float)
    psi = np.array(list(c.psi[:-1]) + [g.terminal_psi_deg], dtype=float)
    geom, sc = _geom_vector(g), _side_chain_lengths(t, g)
    pos = kernels.build_chain(phi, psi, geom, sc)
    p = m.params
    return {
        "build_chain": (phi, psi, geom, sc),
        "clash_pairs": (pos, m.radii, m.excluded, m.scale.radius_factor),
        "pair_terms": (pos, m.radii, m.excluded, m.scale.radius_factor, p.clash_stiffness,
                       m.hb_o, m.hb_n, p.hbond_strength, p.hbond_range, p.hbond_ramp),
    }


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def end_to_end(force_python):
    env = dict(os.environ, PEPPY_PURE_PYTHON="1" if force_python else "0")
    out = subprocess.run([sys.executable, "-c", MINIMIZE_SNIPPET], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="13,50", help="comma-separated residue counts")
    args = ap.parse_args(argv)
    found = kernels.backends()
    if "cython" not in found:
        print("compiled kernels not built; only the NumPy fallback is available")
    names = sorted(found)
    print(f"{'kernel':<12} {'n':>4} " + " ".join(f"{b + ' (us)':>14}" for b in names) + "   speedup  agree")
    for n in (int(s) for s in args.sizes.split(",")):
        for kernel, kargs in kernel_inputs(n).items():
            times, results = {}, {}
            for b in names:
                fn = getattr(found[b], kernel)
                results[b] = fn(*kargs)
                times[b] = best_time(fn, kargs, args.repeat)
            speedup = times["python"] / times["cython"] if "cython" in times else 1.0
            agree = same(results["python"], results.get("cython", results["python"]))
            cells = " ".join(f"{times[b] * 1e6:>14.1f}" for b in names)
            print(f"{kernel:<12} {n:>4} {cells}   {speedup:>6.1f}x  {agree}")
    rows = [end_to_end(True)] + ([end_to_end(False)] if "cython" in found else [])
    print("\nminimize, 13-mer from +/-10 deg (mean of 5 runs):")
    for backend, seconds in rows:
        print(f"  {backend:<7} {seconds * 1e3:9.1f} ms")
    if len(rows) == 2:
        print(f"  speedup {rows[0][1] / rows[1][1]:.1f}x")


if __name__ == "__main__":
    main()
