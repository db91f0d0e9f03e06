"""Time the numba and pure-numpy kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the RELQM_PURE_NUMPY flag does not
matter here. The numba functions are called once before timing to keep JIT
compilation out of the numbers.
"""

import argparse
import time

import numpy as np

from relqm import _kernels, pathint


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def joint_slice_case(n):
    lat = pathint.Lattice1D(-3.0, 3.0, n, 4, 0.25)
    act = pathint.ActionSpec(v_s=pathint.Harmonic(1.0), v_a=pathint.Harmonic(1.0),
                             v_int=pathint.Bilinear(0.5))
    Ts = pathint.slice_transfer(lat, 1.0, act.v_s)
    Ta = pathint.slice_transfer(lat, 1.0, act.v_a)
    phase = pathint.coupling_phase(lat, lat, act)
    rng = np.random.default_rng(0)
    R = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (R, Ts, Ta, phase, lat.dx**2)


def weight_sum_case(n):
    rng = np.random.default_rng(1)
    R = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    mask = np.ones(n, dtype=np.bool_)
    return (R, mask, mask, False, False)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"{'kernel':<12} {'size':>5} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, case, sizes in (
        ("joint_slice", joint_slice_case, (16, 32, 64)),
        ("weight_sum", weight_sum_case, (8, 16, 32)),
    ):
        f_np = getattr(_kernels, f"{name}_numpy")
        f_nb = getattr(_kernels, f"{name}_numba")
        for n in sizes:
            a = case(n)
            diff = abs(np.max(np.abs(np.asarray(f_np(*a)) - np.asarray(f_nb(*a)))))
            t_np = best_of(lambda: f_np(*a), args.repeat)
            t_nb = best_of(lambda: f_nb(*a), args.repeat)
            print(f"{name:<12} {n:>5} {t_np * 1e3:>11.3f} {t_nb * 1e3:>11.3f} {t_np / t_nb:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
