"""Kernel backend comparison over a few workload sizes and thread counts.

Usage: python benchmarks/bench_kernel.py
"""

from chirpmem.benchmark import run_benchmark


def main():
    print(f"{'backend':>8} {'threads':>7} {'n_spins':>8} {'n_steps':>8} "
          f"{'seconds':>9} {'spin-steps/s':>13}")
    for n_spins, n_steps in ((2048, 10000), (8192, 20000)):
        for threads in (1, 4):
            for row in run_benchmark(n_spins=n_spins, n_steps=n_steps,
                                     threads=threads):
                print(f"{row['backend']:>8} {row['threads']:>7} "
                      f"{row['n_spins']:>8} {row['n_steps']:>8} "
                      f"{row['seconds']:>9.3f} {row['spin_steps_per_s']:>13.3g}")


if __name__ == "__main__":
    main()
