"""Steps per second of the compiled and pure-Python trajectory loops.

    python3 benchmarks/bench_kernel.py --steps 200000
"""

import argparse
import time

import numpy as np

from clockwork import kernel
from clockwork.config import builtin_mdp
from clockwork.exploration import Boltzmann, EpsGreedy
from clockwork.qlearn import QLearnConfig, run
from clockwork.schedules import LocalPairClock, PowerProduct

CASES = {
    "eps_greedy/pair_clock": (EpsGreedy(0.2), LocalPairClock(1, 1, 0.7)),
    "boltzmann/power_product": (Boltzmann(0.5), PowerProduct(alpha=0.5, beta=0.3)),
}


def bench(backend, config, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        run(config, backend=backend)
        best = min(best, time.perf_counter() - start)
    return config.horizon / best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--mdp", default="reference_4state")
    args = parser.parse_args()
    mdp = builtin_mdp(args.mdp)
    print(f"{'case':<26}{'backend':<9}{'steps/s':>14}{'speedup':>10}")
    for name, (policy, schedule) in CASES.items():
        config = QLearnConfig(mdp, policy, schedule, horizon=args.steps)
        rates = {b: bench(b, config, args.repeats) for b in kernel.available()}
        for b, r in rates.items():
            print(f"{name:<26}{b:<9}{r:>14,.0f}{r / rates['python']:>9.1f}x")


if __name__ == "__main__":
    main()
