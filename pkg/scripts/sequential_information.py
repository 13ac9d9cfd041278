"""How much each added measurement reveals, and what the first ones lose.

For a random state and a chain of random instruments, prints the decreasing
observational entropies, the information gained by each new step, and the
lower bound on the information destroyed by the earlier steps.
"""

import argparse
import math

from obsent import CoarseGrainingSequence, observational_entropy, von_neumann_entropy
from obsent.sampling import SamplerConfig, random_instrument, random_mixed
from obsent.theorems import thm_sandwich_report


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--steps", type=int, default=4)
    p.add_argument("--outcomes", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    a = p.parse_args()

    cfg = SamplerConfig(seed=a.seed, dim=a.dim, outcome_count=a.outcomes, kraus_count=2)
    rng = cfg.rng()
    rho = random_mixed(cfg, rng)
    steps = [random_instrument(cfg, rng) for _ in range(a.steps)]

    s_vn = von_neumann_entropy(rho)
    print(f"ln d = {math.log(a.dim):.6f}   S(rho) = {s_vn:.6f}\n")
    print(f"{'n':>2s} {'S_Cn':>10s} {'gain':>10s} {'<D>':>10s} {'lost >=':>10s}")
    prev = math.log(a.dim)
    for n in range(1, a.steps + 1):
        seq = CoarseGrainingSequence(tuple(steps[:n]))
        s_n = observational_entropy(rho, seq)
        if n < a.steps:
            rep = thm_sandwich_report(rho, seq, steps[n])
            mean_d = rep.quantities["mean_relative_entropy"]
            lost = rep.quantities["lost_information_lower_bound"]
            print(f"{n:2d} {s_n:10.6f} {prev - s_n:10.6f} {mean_d:10.6f} {lost:10.6f}")
        else:
            print(f"{n:2d} {s_n:10.6f} {prev - s_n:10.6f}")
        prev = s_n


if __name__ == "__main__":
    main()
