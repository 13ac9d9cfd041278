"""Qubit walk-through: diag(3/4, 1/4) measured in the X basis.

Prints the observational and von Neumann entropies, the recovered state by
both routes, and every side of the lower-bound chain.
"""

import math

import numpy as np

from obsent import DensityMatrix, Povm, petz_recovered_state, recovered_state
from obsent.theorems import thm2_report

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def main():
    rho = DensityMatrix.diagonal([0.75, 0.25])
    x = Povm.from_basis(H, labels=("+", "-"))
    rep = thm2_report(rho, x)
    q = rep.quantities

    print(f"S(rho)            = {q['von_neumann_entropy']:.12f}")
    print(f"S_X(rho)          = {q['observational_entropy']:.12f}   (ln 2 = {math.log(2):.12f})")
    print(f"gap               = {q['gap']:.12f}")
    print(f"D_KL(p1 || q1)    = {q['kl_p1_q1']:.12f}")
    print(f"D(rho || rho_rec) = {q['relative_entropy_to_recovered']:.12f}")
    print(f"-2 ln F           = {-2 * math.log(q['fidelity']):.12f}")
    print(f"trace distance    = {q['trace_distance']:.12f}")
    print()
    print("rho_rec (direct):\n", np.round(recovered_state(rho, x).matrix.real, 12))
    print("rho_rec (Petz):\n", np.round(petz_recovered_state(rho, x).matrix.real, 12))
    print()
    for c in rep.checks:
        print(f"{c.status:>13s}  {c.name}")


if __name__ == "__main__":
    main()
