"""Where in (entanglement, efficiency) space a CH violation survives.

Sweeps the state parameter r against symmetric detector efficiency eta
and marks each cell by what the exact loss-folded value and the Monte
Carlo partition statistic agree on.  Weakly entangled states tolerate
more loss, so the violation region opens near 75 percent efficiency at
small r and widens toward unit efficiency, while nothing survives at
60 percent.  Per-cell angles are re-optimized, which is what lets the
weak states win.

Legend: '#' persistent Monte Carlo violation, '+' exact value positive
but noise-limited at this cell size, '.' no violation possible.

Example output:

             eta  0.60  0.70  0.80  0.90  1.00
    r=0.7854         .     .     .     #     #
    r=0.3927         .     .     #     #     #
    r=0.1963         .     +     #     #     #
    r=0.0982         .     +     #     #     #
"""

import numpy as np

from chsim import efficiency_scan

R_VALUES = (np.pi / 4, np.pi / 8, np.pi / 16, np.pi / 32)
ETA_VALUES = (0.60, 0.70, 0.80, 0.90, 1.00)
TRIALS_PER_CELL = 50_000
PARTITIONS = 50
SEED = 8


def cell_mark(cell):
    if cell.persistent[0]:
        return "#"
    if cell.oracle_values[0] > 0.0:
        return "+"
    return "."


def main():
    report = efficiency_scan(
        R_VALUES,
        ETA_VALUES,
        trials_per_cell=TRIALS_PER_CELL,
        partitions=PARTITIONS,
        seed=SEED,
    )
    grid = {(c.r, c.eta): c for c in report.cells}
    header = "".join(f"{eta:>6.2f}" for eta in ETA_VALUES)
    print(f"{'eta':>12}{header}")
    for r in R_VALUES:
        marks = "".join(f"{cell_mark(grid[(r, eta)]):>6}" for eta in ETA_VALUES)
        print(f"r={r:<10.4f}{marks}")
    print()
    print("Smaller r (weaker entanglement) buys efficiency headroom; the")
    print("region grows monotonically as eta rises and is empty at 0.60.")


if __name__ == "__main__":
    main()
