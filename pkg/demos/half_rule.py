"""Why a bare violation fraction near one half proves nothing.

Partition a long run into k sequential blocks and count the blocks
whose CH estimate lands above zero.  A local model engineered to sit
exactly on the classical boundary violates in about half the blocks
through sampling fluctuation alone.  The same holds for a source that
alternates between two boundary components over time.  A genuine
effect must therefore push the violating fraction well past one half,
outside the binomial chance band 0.5 +/- 3*sqrt(0.25/k).  The quantum
source does exactly that, taking the fraction all the way to one.

Example output:

    chance band at k=100: 0.500 +/- 0.150

    boundary flash model      fractions: 0.47 0.51 0.49 0.51  (all inside band)
    alternating-block mixture fractions: 0.47 0.52 0.50 0.49  (all inside band)
    entangled pair            fractions: 1.00 0.00 0.00 0.00  (outside the chance band)
"""

import numpy as np

from chsim import (
    CH_OPTIMAL_ANGLES,
    EntangledPairSource,
    ExperimentConfig,
    make_model,
    run_experiment,
    temporal_mixture_test,
)

PARTITIONS = 100
N_TRIALS = 200_000


def fraction_line(label, fractions, band):
    inside = np.all(np.abs(fractions - 0.5) <= band)
    verdict = "all inside band" if inside else "outside the chance band"
    cells = " ".join(f"{f:.2f}" for f in fractions)
    print(f"{label:<26}fractions: {cells}  ({verdict})")


def main():
    band = 3.0 * np.sqrt(0.25 / PARTITIONS)
    print(f"chance band at k={PARTITIONS}: 0.500 +/- {band:.3f}")
    print()

    flash = ExperimentConfig(
        source=make_model("coordinated-flash"),
        angles=CH_OPTIMAL_ANGLES,
        n_trials=N_TRIALS,
        partitions=PARTITIONS,
        seed=1,
    )
    fraction_line(
        "boundary flash model",
        run_experiment(flash).partition.variant_fractions,
        band,
    )

    mixture = temporal_mixture_test(seed=2)
    fraction_line("alternating-block mixture", mixture.variant_fractions, band)

    quantum = ExperimentConfig(
        source=EntangledPairSource(),
        angles=CH_OPTIMAL_ANGLES,
        n_trials=N_TRIALS,
        partitions=PARTITIONS,
        seed=3,
    )
    fraction_line(
        "entangled pair",
        run_experiment(quantum).partition.variant_fractions,
        band,
    )
    print()
    print("Reading a near-half fraction as evidence mistakes boundary noise")
    print("for physics; only a fraction beyond the band supports a violation.")


if __name__ == "__main__":
    main()
