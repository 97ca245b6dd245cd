"""Quantum source versus every built-in local model, side by side.

Simulates each built-in source at its natural angle set and prints the
four CH variant values.  The entangled pair pushes variant 0 up to
(sqrt(2) - 1) / 2, about 0.207, while every local hidden variable
model stays at or below zero on all four variants no matter how its
internals are tuned.  The boundary-saturating models land within
sampling noise of zero, which is as close as a local mechanism can
legally get.

Example output:

    exact quantum optimum (variant 0): +0.207107
    model                     v0        v1        v2        v3       max
    cosine-sign          +0.0024   -0.5000   -0.4992   -0.4999   +0.0024
    detection-biased     -0.4462   -0.4449   -0.4448   -0.4475   -0.4448
    coordinated-flash    -0.0038   +0.0032   -0.0016   +0.0022   +0.0032
    independent-coin     -0.4981   -0.5021   -0.4953   -0.5035   -0.4953
    alternating-flash    -0.0019   +0.0013   +0.0005   +0.0001   +0.0013
    entangled-pair       +0.2086   -0.5035   -0.4981   -0.5002   +0.2086
"""

import numpy as np

from chsim import (
    CH_OPTIMAL_ANGLES,
    EntangledPairSource,
    ExperimentConfig,
    analytic_probability_table,
    builtin_models,
    ch_values,
    default_angles,
    make_model,
    run_experiment,
)

N_TRIALS = 400_000
SEED = 3


def main():
    oracle = ch_values(
        analytic_probability_table(EntangledPairSource(), CH_OPTIMAL_ANGLES)
    )
    print(f"exact quantum optimum (variant 0): {oracle.values[0]:+.6f}")
    header = "".join(f"{h:>10}" for h in ("v0", "v1", "v2", "v3", "max"))
    print(f"{'model':<18}{header}")
    for name in builtin_models():
        config = ExperimentConfig(
            source=make_model(name),
            angles=default_angles(name),
            n_trials=N_TRIALS,
            partitions=10,
            seed=SEED,
        )
        values = run_experiment(config).ch.values
        row = "".join(f"{v:>+10.4f}" for v in values)
        print(f"{name:<18}{row}{values.max():>+10.4f}")
    print()
    print("Local models never exceed zero beyond sampling noise;")
    print(f"the entangled pair sits near {oracle.values[0]:+.4f} on variant 0.")


if __name__ == "__main__":
    main()
