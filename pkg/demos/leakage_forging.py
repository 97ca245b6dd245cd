"""How much hidden communication a forged violation actually needs.

A leakage channel hands Bob's station a forger that may replace his
outcome using whatever leaked from Alice's side.  Three channels are
compared on the same local source:

  * outcomes only: the forger sees Alice's outcome but not her setting,
  * settings only: the forger sees Alice's setting but not her outcome,
  * both: full per-trial knowledge of setting and outcome.

Only the full channel can steer the joint statistics onto the quantum
target table and hold the violation fraction near one.  Either partial
channel leaves every variant at or below zero, so a forged violation
certifies that both kinds of information crossed between the stations.

Example output:

    leakage=none            v0 = +0.000  fraction = 0.53
    leakage=outcomes only   v0 = -0.049  fraction = 0.01
    leakage=settings only   v0 = -0.146  fraction = 0.00
    leakage=both            v0 = +0.206  fraction = 1.00  <- quantum forgery
"""

from chsim import (
    CH_OPTIMAL_ANGLES,
    EntangledPairSource,
    ExperimentConfig,
    LeakageChannel,
    LeakageMode,
    OutcomeMimicStrategy,
    SettingBiasStrategy,
    TargetCorrelationStrategy,
    make_model,
    run_experiment,
)

N_TRIALS = 400_000
PARTITIONS = 100
SEED = 61


def main():
    channels = (
        ("none", None, None),
        ("outcomes only", LeakageMode.OUTCOME_ONLY, OutcomeMimicStrategy()),
        ("settings only", LeakageMode.SETTING_ONLY, SettingBiasStrategy()),
        ("both", LeakageMode.BOTH, TargetCorrelationStrategy(EntangledPairSource())),
    )
    for label, mode, strategy in channels:
        kwargs = {}
        if mode is not None:
            kwargs["leakage"] = LeakageChannel(mode)
            kwargs["strategy"] = strategy
        config = ExperimentConfig(
            source=make_model("cosine-sign"),
            angles=CH_OPTIMAL_ANGLES,
            n_trials=N_TRIALS,
            partitions=PARTITIONS,
            seed=SEED,
            **kwargs,
        )
        result = run_experiment(config)
        v0 = result.ch.values[0]
        fraction = result.partition.variant_fractions[0]
        note = "  <- quantum forgery" if v0 > 0.1 else ""
        print(f"leakage={label:<15} v0 = {v0:+.3f}  fraction = {fraction:.2f}{note}")
    print()
    print("Half the channel is not enough; forging the quantum table takes")
    print("both the remote setting and the remote outcome every trial.")


if __name__ == "__main__":
    main()
