"""Fair-sampling CHSH fooled by detector bias that CH shrugs off.

The detection-biased model is fully local: each photon carries a
hidden polarization, and the detector clicks with probability
|cos 2(setting - polarization)|^s.  Post-selecting on coincidences and
renormalizing by the detected fraction (the fair-sampling assumption)
inflates the CHSH statistic far past the classical bound of 2.  The CH
variants keep every no-click window in the denominator, so the same
run leaves all four at comfortably negative values.

Example output:

    trials: 1000000, detected coincidences kept by CHSH: 107643

    CHSH raw (all windows)      : +1.474  (classical bound 2)
    CHSH fair-sampled           : +3.549  (appears to beat even 2*sqrt(2) = 2.828)
    CH variants (no assumption) : -0.397 -0.399 -0.399 -0.131

    Verdict: the 'violation' lives entirely in the discarded windows.
"""

import numpy as np

from chsim import DETECTION_BIAS_ANGLES, ExperimentConfig, make_model, run_experiment

N_TRIALS = 1_000_000
SEED = 70


def main():
    config = ExperimentConfig(
        source=make_model("detection-biased"),
        angles=DETECTION_BIAS_ANGLES,
        n_trials=N_TRIALS,
        partitions=10,
        seed=SEED,
    )
    result = run_experiment(config)
    report = result.ch
    kept = int(result.counts.n_coinc.sum())
    print(f"trials: {N_TRIALS}, detected coincidences kept by CHSH: {kept}")
    print()
    print(f"CHSH raw (all windows)      : {report.chsh_raw:+.3f}  (classical bound 2)")
    print(f"CHSH fair-sampled           : {report.chsh_fair:+.3f}  "
          f"(appears to beat even 2*sqrt(2) = {2 * np.sqrt(2):.3f})")
    values = " ".join(f"{v:+.3f}" for v in report.values)
    print(f"CH variants (no assumption) : {values}")
    print()
    if report.chsh_fair > 2.0 and report.values.max() <= 0.0:
        print("Verdict: the 'violation' lives entirely in the discarded windows.")
    else:
        print("Verdict: unexpected, inspect the run.")


if __name__ == "__main__":
    main()
