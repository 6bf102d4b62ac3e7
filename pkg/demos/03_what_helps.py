# Which ingredients matter?
#
# Two comparisons on one synthetic benchmark:
#   * training only on plays that passed the threshold, versus also turning
#     skipped plays into "prefer anything else over this" triples;
#   * equal weights for every play, versus the distance-based curves.
# Each setting is averaged over three training seeds.

import numpy as np

from playaffinity import Hyperparameters, SplitSpec, SynthConfig, causal_split, evaluate, fit, generate

log, truth = generate(SynthConfig(user_count=2000, entity_count=800, seed=3))
split = causal_split(log, SplitSpec.last_two_days(log))
hp = Hyperparameters(k=16)


def mean_rho(**kwargs):
    return np.mean([evaluate(fit(split.train, hp, seed=s, **kwargs).model, split.test).rho for s in range(3)])


print(f"positives only        rho = {mean_rho(positives_only=True):.4f}")
for kind in ["uniform", "log", "concave-quad", "linear", "convex-quad"]:
    print(f"{kind:<21} rho = {mean_rho(weighting=kind):.4f}")
