# Train on a synthetic log and compare against the factors that generated it.
#
# The generator plants user and entity vectors, then simulates requests: most
# resolve to a well-liked entity that plays long, some resolve wrongly and get
# skipped. Because we know the planted vectors we also know the best score any
# model could reach on this data.

import time

from playaffinity import Hyperparameters, SplitSpec, SynthConfig, causal_split, evaluate, fit, generate, oracle_metrics

config = SynthConfig(user_count=2000, entity_count=800, rank=8, seed=1)
log, truth = generate(config)
print(f"{len(log)} playbacks over {config.days} days")

# Days 1..28 train, day 29 is the development day, day 30 the test day.
split = causal_split(log, SplitSpec.last_two_days(log))
print(f"train {len(split.train)}, dev {len(split.dev)}, test {len(split.test)}")

start = time.perf_counter()
result = fit(split.train, Hyperparameters(k=8, iterations=5))
print(f"trained in {time.perf_counter() - start:.1f}s")
for line in result.report.log_lines():
    print(" ", line)

print()
print(evaluate(result.model, split.test).table("learned model, test day"))
print()
print(oracle_metrics(truth, split.test).table("planted factors, test day"))
