# Looking closer at a test day.
#
# Per-entity correlations ask, for one song or station at a time, whether the
# users predicted to like it more also listened longer. Only entities with
# more than ten distinct listeners and a clear (p < 0.01) correlation are kept.
#
# The seen/unseen split separates (user, entity) pairs already present in
# training from new ones; the unseen part is the real recommendation problem.

from playaffinity import Hyperparameters, SplitSpec, SynthConfig, causal_split, fit, generate
from playaffinity.evaluation import evaluate, per_entity, seen_unseen_split, unk_involved_fraction

log, _ = generate(SynthConfig(user_count=3000, entity_count=300, seed=9))
split = causal_split(log, SplitSpec.last_two_days(log))
model = fit(split.train, Hyperparameters(k=16)).model

result = per_entity(model, split.test)
print(f"{len(result.entities)} entities kept, {result.excluded} excluded")
for e in result.entities[:8]:
    print(f"  {e.entity_id:<12} {e.entity_type:<8} rho={e.rho:+.3f}  n={e.count}")
for kind, hist in result.histograms.items():
    print(f"  {kind}: {hist.sum()} entities, most common bucket starts at "
          f"{result.bin_edges[hist.argmax()]:+.2f}")

seen, unseen = seen_unseen_split(model, split.train, split.test)
print(f"\nseen pairs {len(seen)}, unseen pairs {len(unseen)}")
print(f"rows touching an unknown user or entity: {unk_involved_fraction(model, split.test):.3%}")
for name, part in (("seen", seen), ("unseen", unseen)):
    print(evaluate(model, part).table(name))
