# How much should a single playback count?
#
# A play that stops a few seconds in is a confident "no", and one that runs ten
# times past the threshold is a confident "yes". Plays that end right around
# the threshold say little either way. The weighting curves encode that.

import numpy as np

from playaffinity import WeightingKind, binarize, confidence_weight

T = 30.0  # songs
durations = np.array([0, 5, 15, 25, 29, 30, 31, 60, 150, 300, 450, 600])

print("duration  label " + "".join(f"{k.value:>18}" for k in WeightingKind))
for t in durations:
    row = "".join(f"{confidence_weight(t, T, k):18.4f}" for k in WeightingKind)
    print(f"{t:8.0f}  {binarize(t, T):+5d} {row}")

# Every curve is 0 at the threshold and reaches 1 at ten times the threshold.
# Between those points the convex curve stays lowest, so near-threshold plays
# barely move the model.
grid = np.linspace(T, 10 * T, 7)
print("\nconvex < linear < concave above the threshold:")
for t in grid[1:-1]:
    c, l, v = (confidence_weight(t, T, k) for k in ("convex-quad", "linear", "concave-quad"))
    print(f"  t={t:6.1f}  {c:.3f} < {l:.3f} < {v:.3f}")
