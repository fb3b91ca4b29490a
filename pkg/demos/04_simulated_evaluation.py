# %% [markdown]
# # How good is the advice when the cloud misbehaves?
#
# The simulator replays each configuration three times with stragglers,
# jittered bandwidth and polling.  The advice is scored against the best
# configuration the runs actually reveal.

# %%
from pathlib import Path

import numpy as np

from faas_advisor import CalibrationParams, NoiseModel, evaluate
from faas_advisor.simulator import load_noise
from faas_advisor.workload import exchange_workload

cal = CalibrationParams()
wl = exchange_workload(4096, columns=1, partitions=256, exchanged_fraction=1.0)
workers = (54, 64, 90, 132, 256)
memories = (1024, 1536, 1769, 2048, 3008)

# %% zero noise: the simulator is the model, so the advice is perfect
ev = evaluate(wl, cal, workers, memories, NoiseModel.zero(), seed=0)
print("zero noise:", ev.score.advised, ev.score.best, ev.score.distance_error)

# %% default noise
default = ev = evaluate(wl, cal, workers, memories, NoiseModel.default(), seed=0)
s = ev.score
print(f"advised {s.advised}  best {s.best}")
print(f"distance {s.distance_error:+.1%}  time {s.time_error:+.1%}  cost {s.cost_error:+.1%}")

# %% worst/best repeat spread per configuration
ratios = np.array(sorted(ev.variance.ratios.values()))
print(f"median spread {np.median(ratios):.1%}; above 10%: {(ratios > 0.10).mean():.0%} of configs")
for ratio, frac in ev.variance.cdf[:: max(1, len(ev.variance.cdf) // 6)]:
    print(f"  {ratio:6.3f}  {frac:.2f}")

# %% a noisier cloud
# With frequent stragglers nearly every run has some, so repeats look alike
# again: runs get slower while the spread between them can shrink.
noisy = load_noise(Path(__file__).parent / "workloads" / "noisy.json")
ev = evaluate(wl, cal, workers, memories, noisy, seed=0)
print(f"noisy: advised {ev.score.advised} best {ev.score.best} "
      f"distance error {ev.score.distance_error:+.1%} median spread {ev.variance.median:.1%}")
for name, e in (("default", default), ("noisy", ev)):
    t = np.mean([r.completion for r in e.outcomes.rows if r.feasible])
    print(f"{name:8s} mean completion {t:.2f} s")
