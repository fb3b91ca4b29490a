# %% [markdown]
# # Advising a pure scan
#
# No worker talks to another, so more workers mainly buy parallel reads.
# Small memory sizes get little network bandwidth and some do not fit at all.

# %%
import numpy as np

from dataclasses import replace

from faas_advisor import CalibrationParams, KneeWeights, advise
from faas_advisor.workload import scan_workload

cal = CalibrationParams()
wl = scan_workload(32 * 1024, columns=8, partitions=256)
workers = (86, 128, 256)
memories = (384, 512, 640, 768, 1024, 1280, 1536, 1769, 2048, 2560, 3008, 4096)

rec = advise(wl, cal, workers, memories)
print("chosen:", rec.config, f"d={rec.distance:.3f}")

# %% the whole grid, as a time/cost table
for cand in rec.candidates:
    cfg = cand.config
    if not cand.feasible:
        print(f"W={cfg.workers:3d} M={cfg.memory_mib:4d}  {cand.reason.value}")
        continue
    e = cand.estimate
    mark = "*" if cfg == rec.config else ("f" if rec.on_frontier[cfg] else " ")
    print(f"W={cfg.workers:3d} M={cfg.memory_mib:4d}  {e.completion:6.2f} s  "
          f"${e.total_cost:.5f}  d={rec.distances[cfg]:.3f} {mark}")

# %% the knee moves when time matters more than money
for alpha in (0.25, 1.0, 4.0):
    r = advise(wl, cal, workers, memories, KneeWeights(alpha=alpha, beta=1.0))
    print(f"alpha={alpha:<5} -> {r.config}")

# %% distances are normalized, so a uniform price change leaves the knee alone
pts = np.array([(c.estimate.completion, c.estimate.total_cost) for c in rec.feasible_candidates()])
print("fastest", pts[:, 0].min().round(3), "s, cheapest $", pts[:, 1].min().round(6))
pricier = replace(cal, gib_second_price=2 * cal.gib_second_price,
                  requests=replace(cal.requests,
                                   read_price_per_1000=2 * cal.requests.read_price_per_1000,
                                   write_price_per_1000=2 * cal.requests.write_price_per_1000))
print("double prices ->", advise(wl, pricier, workers, memories).config)
