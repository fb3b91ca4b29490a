# %% [markdown]
# # Advising a shuffle-heavy query
#
# Every row is repartitioned by key through object storage.  Above 32 workers
# the exchange is split into two levels, which doubles the data moved but
# keeps the number of files each worker polls for manageable.

# %%
from faas_advisor import CalibrationParams, Configuration, advise, estimate, exchange_plan
from faas_advisor.workload import exchange_workload

cal = CalibrationParams()
wl = exchange_workload(4096, columns=1, partitions=256, exchanged_fraction=1.0)

for w in (30, 54, 64, 90, 132, 256):
    print(f"W={w:3d} exchange groups {exchange_plan(w)}")

# %%
rec = advise(wl, cal, (54, 64, 90, 132, 256), (1024, 1280, 1536, 1769, 2048, 2560, 3008, 4096))
print("chosen:", rec.config)
for cand in rec.candidates:
    if not cand.feasible:
        print("  infeasible:", cand.config, cand.reason.value)

# %% the request bill is what punishes wide exchanges
for w in (64, 256):
    e = estimate(Configuration(w, 1769), wl, cal)
    print(f"W={w:3d} completion {e.completion:5.2f} s  total ${e.total_cost:.5f}  "
          f"requests {e.requests_share:.0%}")

# %% a cold start shifts every configuration by the same delay
cold = advise(wl, cal.with_cold_start(), (54, 64, 90, 132, 256), (1024, 1769, 2048, 4096))
print("cold start chosen:", cold.config, f"{cold.estimate.completion:.2f} s")
