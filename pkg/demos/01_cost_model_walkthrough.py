# %% [markdown]
# # Where the seconds and the cents go
#
# A single configuration, taken apart phase by phase.

# %%
from faas_advisor import CalibrationParams, Configuration, estimate, startup_schedule
from faas_advisor.workload import exchange_workload

cal = CalibrationParams()
wl = exchange_workload(4096, columns=1, partitions=256, exchanged_fraction=1.0)

# %% start-up: one invoker up to 100 workers, then a two-level tree
for w in (1, 64, 100, 101, 256):
    s = startup_schedule(w, cal.invocation)
    print(f"W={w:4d} {s.mode:9s} last worker ready after {s.last_ready:.3f} s")

# %% one estimate, phase by phase
est = estimate(Configuration(64, 1769), wl, cal)
b = est.breakdown
print("exchange groups:", est.exchange_groups)
for name, secs in [("startup", b.startup), ("base", b.base), ("input", b.input),
                   *[(f"exchange[{i}]", x) for i, x in enumerate(b.exchange)],
                   ("output", b.output), ("postprocess", b.postprocess)]:
    print(f"{name:12s} {secs:7.3f} s")
print(f"completion   {est.completion:7.3f} s")

# %% cost: compute is billed per GiB-second, requests per thousand
print(f"billable      {est.billable:9.2f} worker-s")
print(f"compute       ${est.compute_cost:.6f}")
print(f"requests      ${est.request_cost:.6f}  {est.requests}")
print(f"request share {est.requests_share:.1%}")

# %% requests grow like W * sqrt(W) once the exchange needs two levels
for w in (64, 144, 256, 576):
    e = estimate(Configuration(w, 1769), wl, cal)
    print(f"W={w:4d} HEAD={e.requests.head:7d} GET={e.requests.get:6d} share={e.requests_share:.1%}")
