# %% [markdown]
# # From table metadata to a workload profile
#
# Volumes come from rows per scale factor times the stored bytes per tuple
# of each column.  Only the LINEITEM price column ships with the package;
# other widths are yours to measure.

# %%
from faas_advisor import CalibrationParams, advise
from faas_advisor.workload import (
    DatasetLayout,
    QuerySpec,
    ScanSpec,
    TableSpec,
    candidate_workers,
    default_tables,
    partition_read_mib,
    tpch_profile,
)

lineitem = default_tables()[0]
for sf in (20, 100, 200, 500):
    layout = DatasetLayout(sf=sf)
    print(f"SF={sf:3d}: {layout.partitions_of(lineitem):3d} partitions, "
          f"{partition_read_mib(lineitem, 'l_extendedprice', layout):5.1f} MiB of l_extendedprice each")

# %% an aggregation over LINEITEM joined with a filtered ORDERS
orders = TableSpec("orders", 1_500_000, {"o_orderdate": 4.0, "o_orderpriority": 2.5})
query = QuerySpec(
    scans=(
        ScanSpec("lineitem", ("l_extendedprice",), selectivity=0.632),
        ScanSpec("orders", ("o_orderdate", "o_orderpriority"), selectivity=0.038),
    ),
    exchanged_fraction=1.0,
    exchange_columns=2,
    unique_key_fraction=0.1,
)
layout = DatasetLayout(sf=100, partitions=192)
profile = tpch_profile(query, layout, [lineitem, orders])
print(profile)

# %% worker candidates follow the partitions-per-worker list
workers = candidate_workers(192, layout.f_list)
print("workers:", workers)
rec = advise(profile, CalibrationParams(), workers, (768, 1024, 1769, 2048, 4096))
print("chosen:", rec.config, f"{rec.estimate.completion:.2f} s ${rec.estimate.total_cost:.5f}")
