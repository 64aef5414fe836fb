# %% [markdown]
# # From firm-level records to a four-index PCA
#
# Firm records with SIC codes are folded into cap-weighted bank, brokerage
# and insurer indexes; together with a hedge-fund index they form the
# four-asset panel whose first fractional eigenvalue is tracked over time.
# Returns are compounded into 2-period blocks before the rolling analysis.

# %%
from datetime import timedelta

import numpy as np

from sysrisk import (
    ConstituentRecord,
    aggregate,
    align,
    build_index,
    generate,
    PanelSpec,
    Regime,
    ReturnSeries,
    rolling_pca,
    standard_sector_filters,
)
from sysrisk.synth_lab import EPOCH

rng = np.random.default_rng(6000)
n_days = 800
drivers = generate(PanelSpec(4, n_days, 0.5, 0.01, Regime(300, 500, 0.92), seed=6199))
lab, banks_f, brokers_f, insurers_f = drivers.returns

# %% [markdown]
# Each sector gets a handful of firms whose returns load on the sector
# driver plus idiosyncratic noise. One stray firm (SIC 7372, software) is
# included to show that the filter drops it.

# %%
firms = [("bank", 6021, banks_f, 8), ("broker", 6211, brokers_f, 5), ("insurer", 6331, insurers_f, 6)]
records = []
for prefix, sic, driver, count in firms:
    for j in range(count):
        cap = 10 ** rng.uniform(2, 5)
        noise = rng.normal(0, 0.004, n_days)
        for t in range(n_days):
            cap *= 1 + driver[t]
            records.append(ConstituentRecord(f"{prefix}{j}", EPOCH + timedelta(days=t), sic + j, cap,
                                             float(driver[t] + noise[t])))
records += [ConstituentRecord("soft", EPOCH + timedelta(days=t), 7372, 1e6, 0.05) for t in range(n_days)]
print(len(records), "firm-day records")

# %%
filters = standard_sector_filters()
indexes = [build_index(records, filters[name], name) for name in ("banks", "brokerages", "insurers")]
lab_series = ReturnSeries("lab", drivers.dates, lab)
panel = aggregate(align([lab_series, *indexes]), 2)
print(panel.asset_ids, panel.n_periods, "two-period returns")

# %%
res = rolling_pca(panel, window=30)
first = res.first_fractions()
for lo, hi in [(0, 120), (165, 235), (265, 370)]:
    print(f"windows {lo:3d}-{hi:3d}: mean first fraction {first[lo:hi].mean():.3f}")
