# %% [markdown]
# # Two-copy thresholds along the theta family
#
# A coarse sweep (the CLI `sweep` command runs the full 199-point grid).
# Output is a CSV that gnuplot reads directly:
#
#     plot 'sweep.csv' every ::1 using 1:2 w l, '' every ::1 using 1:3 w l
#
# (with `set datafile separator ','`).

# %%
from incompat_lab import sdp

rows = sdp.sweep_theta(sdp.default_grid(39))
print(sdp.sweep_csv(rows))

# %% [markdown]
# Regions where the two curves move in different directions relative to the
# reference angle arccos(1/sqrt(3)). `regions` uses the sign-mismatch rule;
# `strict_regions` keeps only points where both curves change, in opposite directions.

# %%
summary = sdp.reversal_regions(rows)
for key in ("below_ref", "above_ref", "strict_regions"):
    print(key, summary[key])
