# %% [markdown]
# # Error versus number of revealed entries
#
# The classic setting: 600 x 600, rank 2, unit Gaussian noise, and a growing
# number of samples. Each point is the median over a few seeds. This takes
# about a minute on one core.

# %%
import numpy as np

from optspace.harness import SynthSpec, run_experiment
from optspace.theory import fit_loglog_slope

grid = [SynthSpec(600, 600, 2, k * 600, "gaussian", sigma=1.0) for k in (20, 40, 80, 160)]
records = run_experiment(grid, trials_per_point=3, out="fig1_results.csv")

# %%
print(" |E|/n   spectral    final   iters")
sizes, finals = [], []
for spec in grid:
    rows = [r for r in records if r.e_size == spec.e_size]
    spectral = np.median([r.rmse_spectral for r in rows])
    final = np.median([r.rmse_final for r in rows])
    iters = int(np.median([r.iterations for r in rows]))
    print(f"{spec.e_size // 600:6d}  {spectral:9.4f}  {final:7.4f}  {iters:6d}")
    sizes.append(spec.e_size)
    finals.append(final)

# %%
print("log-log slope of the final error:", round(fit_loglog_slope(sizes, finals), 3))
# Close to the sampling threshold the error falls faster than 1/sqrt(|E|),
# so the fitted slope comes out steeper than -1/2 on this grid.
