# %% [markdown]
# # How big is the observed noise?
#
# The error bounds depend on the operator norm of the trimmed noise matrix.
# For i.i.d. noise it grows roughly like sqrt(|E| log|E| / n). Bounded
# noise obeys a deterministic ceiling.

# %%
import numpy as np

from optspace import ObservedMatrix, sample_mask, spectral_norm, trim
from optspace.theory import BoundInputs, fit_loglog_slope, noise_bound_independent, noise_bound_worstcase

m = n = 200
sizes = [2000, 4000, 8000, 16000]
norms = []
for e in sizes:
    vals = []
    for seed in range(5):
        rows, cols = sample_mask(m, n, e, seed)
        z = np.random.default_rng(seed + 99).standard_normal(e)
        vals.append(spectral_norm(trim(ObservedMatrix(m, n, rows, cols, z))[0]))
    norms.append(np.median(vals))
    b = BoundInputs(m=m, n=n, e_size=e, r=1)
    print(f"|E|={e:6d}  measured {norms[-1]:6.2f}  sqrt(|E| log|E| / n) = {noise_bound_independent(1.0, b):6.2f}")

x = [e * np.log(e) / n for e in sizes]
print("slope:", round(fit_loglog_slope(x, norms), 3))

# %% [markdown]
# Entries bounded by z_max: the trimmed norm never exceeds 2 |E| z_max / (n sqrt(alpha)).

# %%
z_max, e = 0.5, 1000
b = BoundInputs(m=100, n=100, e_size=e, r=1)
rows, cols = sample_mask(100, 100, e, 1)
worst = spectral_norm(trim(ObservedMatrix(100, 100, rows, cols, np.full(e, z_max)))[0])
print(f"constant noise: {worst:.2f}  <=  bound {noise_bound_worstcase(z_max, b):.2f}")
