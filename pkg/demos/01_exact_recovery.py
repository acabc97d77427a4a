# %% [markdown]
# # Recovering a low-rank matrix from a few of its entries
#
# A 200 x 200 rank-2 matrix, 8000 revealed entries (40 per row on average).
# We trim, project, then run gradient descent on the pair of subspaces.

# %%
import numpy as np

from optspace import ObservedMatrix, optspace
from optspace.harness import SynthSpec, gen_lowrank, observe

spec = SynthSpec(m=200, n=200, r=2, e_size=8000, seed=0)
M, U, Sigma, V = gen_lowrank(spec)
obs = observe(M, spec)
print(f"{obs.nnz} of {M.size} entries revealed ({obs.nnz / M.size:.0%})")

# %%
result = optspace(obs, r=2)
rel = np.linalg.norm(result.estimate() - M) / np.linalg.norm(M)
print("spectral start rel. error:", np.linalg.norm(result.projection.dense() - M) / np.linalg.norm(M))
print("after descent rel. error: ", rel)
print("iterations:", result.trace.iterations, "stopped by:", result.trace.reason)

# %% [markdown]
# The cost only ever goes down along the trace.

# %%
costs = result.trace.costs()
for rec in result.trace.records[:: max(1, len(costs) // 8)]:
    print(f"{rec.iteration:4d}  F={rec.F:.3e}  |grad|={rec.grad_norm:.2e}  step={rec.step:.2e}")

# %% [markdown]
# Without a rank, the gap in the trimmed spectrum is used.

# %%
auto = optspace(obs)
print("estimated rank:", auto.rank)
