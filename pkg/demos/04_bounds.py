# %% [markdown]
# # Measuring the quantities that enter the bounds
#
# Incoherence, condition number, noise norms and the bound values for one
# noisy instance. Unknown constants are set to 1, so only trends matter.

# %%
from optspace import optspace
from optspace.harness import SynthSpec, add_noise, gen_lowrank, observe, rmse
from optspace.theory import measure_bound_inputs, theorem1_rhs, theorem2_rhs, theorem2_sample_condition

for k in (20, 40, 80):
    spec = SynthSpec(300, 300, 2, k * 300, "gaussian", sigma=0.5, seed=3)
    M, *_ = gen_lowrank(spec)
    obs = observe(add_noise(M, spec), spec)
    b = measure_bound_inputs(M, obs, 2)
    res = optspace(obs, 2)
    t2 = theorem2_rhs(b)
    print(f"|E|/n={k:3d} mu0={b.mu0:.2f} kappa={b.kappa:.2f} ||Z||={b.noise_operator_norm:6.2f} "
          f"T1 rhs={theorem1_rhs(b):.3f} (spectral rmse {rmse(res.projection.dense(), M):.3f})  "
          f"T2 rhs={t2.value:.3f} (final rmse {rmse(res.estimate(), M):.3f})  "
          f"sample condition met: {theorem2_sample_condition(b).satisfied}")
