# %% [markdown]
# # Moving the pole with a prior instrument
#
# With an exogenous V -> X of strength g, the ratio residual and the
# prior-instrument residual have poles at different eps. Whichever pole is
# further from the working eps gives the stable estimate.

# %%
import numpy as np

from longterm_iv import ModelParams, improved_ifdc, improved_ifdc_prior, pole_location, sample_linear_cmm

p = ModelParams(g=2.0)
print("ratio-residual pole eps/d =", pole_location(p.c, p.g))
for eps in (0.2, 1.0, 1.6):
    q = p.replace(eps=eps)
    vals = {"prior": [], "ratio": []}
    for r in range(20):
        ds = sample_linear_cmm(q, 10_000, np.random.SeedSequence(7, spawn_key=(r,)))
        vals["prior"].append(improved_ifdc_prior(ds.v, ds.x, ds.m, ds.y).value)
        vals["ratio"].append(improved_ifdc(ds.x, ds.m, ds.y, c=1.0).value)
    print(f"eps={eps}", {k: (round(np.mean(v), 3), round(np.var(v), 4)) for k, v in vals.items()})
