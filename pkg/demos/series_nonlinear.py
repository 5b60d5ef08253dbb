# %% [markdown]
# # Power series for the partial-linear model
#
# invert_series and compose_series give eps o d^-1, the coupling the
# nonlinear residual must remove. The cubic condition decides whether d is
# globally invertible.

# %%
from longterm_iv import (ModelParams, Series, bias_cubic_d, check_invertible_cubic, eps_over_d_series,
                         improved_ifdc_nonlinear, ifdc, sample_partial_cmm)

d, e = Series((1.0, 0.5, 0.1)), Series((1.0,))
print("eps o d^-1 to order 4:", eps_over_d_series(e, d, 4).coeffs)
print(check_invertible_cubic(1.0, 0.5, 0.1))
print(check_invertible_cubic(1.0, 1.0, 0.1))

# %%
d, e = Series((1.0, 0.3, 0.1)), Series((2.0,))
p = ModelParams.homoscedastic(0.3)
ds = sample_partial_cmm(p, d, e, 20_000, seed=1)
print("IFDC            ", ifdc(ds.x, ds.m, ds.y).value)
print("nonlinear, fit  ", improved_ifdc_nonlinear(ds.x, ds.m, ds.y, c=1.0, order=3).value)
print("nonlinear, known", improved_ifdc_nonlinear(ds.x, ds.m, ds.y, c=1.0,
                                                  series=eps_over_d_series(e, d, 3)).value)
print("perturbative bias at d2=0.3, d3=0.1:", bias_cubic_d(0.3, 0.1))
