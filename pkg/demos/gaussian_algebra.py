# %% [markdown]
# # Gaussian covariance algebra
#
# The closed forms rest on two tools: conditioning a joint Gaussian (Schur
# complement) and Isserlis pairings for higher moments.

# %%
import numpy as np

from longterm_iv import ModelParams, condition_gaussian, family_from_params, isserlis_moment

fam = family_from_params(ModelParams())
print(fam.labels)
post = condition_gaussian(fam, ["W"], ["X"], [2.0])
print("W | X=2:", post.mean, post.cov)

# %%
rho = 0.6
cov = np.array([[1.0, rho], [rho, 1.0]])
print("E[x^2 y^2] =", isserlis_moment(cov, [0, 0, 1, 1]), "vs 1 + 2 rho^2 =", 1 + 2 * rho**2)
z = np.random.default_rng(0).multivariate_normal([0, 0], cov, size=1_000_000)
print("Monte Carlo:", np.mean(z[:, 0] ** 2 * z[:, 1] ** 2))
