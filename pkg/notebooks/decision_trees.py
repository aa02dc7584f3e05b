# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Decision trees through the isolation reduction
#
# A test of cost c becomes a star arm of length c/2, so walking out and
# back costs c. Multiway tests become groups of zero-distance copies.

# %%
from fractions import Fraction

from adaptcover.odt import OdtInstance, Test, eval_test_strategy, export_test_dot, gen_random_odt, odt_solve, odt_to_isolation
from adaptcover.oracle import opt_odt_exact

odt = OdtInstance((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)), (Test(4, subset=(0,)), Test(8, subset=(1,))))
red = odt_to_isolation(odt)
red.instance.metric.dist, red.instance.dist.scenarios

# %%
sol = odt_solve(odt, "star")
print(export_test_dot(sol.strategy))
print("solver", eval_test_strategy(odt, sol.strategy), "optimum", opt_odt_exact(odt).value)

# %% [markdown]
# Skewed priors: checking the likely disease first is cheapest.

# %%
skewed = OdtInstance((Fraction(8, 10), Fraction(1, 10), Fraction(1, 10)), (Test(1, subset=(0,)), Test(1, subset=(1,))))
eval_test_strategy(skewed, odt_solve(skewed).strategy), opt_odt_exact(skewed).value

# %% [markdown]
# ## Random instances with multiway tests

# %%
rows = []
for seed in range(20):
    odt = gen_random_odt(seed, 5, 4)
    value = eval_test_strategy(odt, odt_solve(odt).strategy)
    opt = opt_odt_exact(odt).value
    rows.append((seed, sum(t.multiway for t in odt.tests), value / opt))
for seed, multi, ratio in rows:
    print(f"seed {seed:2d}  multiway {multi}  ratio {ratio:.3f}")
