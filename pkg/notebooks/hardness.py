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
# # Group Steiner tours and the adaptive TSP construction
#
# Each group becomes a scenario of tiny probability; one extra scenario sits
# at a zero-distance copy of the root and carries almost all the mass. The
# adaptive optimum then tracks the group Steiner tour length.

# %%
from adaptcover.instances import default_hardness_L, gen_random_gst, gst_to_adaptsp
from adaptcover.oracle import opt_adaptsp_exact, opt_gst_exact

for seed in range(10):
    gst = gen_random_gst(seed, 2 + seed % 4, 1 + seed % 3)
    L = default_hardness_L(gst)
    opt, _ = opt_gst_exact(gst)
    opt2 = opt_adaptsp_exact(gst_to_adaptsp(gst, L)).value
    print(f"seed {seed}  L {L:g}  gst {opt:g}  adaptive {opt2:.4f}  low {(1 - 1 / L) * opt:.4f}")

# %% [markdown]
# When a group contains the root, the adaptive strategy can learn about it
# for free and come out slightly below the tour length.

# %%
gst = gen_random_gst(2, 4, 2)
opt, _ = opt_gst_exact(gst)
opt2 = opt_adaptsp_exact(gst_to_adaptsp(gst)).value
gst.groups, opt, opt2
