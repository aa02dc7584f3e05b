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
# # Adaptive traveling repairman
#
# On the hub-and-spokes instance the hub is in almost every scenario, so the
# solver goes there first. Expected latency grows slowly with the number of
# spokes and stays under 8 up to 32 spokes.

# %%
from adaptcover.adaptrp import adaptrp_solve
from adaptcover.gso import EXACT, make_oracle
from adaptcover.instances import gen_random, gen_trp_star
from adaptcover.oracle import opt_adaptrp_exact, phase_constant_adaptrp
from adaptcover.strategy import eval_adaptrp

for k in (2, 4, 8, 16, 32):
    star = gen_trp_star(k)
    tree = adaptrp_solve(star, make_oracle("auto", star.metric, star.root))
    print(k, round(eval_adaptrp(star, tree), 4))

# %% [markdown]
# Phases record how much latency each scenario picks up. Their weighted sum
# reproduces the evaluated value.

# %%
inst = gen_random(21, 6, 4, objective="adaptrp")
phases = []
tree = adaptrp_solve(inst, EXACT, phases=phases)
value = eval_adaptrp(inst, tree)
opt = opt_adaptrp_exact(inst).value
charged = sum(
    float(inst.dist.probs[i]) * (ph.extra[i] + ph.tail.get(i, 0.0)) for ph in phases for i in ph.sub.members
)
print("value", value, "optimum", opt, "phase sum", charged)
print("per-phase constant", phase_constant_adaptrp(inst, phases))
