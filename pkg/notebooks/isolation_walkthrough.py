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
# # Isolation on a small star
#
# Three scenarios on a star with arms of length 2 and 4. We solve with the
# exact group-orienteering oracle, print every partition step and compare
# the result against the brute-force optimum.

# %%
from adaptcover.gso import EXACT, make_oracle
from adaptcover.instances import SubInstance, gen_paper_star, gen_random
from adaptcover.isolation import adaptsp_solve, flip_sets, iso_solve, partition
from adaptcover.oracle import opt_adaptsp_exact, opt_isolation_exact
from adaptcover.strategy import eval_adaptsp, eval_isolation, export_dot

inst = gen_paper_star(3)
inst.metric.dist, inst.dist.scenarios, inst.dist.probs

# %% [markdown]
# Flip sets say which scenarios a visit would single out: a vertex that few
# scenarios contain flips to "yes", the rest flip to "no".

# %%
full = SubInstance.full(inst)
flips = flip_sets(inst, full)
{v: sorted(flips.F[v]) for v in range(inst.n)}

# %%
res = partition(inst, full, EXACT)
res.sequence, [sorted(p) for p in res.parts], res.tour.length

# %%
phases = []
tree = iso_solve(inst, EXACT, phases=phases)
print(export_dot(tree))
print("algorithm", eval_isolation(inst, tree), "optimum", opt_isolation_exact(inst).value)

# %% [markdown]
# ## A random graph instance
#
# Each phase keeps the parts at most 7/8 of the scenarios it started with.

# %%
inst = gen_random(12, 7, 6)
phases = []
tree = iso_solve(inst, make_oracle("auto", inst.metric, inst.root), phases=phases)
for rec in phases:
    sizes = [len(p) for p in rec.result.parts]
    print(f"depth {rec.depth}: {len(rec.sub.members)} scenarios -> parts {sizes}")
print("ratio", eval_isolation(inst, tree) / opt_isolation_exact(inst).value)

# %% [markdown]
# Adaptive TSP adds a tour of the identified scenario after isolation.

# %%
sp = inst.with_objective("adaptsp")
tour_tree = adaptsp_solve(sp, EXACT)
print("adaptsp", eval_adaptsp(sp, tour_tree), "optimum", opt_adaptsp_exact(sp).value)
