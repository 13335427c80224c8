# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Fidelity thresholds for beating a black-box coin flip
#
# A biased coin flip whose cheating strategies reach fidelity F between the
# honest party's states can be told apart from an ideal box as soon as F
# exceeds `1/(1+2e)` (positive bias e) or `1+2e` (negative bias e).  The
# `curves` subcommand emits these two curves as CSV; here we tabulate them
# and look at the window of a where the quantum attack wins.

# %%
import numpy as np

from qcfsim.attacks import bound_curves, pd_box, pd_quantum, threshold_condition

# %%
for e, f1, f2 in bound_curves(np.round(np.linspace(-0.5, 0.5, 11), 2)):
    fmt = lambda v: "   -   " if v is None else f"{v:.5f}"
    print(f"{e:+.1f}  F_I={fmt(f1)}  F_II={fmt(f2)}")

# %% [markdown]
# ## The a-window
#
# With biases `(0, 1/2)` the threshold is F > 1/2.  For a few fidelities
# above it, the window `(a_lower, 1)` is where the superposed attack detects
# less often than any black-box adversary.

# %%
for F in (0.5, 0.6, 0.8, 0.95, 1.0):
    t = threshold_condition(0.0, 0.5, F)
    window = "none" if t.a_range is None else f"({t.a_range[0]:.4f}, 1)"
    print(f"F = {F:4.2f}  holds = {t.holds!s:5s}  window {window}")

# %%
a_grid = np.linspace(0.5, 1.0, 11)
gap = [pd_quantum(a, 0.0, 0.5, 0.8) - pd_box(a, 0.0) for a in a_grid]
for a, g in zip(a_grid, gap):
    print(f"a = {a:.2f}  P_d(quantum) - P_d(box) = {g:+.5f}")
