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
# # Superposed biasing against a two-option coin flip
#
# A cheater who owns one half of a partially entangled pair can run two
# biasing strategies at once, each controlled by its half of the pair.  When
# the honest party's losing-branch states of the two strategies coincide
# (fidelity 1), the pair can be left less entangled than |phi> without any
# chance of being caught.  This walkthrough builds the attack on the
# `protocol2` catalog entry and checks it against the closed forms.

# %%
import numpy as np

from qcfsim.attacks import (
    SuperposedAttack,
    bob_side_attack,
    catalog_pairs,
    certify_pair,
    delta_a,
    pd_box,
    pd_quantum,
)
from qcfsim.catalog import get_entry
from qcfsim.protocol import Party, run_honest, run_with_bias

entry = get_entry("protocol2")
p = entry.protocol

# %% [markdown]
# ## Honest run
#
# Both outcomes occur with probability 1/2 and the two branch vectors are
# orthogonal.

# %%
honest = run_honest(p)
print("probabilities", honest.probabilities)

# %% [markdown]
# ## Bob's catalog strategies
#
# `epsilon` is the bias towards Bob's losing outcome (1).  Both option
# strategies leave Alice's view of that outcome unchanged, which is what the
# certificate checks.

# %%
for sid in ("bob_conditional_option", "bob_always_option", "bob_mostly_option", "bob_garbled_message"):
    prof = run_with_bias(p, entry.strategies[sid], honest)
    print(f"{sid:24s} eps = {prof.epsilon:+.4f}")

lo, hi = entry.strategies["bob_conditional_option"], entry.strategies["bob_always_option"]
cert = certify_pair(p, lo, hi)
print("fidelity", cert.fidelity, "certified", cert.certified, "delta a", cert.delta_a)

# %% [markdown]
# ## Largest undetected imbalance
#
# Over every pair of catalog strategies the best gap is 1/6, so the
# cheater may share |Phi(2/3)> and still never fail the check.

# %%
res = delta_a(p, catalog_pairs(entry, Party.BOB))
print("delta a =", res.delta_a, " a =", res.a)

# %% [markdown]
# ## Simulated versus closed-form detection
#
# The full circuit (controlled rounds, Uhlmann alignment, exact projectors)
# reproduces the closed form at every a, and undercuts the best black-box
# adversary.

# %%
print(f"{'a':>6} {'simulated':>12} {'closed form':>12} {'box':>10}")
for a in (0.55, 0.6, 2 / 3, 0.75, 0.9):
    att = SuperposedAttack(p, lo, hi, a)
    closed = pd_quantum(a, cert.eps_low, cert.eps_high, cert.fidelity)
    print(f"{a:6.4f} {att.pd_simulated():12.3e} {closed:12.3e} {pd_box(a, cert.eps_low):10.3e}")

# %% [markdown]
# ## Bob starting from |phi>
#
# Bob first measures his half of |phi> with a two-outcome POVM.  Either
# outcome leaves |Phi(a)> or |Phi(1-a)>, and exchanging the controls in the
# second case makes both branches equivalent.

# %%
bob = bob_side_attack(p, lo, hi, 2 / 3)
print("POVM outcome probabilities", np.round(bob.probabilities, 12))
print("detection", bob.report.pd_simulated, "beats the box:", bob.report.beats_blackbox)
