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
# # Bit escrow built on a coin flip
#
# The committer encodes a bit b in one of four qubit states |xi_bx>, and a
# coin flip decides who verifies.  A cheater with a zero-detection pair of
# biasing strategies can enter the flip holding an unbalanced entangled
# state and profit from it without being caught when it loses the flip.

# %%
from qcfsim.catalog import get_entry, make_blackbox, mix_strategies
from qcfsim.errors import AttackUnavailableError
from qcfsim.escrow import csqbc_alice_attack, csqbc_bob_attack, run_escrow

entry = get_entry("protocol2")

# %% [markdown]
# ## Honest escrow
#
# Verification in the committed basis never fails.

# %%
for b in (0, 1):
    for x in (0, 1):
        run = run_escrow(b, x)
        print(b, x, "revealed", run.revealed_b, "detection", run.detection_probability)

# %% [markdown]
# ## Bob steals information
#
# Bob's partial measurement in the optimal discrimination basis yields a
# better-than-random guess of b.  When he loses the flip, the superposed
# attack restores Alice's qubit exactly.

# %%
rep = csqbc_bob_attack(entry)
print("delta a", rep.delta_a, "info gain", rep.info_gain, "detection", rep.detection)

# %% [markdown]
# A weaker certified pair gives a smaller gap and a smaller gain.

# %%
lo, hi = entry.strategies["bob_conditional_option"], entry.strategies["bob_always_option"]
for x in (0.25, 0.5, 0.75, 1.0):
    r = csqbc_bob_attack(entry, pair=(lo, mix_strategies(entry.protocol, lo, hi, x)))
    print(f"x = {x:.2f}  delta a = {r.delta_a:.4f}  gain = {r.info_gain:.4f}  detection = {r.detection:.1e}")

# %% [markdown]
# ## Alice shifts her reveal

# %%
rep = csqbc_alice_attack(entry)
print("reveal shift", rep.reveal_shift, "detection", rep.detection)

# %% [markdown]
# ## An ideal box leaves no room
#
# A black-box flip has no pair of strategies to superpose, so both attacks
# are unavailable.

# %%
try:
    csqbc_bob_attack(make_blackbox(-0.25, 0.25))
except AttackUnavailableError as exc:
    print("unavailable:", exc)
