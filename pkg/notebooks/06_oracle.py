# %% [markdown]
# # Checking the step formulas independently
#
# The closed-form B and P updates are compared with brute-force sums over
# all flag configurations and with a Monte Carlo run on sampled error flags.

# %%
from twoway_qkd import BellDiagonal, apply_sequence, b_step, enumerate_b, mc_sequence, run_verification

c, t = BellDiagonal(0.7, 0.2, 0.05, 0.05), BellDiagonal(0.6, 0.25, 0.1, 0.05)
print("formula    ", b_step(c, t))
print("enumeration", enumerate_b(c, t))

# %%
s = BellDiagonal(0.8, 0.1, 0.0, 0.1)
mc = mc_sequence(s, "BBP", 1_000_000, seed=7)
exact, y = apply_sequence(s, "BBP")
print(f"yield   MC {mc.yield_:.5f} +- {mc.yield_se:.5f}   exact {y:.5f}")
print(f"bit err MC {mc.delta_b:.5f} +- {mc.delta_b_se:.5f}   exact {exact.delta_b:.5f}")

# %%
for chk in run_verification(n_states=200, n_samples=200_000):
    print(f"{'PASS' if chk.passed else 'FAIL'}  {chk.name}: {chk.detail}")
