# %% [markdown]
# # Two-way distillation steps and the tolerable error region
#
# A Bell-diagonal pair is a probability vector over the four combinations of
# bit and phase error. The B step compares parities of two pairs and keeps
# the control when they agree: bit errors drop, phase errors add up. The P
# step takes the XOR of three bits and a majority vote on phase: bit errors
# rise, phase errors drop. Hashing on the result yields
# 1 - H2(bit error) - H2(phase error) per pair.

# %%
from twoway_qkd import BellDiagonal, apply_sequence, b_step, boundary_curve, diagonal_threshold, p_step
from twoway_qkd.boundary import hashing_yield

s = BellDiagonal(0.7, 0.15, 0.0, 0.15)  # 15 % bit and 15 % phase errors, uncorrelated
print("start", s.as_tuple(), "bit", s.delta_b, "phase", s.delta_p)
p_keep, after_b = b_step(s, s)
print(f"B: kept {p_keep:.3f}, bit {after_b.delta_b:.4f}, phase {after_b.delta_p:.4f}")
after_p = p_step(s)
print(f"P: bit {after_p.delta_b:.4f}, phase {after_p.delta_p:.4f}")

# %% [markdown]
# Hashing alone fails at 15 % errors, but a few B steps followed by P steps
# turn the state into something hashable.

# %%
for seq in ("", "B", "BB", "BBP", "BBBP"):
    out, y = apply_sequence(s, seq)
    print(f"{seq or '-':5s} yield so far {y:.3e}  hashing rate {hashing_yield(out):+.4f}")

# %% [markdown]
# Largest equal bit/phase error rate that some sequence of at most n steps
# can still distil.

# %%
for n in (0, 1, 4, 8):
    print(f"{n:2d} steps: {diagonal_threshold(n, tol=1e-4):.4f}")

# %% [markdown]
# The boundary in the (bit, phase) plane with up to four steps.

# %%
for pt in boundary_curve(4, [0.0, 0.05, 0.10, 0.15], tol=1e-4):
    print(f"bit {pt.delta_b:.2f}  max phase {pt.delta_p:.4f}  via {pt.witness or 'hashing only'}")
