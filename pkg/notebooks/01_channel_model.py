# %% [markdown]
# # Channel model: what Bob sees from a Poisson source
#
# A weak coherent pulse of mean photon number mu carries i photons with
# Poisson probability. Each photon survives fibre loss and detector
# inefficiency independently, so the i-photon yield is
# 1 - (1 - eta)^i plus dark counts. Summing over i gives the measured
# gain and error rate.

# %%
import numpy as np

from twoway_qkd import GYS, link_transmittance, overall_gain_qber, photon_number_stats

print(GYS)

# %% [markdown]
# Transmittance drops by a factor of ten every 1 / 0.21 ~ 48 km.

# %%
for d in (0, 25, 50, 100, 150):
    print(f"{d:4d} km  eta = {link_transmittance(GYS, d):.3e}")

# %% [markdown]
# Photon-number breakdown at 50 km for mu = 0.5. The single-photon part
# carries most of the detections but the error rate is set by the
# misalignment floor e_d plus dark counts.

# %%
eta = link_transmittance(GYS, 50.0)
for i in range(5):
    s = photon_number_stats(GYS, eta, 0.5, i)
    print(f"i={i}  yield {s.y_i:.3e}  gain {s.q_i:.3e}  error {s.e_i:.4f}")

# %% [markdown]
# Overall gain and QBER against distance. The QBER stays near e_d until dark
# counts (random outcomes, error 1/2) take over at long range.

# %%
distances = np.arange(0, 201, 25)
stats = overall_gain_qber(GYS, link_transmittance(GYS, distances), 0.5)
for d, q, e in zip(distances, stats.q_mu, stats.e_mu):
    print(f"{d:4d} km  Q = {q:.3e}  E = {e:.4f}")
