"""Simulate a two-population study and check the predictions against it.

Draws a synthetic dataset from known hyperparameters, treats the first
part as the pilot, and compares the predicted number of new variants in
the held-back follow-up (total and by occurrence pair) with what the
simulation actually produced.

Run: python3 demos/01_simulate_and_predict.py
"""

import numpy as np

from variantforecast import (CountPair, Hyperparams, count_new_ktons,
                             count_new_total, kton_grid_means,
                             sample_occurrence_dataset,
                             total_predictive_mean)

phi = Hyperparams(alpha=50.0, sigma1=0.4, sigma2=0.6,
                  phi1=0.8, phi2=0.8, c1=1.0, c2=1.0)
n_pilot = CountPair(60, 60)
n_follow = CountPair(120, 100)

print(f"simulating {n_pilot.total + n_follow.total} samples at {phi}")
ds = sample_occurrence_dataset(
    phi, CountPair(n_pilot.p1 + n_follow.p1, n_pilot.p2 + n_follow.p2),
    seed=42)
pilot = ds.subset({p: ds.samples[p][:getattr(n_pilot, f"p{p}")]
                   for p in (1, 2)})
follow = ds.subset({p: ds.samples[p][getattr(n_pilot, f"p{p}"):]
                    for p in (1, 2)})

obs_total = count_new_total(pilot, follow)
pred = total_predictive_mean(n_pilot, n_follow, phi)
sd = np.sqrt(pred.lam)  # the count is Poisson under the model
print(f"\nnew variants in the follow-up: observed {obs_total}, "
      f"predicted {pred.lam:.1f} (Poisson sd {sd:.1f})")

v = 3
obs_ktons = count_new_ktons(pilot, follow, v)
pred_ktons = kton_grid_means(n_pilot, n_follow, phi, v)
print(f"\nk-ton grid up to v={v} (observed / predicted):")
header = "      " + "".join(f"   k2={k2}       " for k2 in range(v + 1))
print(header)
for k1 in range(v + 1):
    cells = []
    for k2 in range(v + 1):
        if k1 + k2 == 0:
            cells.append("      -      ")
        else:
            cells.append(f"{obs_ktons.cells[k1, k2]:5.0f}/{pred_ktons[k1, k2]:7.1f}")
    print(f"k1={k1} " + " ".join(cells))

print("\nrare variants dominate: most new discoveries sit in the low-k "
      "cells, which is what makes extrapolation from a pilot possible.")
