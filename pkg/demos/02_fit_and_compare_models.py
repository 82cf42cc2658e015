"""Fit all three predictors on a pilot and score them on held-out data.

The data are generated from a single pooled population and then split in
two, so variants are heavily shared across populations. The independent
baseline cannot represent that sharing: each population re-discovers the
shared variants in its own follow-up, and the two per-population
predictions double-count them. The coupled model and the pooled baseline
stay close to the truth.

Run: python3 demos/02_fit_and_compare_models.py  (takes a minute or two)
"""

from variantforecast import (Bp3Params, CountPair, FitConfig,
                             QuadratureConfig, count_new_total, fit_d3bp,
                             fit_i3bp, fit_proposed, i3bp_total_mean,
                             d3bp_total_mean, sample_ibp_3bp, split_pooled,
                             total_predictive_mean)

truth = Bp3Params(alpha=20.0, c=1.0, sigma=0.5)
samples = sample_ibp_3bp(truth, 600, seed=11)
ds = split_pooled(samples, CountPair(300, 300), seed=12)
pilot = ds.subset({p: ds.samples[p][:80] for p in (1, 2)})
follow = ds.subset({p: ds.samples[p][80:] for p in (1, 2)})
N = pilot.n_samples()
M = follow.n_samples()
obs = count_new_total(pilot, follow)
print(f"pooled-process data, pilot {N}, follow-up {M}; "
      f"observed new variants: {obs}")

qcfg = QuadratureConfig(rel_tol=1e-6)

fit_c = fit_proposed(pilot, FitConfig(v=5, seed=0, optimizer_max_iter=40),
                     qcfg)
pred_c = total_predictive_mean(N, M, fit_c.params, qcfg).lam

fit_p = fit_d3bp(pilot, FitConfig(v=5, seed=0))
pred_p = d3bp_total_mean(N, M, fit_p.params)

fit_i = fit_i3bp(pilot, FitConfig(seed=0))
pred_i = i3bp_total_mean(N, M, fit_i.params)

print(f"\n{'model':<12} {'predicted':>10} {'rel error':>10}")
for name, pred in (("coupled", pred_c), ("pooled", pred_p),
                   ("independent", pred_i)):
    print(f"{name:<12} {pred:>10.1f} {(pred - obs) / obs:>+10.1%}")

print("\nthe independent model overcounts because every shared variant "
      "is predicted as a fresh discovery in both populations.")
