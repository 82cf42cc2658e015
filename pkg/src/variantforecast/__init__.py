"""Predict how many new genetic variants a two-population follow-up
sequencing study will discover, given a pilot study.

The main predictor couples the two populations through a Poisson point
process prior on frequency pairs; two single-population baselines
(pooled and independent) are included, along with simulation,
empirical-Bayes fitting and cross-validation tooling.
"""

from .baselines import (Bp3Params, I3bpParams, bp3_kton_mean_single,
                        bp3_total_mean_single, d3bp_kton_mean,
                        d3bp_total_mean, i3bp_kton_mean, i3bp_total_mean)
from .data import (FoldPlan, GrowthCurve, KtonTable, VariantDataset,
                   count_new_ktons, count_new_total, fit_power_law_slope,
                   growth_curve, load_tsv, make_folds, save_tsv)
from .errors import (DataFormatError, InsufficientDataError, QuadratureError,
                     QuadratureNonConvergence)
from .fitting import (FitConfig, FitResult, fit_d3bp, fit_i3bp, fit_proposed,
                      proposed_objective, split_pilot)
from .model import (CountPair, Hyperparams, PredictiveMean,
                    RateMeasureDiagnostics, kton_grid_means,
                    kton_predictive_mean, log_rate_density,
                    posterior_log_density, rate_density,
                    rate_measure_diagnostics, total_predictive_mean)
from .numerics import (QuadratureConfig, QuadratureResult, log_beta,
                       log_pochhammer, log_rising_factorial,
                       tanh_sinh_integrate_1d, tanh_sinh_integrate_2d)
from .simulation import (FrequencyAtoms, SimConfig, ibp_kton_mc,
                         sample_bernoulli_process, sample_ibp_3bp,
                         sample_occurrence_dataset, sample_proposed_atoms,
                         sample_semisynthetic, simulate_growth_mc,
                         simulate_kton_mc, split_pooled)

__version__ = "0.1.0"
