"""Single-population beta-process baselines: pooled (d3BP) and independent (i3BP).

The pooled predictor treats both populations as one; the independent
predictor fits each population separately and therefore predicts zero
shared k-tons.  Both reduce to closed forms in rising factorials.

The source formulas are stated with a rising factorial whose divisor is
ambiguous between Gamma(a) and Gamma(a+1).  The Gamma(a) (classical
Pochhammer) reading is adopted here: it is the one that reproduces the
Indian-buffet simulation means (e.g. the very first sample must discover
Poisson(alpha) variants), while the Gamma(a+1) reading is off by the
constant factor (c+1)/((c+sigma)(1-sigma)).  The rejected reading stays
available via ``convention="shifted"`` so the tests can exhibit the
discrepancy.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .numerics import log_pochhammer, log_rising_factorial

__all__ = [
    "Bp3Params",
    "I3bpParams",
    "bp3_kton_mean_single",
    "bp3_total_mean_single",
    "d3bp_kton_mean",
    "d3bp_total_mean",
    "i3bp_kton_mean",
    "i3bp_total_mean",
]


@dataclass(frozen=True)
class Bp3Params:
    """Mass, concentration, discount of a three-parameter beta process."""

    alpha: float
    c: float
    sigma: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 <= self.sigma < 1:
            raise ValueError("sigma must lie in [0, 1)")
        if not self.c > -self.sigma:
            raise ValueError("c must exceed -sigma")


@dataclass(frozen=True)
class I3bpParams:
    """Independent per-population three-parameter beta processes."""

    pop1: Bp3Params
    pop2: Bp3Params


def _log_rf(a, b, convention):
    if convention == "standard":
        return log_pochhammer(a, b)
    if convention == "shifted":
        return log_rising_factorial(a, b)
    raise ValueError(f"unknown rising-factorial convention: {convention!r}")


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def bp3_kton_mean_single(n, m, k, p, convention="standard"):
    """Mean number of new variants seen exactly k times in m follow-up
    samples of a single population, after n pilot samples."""
    if k < 1 or k > m:
        raise ValueError("k must satisfy 1 <= k <= m")
    log_lam = (np.log(p.alpha) + _log_binom(m, k)
               + _log_rf(p.c + p.sigma, n + m - k, convention)
               + _log_rf(1.0 - p.sigma, k - 1, convention)
               - _log_rf(p.c + 1.0, n + m - 1, convention))
    return float(np.exp(log_lam))


def bp3_total_mean_single(n, m, p, convention="standard"):
    """Mean total number of new variants in m follow-up samples of a
    single population, after n pilot samples."""
    if m == 0:
        return 0.0
    j = np.arange(n, n + m)
    log_terms = (_log_rf(p.c + p.sigma, j, convention)
                 - _log_rf(p.c + 1.0, j, convention))
    return float(p.alpha * np.sum(np.exp(log_terms)))


def d3bp_kton_mean(N, M, k, p, convention="standard"):
    """Pooled-population mean number of new (k1, k2)-tons.

    Both populations are modelled as one; only the binomial coefficients
    remember which population each follow-up sample came from.
    """
    if k.p1 > M.p1 or k.p2 > M.p2:
        raise ValueError("k must satisfy k_p <= M_p in each population")
    if k.p1 + k.p2 < 1:
        raise ValueError("k must satisfy k1 + k2 >= 1")
    tot = N.total + M.total
    ktot = k.p1 + k.p2
    log_lam = (np.log(p.alpha)
               + _log_binom(M.p1, k.p1) + _log_binom(M.p2, k.p2)
               + _log_rf(p.c + p.sigma, tot - ktot, convention)
               + _log_rf(1.0 - p.sigma, ktot - 1, convention)
               - _log_rf(p.c + 1.0, tot - 1, convention))
    return float(np.exp(log_lam))


def d3bp_total_mean(N, M, p, convention="standard"):
    """Pooled-population mean total number of new variants."""
    return bp3_total_mean_single(N.total, M.total, p, convention)


def i3bp_total_mean(N, M, p):
    """Independent-population mean total: the two per-population
    predictions simply add."""
    return (bp3_total_mean_single(N.p1, M.p1, p.pop1)
            + bp3_total_mean_single(N.p2, M.p2, p.pop2))


def i3bp_kton_mean(N, M, k, p):
    """Independent-population mean number of new (k1, k2)-tons.

    Shared variants have probability zero under this model, so any cell
    with both components positive gets mean 0.
    """
    if k.p1 > M.p1 or k.p2 > M.p2:
        raise ValueError("k must satisfy k_p <= M_p in each population")
    if k.p1 + k.p2 < 1:
        raise ValueError("k must satisfy k1 + k2 >= 1")
    if k.p1 > 0 and k.p2 > 0:
        return 0.0
    if k.p2 == 0:
        return bp3_kton_mean_single(N.p1, M.p1, k.p1, p.pop1)
    return bp3_kton_mean_single(N.p2, M.p2, k.p2, p.pop2)
