"""Two-population frequency prior and its Poisson predictive distributions.

The prior places a Poisson point process on pairs of variant frequencies
(theta1, theta2) in the open unit square, with a non-factorizing density
that couples the two populations.  Conditional on a pilot study, both the
number of new variants appearing exactly (k1, k2) times in a follow-up
and the total number of new variants are Poisson; their means reduce to
beta-weighted expectations of the coupling kernel, which we evaluate with
tanh-sinh quadrature entirely in log-space.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import QuadratureNonConvergence
from .numerics import QuadratureConfig, log_beta, tanh_sinh_rule

__all__ = [
    "Hyperparams",
    "CountPair",
    "PredictiveMean",
    "RateMeasureDiagnostics",
    "rate_density",
    "log_rate_density",
    "kton_predictive_mean",
    "kton_grid_means",
    "total_predictive_mean",
    "posterior_log_density",
    "rate_measure_diagnostics",
]

# Refinement levels used when a caller does not pin one.
_MIN_LEVEL = 4


@dataclass(frozen=True)
class Hyperparams:
    """The seven scalars of the two-population prior.

    alpha scales the overall variant mass; sigma1, sigma2 in (0, 1)
    control per-population power-law growth; phi1, phi2 > 0 control the
    cross-population coupling; c1, c2 > 0 damp high frequencies.
    """

    alpha: float
    sigma1: float
    sigma2: float
    phi1: float
    phi2: float
    c1: float
    c2: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        for name in ("sigma1", "sigma2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        for name in ("phi1", "phi2", "c1", "c2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def swapped(self):
        """Hyperparameters with the two population roles exchanged."""
        return Hyperparams(self.alpha, self.sigma2, self.sigma1,
                           self.phi2, self.phi1, self.c2, self.c1)


@dataclass(frozen=True)
class CountPair:
    """A per-population pair of nonnegative integer counts."""

    p1: int
    p2: int

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer")

    @property
    def total(self):
        return self.p1 + self.p2

    def swapped(self):
        return CountPair(self.p2, self.p1)


@dataclass(frozen=True)
class PredictiveMean:
    """A Poisson mean plus the propagated quadrature error estimate."""

    lam: float
    quad_error: float

    def __post_init__(self):
        if self.lam < 0 or self.quad_error < 0:
            raise ValueError("lam and quad_error must be nonnegative")


def _log_rate_from_logs(log_t1, log_1mt1, log_t2, log_1mt2, phi):
    """log density of the prior rate measure from log(theta), log(1-theta).

    Working from the logs keeps the evaluation exact arbitrarily close to
    the boundary, where theta itself underflows.
    """
    s = phi.sigma2 / phi.sigma1
    out = (
        np.log(phi.alpha)
        - phi.sigma1 * np.logaddexp(log_t1, s * log_t2)
        - (phi.phi1 + phi.phi2) * np.logaddexp(log_t1, log_t2)
        + (phi.phi1 - 1.0) * log_t1
        + (phi.c1 - 1.0) * log_1mt1
        - log_beta(phi.phi1, phi.c1)
        + (phi.phi2 - 1.0) * log_t2
        + (phi.c2 - 1.0) * log_1mt2
        - log_beta(phi.phi2, phi.c2)
    )
    return out


def log_rate_density(theta1, theta2, phi):
    """log of the prior rate density at interior points of the unit square."""
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    if np.any(t1 <= 0) or np.any(t1 >= 1) or np.any(t2 <= 0) or np.any(t2 >= 1):
        raise ValueError("theta must lie strictly inside the unit square")
    out = _log_rate_from_logs(np.log(t1), np.log1p(-t1), np.log(t2), np.log1p(-t2), phi)
    return float(out) if out.ndim == 0 else out


def rate_density(theta1, theta2, phi):
    """Density of the prior rate measure at (theta1, theta2)."""
    out = np.exp(log_rate_density(theta1, theta2, phi))
    return float(out) if np.ndim(out) == 0 else out


def _log_kernel_grid(phi, rule):
    """log of the coupling kernel (z + w^(s2/s1))^(-s1) / (z + w)^(p1+p2)
    on the tensor quadrature grid."""
    s = phi.sigma2 / phi.sigma1
    lz = rule.log_x[:, None]
    lw = rule.log_x[None, :]
    return (-phi.sigma1 * np.logaddexp(lz, s * lw)
            - (phi.phi1 + phi.phi2) * np.logaddexp(lz, lw))


def _cell_expectations(a1, b1, a2, b2, phi, level, log_kernel=None):
    """E[(Z + W^(s2/s1))^(-s1) / (Z + W)^(p1+p2)] for batched beta laws.

    ``a1, b1, a2, b2`` are equal-length arrays of beta parameters,
    Z ~ Beta(a1, b1) and W ~ Beta(a2, b2) independent.  Everything is
    assembled in log-space on the tanh-sinh tensor grid, so nothing
    overflows even when the beta parameters are in the thousands.
    """
    rule = tanh_sinh_rule(level)
    if log_kernel is None:
        log_kernel = _log_kernel_grid(phi, rule)
    a1 = np.atleast_1d(np.asarray(a1, dtype=float))
    b1 = np.atleast_1d(np.asarray(b1, dtype=float))
    a2 = np.atleast_1d(np.asarray(a2, dtype=float))
    b2 = np.atleast_1d(np.asarray(b2, dtype=float))
    # log beta pdf at the nodes, plus the node weight, per cell
    lp1 = ((a1[:, None] - 1.0) * rule.log_x[None, :]
           + (b1[:, None] - 1.0) * rule.log_1mx[None, :]
           - log_beta(a1, b1)[:, None] + rule.log_weights[None, :])
    lp2 = ((a2[:, None] - 1.0) * rule.log_x[None, :]
           + (b2[:, None] - 1.0) * rule.log_1mx[None, :]
           - log_beta(a2, b2)[:, None] + rule.log_weights[None, :])
    out = np.empty(a1.size)
    # chunked so the (rows, n, n) workspace stays within ~50 MB
    chunk = max(1, int(6e6) // (rule.x.size * rule.x.size))
    for lo in range(0, a1.size, chunk):
        hi = min(lo + chunk, a1.size)
        block = (lp1[lo:hi, :, None] + lp2[lo:hi, None, :]
                 + log_kernel[None, :, :])
        out[lo:hi] = np.exp(logsumexp(block, axis=(1, 2)))
    return out


def _adaptive_cell_expectations(a1, b1, a2, b2, phi, cfg):
    """Refine the expectation grid until all cells stabilize.

    Returns (values, per-cell error estimates); raises
    QuadratureNonConvergence carrying the partial estimates otherwise.
    """
    prev = None
    err = None
    for level in range(_MIN_LEVEL, cfg.max_level + 1):
        vals = _cell_expectations(a1, b1, a2, b2, phi, level)
        if prev is not None:
            err = np.abs(vals - prev)
            if np.all(err <= cfg.rel_tol * np.abs(vals) + cfg.abs_tol):
                return vals, err
        prev = vals
    raise QuadratureNonConvergence(prev, err)


def _beta_params(N, M, k, phi):
    """Posterior-thinned beta parameters for the (k1, k2) cell."""
    a1 = phi.phi1 + k.p1
    b1 = phi.c1 + N.p1 + M.p1 - k.p1
    a2 = phi.phi2 + k.p2
    b2 = phi.c2 + N.p2 + M.p2 - k.p2
    return a1, b1, a2, b2


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _log_prefactor(N, M, k, phi):
    a1, b1, a2, b2 = _beta_params(N, M, k, phi)
    return (np.log(phi.alpha)
            + _log_binom(M.p1, k.p1) + _log_binom(M.p2, k.p2)
            + log_beta(a1, b1) - log_beta(phi.phi1, phi.c1)
            + log_beta(a2, b2) - log_beta(phi.phi2, phi.c2))


def kton_predictive_mean(N, M, k, phi, cfg=None):
    """Poisson mean of the number of new variants seen exactly (k1, k2)
    times in a follow-up of size (M1, M2), given a pilot of size (N1, N2).

    Requires k_p <= M_p per population and k1 + k2 >= 1.
    """
    cfg = cfg or QuadratureConfig()
    if k.p1 > M.p1 or k.p2 > M.p2:
        raise ValueError("k must satisfy k_p <= M_p in each population")
    if k.p1 + k.p2 < 1:
        raise ValueError("k must satisfy k1 + k2 >= 1")
    a1, b1, a2, b2 = _beta_params(N, M, k, phi)
    expect, err = _adaptive_cell_expectations([a1], [b1], [a2], [b2], phi, cfg)
    pref = np.exp(_log_prefactor(N, M, k, phi))
    return PredictiveMean(float(pref * expect[0]), float(pref * err[0]))


def _total_terms(N, M, phi):
    """Beta parameters and log prefactors for the M1 + M2 single-draw terms
    of the recursive total-count identity."""
    a1 = []
    b1 = []
    a2 = []
    b2 = []
    lpref = []
    lb11 = log_beta(phi.phi1, phi.c1)
    lb22 = log_beta(phi.phi2, phi.c2)
    for j1 in range(1, M.p1 + 1):
        # pilot (N1 + j1 - 1, N2), follow-up (1, 0), cell (1, 0)
        a1.append(phi.phi1 + 1.0)
        b1.append(phi.c1 + N.p1 + j1 - 1.0)
        a2.append(phi.phi2)
        b2.append(phi.c2 + N.p2)
        lpref.append(np.log(phi.alpha)
                     + log_beta(a1[-1], b1[-1]) - lb11
                     + log_beta(a2[-1], b2[-1]) - lb22)
    for j2 in range(1, M.p2 + 1):
        # pilot (N1 + M1, N2 + j2 - 1), follow-up (0, 1), cell (0, 1)
        a1.append(phi.phi1)
        b1.append(phi.c1 + N.p1 + M.p1)
        a2.append(phi.phi2 + 1.0)
        b2.append(phi.c2 + N.p2 + j2 - 1.0)
        lpref.append(np.log(phi.alpha)
                     + log_beta(a1[-1], b1[-1]) - lb11
                     + log_beta(a2[-1], b2[-1]) - lb22)
    return (np.array(a1), np.array(b1), np.array(a2), np.array(b2),
            np.array(lpref))


def total_predictive_mean(N, M, phi, cfg=None):
    """Poisson mean of the total number of new variants in the follow-up.

    Uses the single-draw recursion (population 1 first, then 2), which
    needs only M1 + M2 quadrature evaluations.  An empty follow-up is a
    valid query and returns 0.
    """
    cfg = cfg or QuadratureConfig()
    if M.p1 == 0 and M.p2 == 0:
        return PredictiveMean(0.0, 0.0)
    a1, b1, a2, b2, lpref = _total_terms(N, M, phi)
    try:
        expect, err = _adaptive_cell_expectations(a1, b1, a2, b2, phi, cfg)
    except QuadratureNonConvergence as exc:
        bad = int(np.argmax(exc.error_estimate)) if exc.error_estimate is not None else -1
        raise QuadratureNonConvergence(
            exc.estimate, exc.error_estimate,
            f"total-count quadrature failed to converge (worst term index {bad})",
        ) from exc
    pref = np.exp(lpref)
    return PredictiveMean(float(np.sum(pref * expect)),
                          float(np.sum(pref * err)))


def kton_grid_means(N, M, phi, v, cfg=None, level=None):
    """Predictive means for every cell (k1, k2) with components in 0..v.

    Returns a (v+1, v+1) array; cell (0, 0) and cells with k_p > M_p are
    zero.  With ``level`` pinned the evaluation uses a single fixed
    tanh-sinh grid (the coupling-kernel grid and the beta-function
    denominators are shared across all cells), which is what the fitting
    objective needs for speed and smoothness; otherwise the grid is
    refined adaptively until every cell meets cfg.rel_tol.
    """
    cfg = cfg or QuadratureConfig()
    ks = [(k1, k2)
          for k1 in range(v + 1) for k2 in range(v + 1)
          if k1 + k2 >= 1 and k1 <= M.p1 and k2 <= M.p2]
    if not ks:
        return np.zeros((v + 1, v + 1))
    k1s = np.array([k[0] for k in ks], dtype=float)
    k2s = np.array([k[1] for k in ks], dtype=float)
    a1 = phi.phi1 + k1s
    b1 = phi.c1 + N.p1 + M.p1 - k1s
    a2 = phi.phi2 + k2s
    b2 = phi.c2 + N.p2 + M.p2 - k2s
    if level is not None:
        expect = _cell_expectations(a1, b1, a2, b2, phi, level)
    else:
        expect, _ = _adaptive_cell_expectations(a1, b1, a2, b2, phi, cfg)
    lpref = (np.log(phi.alpha)
             + _log_binom(M.p1, k1s) + _log_binom(M.p2, k2s)
             + log_beta(a1, b1) - log_beta(phi.phi1, phi.c1)
             + log_beta(a2, b2) - log_beta(phi.phi2, phi.c2))
    grid = np.zeros((v + 1, v + 1))
    grid[k1s.astype(int), k2s.astype(int)] = np.exp(lpref) * expect
    return grid


def posterior_log_density(theta, N, x_counts, phi):
    """Unnormalized log posterior density of one variant's frequency pair.

    ``x_counts`` holds the variant's per-population occurrence totals in
    the N pilot samples.  With no data this is the prior log rate density.
    """
    if x_counts.p1 > N.p1 or x_counts.p2 > N.p2:
        raise ValueError("occurrence totals cannot exceed pilot sizes")
    t1, t2 = theta
    base = log_rate_density(t1, t2, phi)
    return (base
            + x_counts.p1 * np.log(t1) + (N.p1 - x_counts.p1) * np.log1p(-t1)
            + x_counts.p2 * np.log(t2) + (N.p2 - x_counts.p2) * np.log1p(-t2))


@dataclass(frozen=True)
class RateMeasureDiagnostics:
    """Numerical evidence that the rate measure is proper.

    first_moments must both be finite (samples see finitely many
    variants); truncated_masses over shrinking squares [eps, 1)^2 must
    grow without bound (there is always something left to discover).
    """

    first_moments: tuple
    first_moment_errors: tuple
    eps_grid: tuple
    truncated_masses: tuple


def _integrate_rate_moment(phi, cfg, pop):
    """integral of theta_pop * rate density over the open unit square."""
    prev = None
    err = np.inf
    for level in range(_MIN_LEVEL, cfg.max_level + 1):
        rule = tanh_sinh_rule(level)
        lz = rule.log_x[:, None]
        lw = rule.log_x[None, :]
        l1z = rule.log_1mx[:, None]
        l1w = rule.log_1mx[None, :]
        logf = _log_rate_from_logs(lz, l1z, lw, l1w, phi)
        logf = logf + (lz if pop == 1 else lw)
        logf = logf + rule.log_weights[:, None] + rule.log_weights[None, :]
        est = float(np.exp(logsumexp(logf)))
        if prev is not None:
            err = abs(est - prev)
            if err <= cfg.rel_tol * abs(est) + cfg.abs_tol:
                return est, err
        prev = est
    raise QuadratureNonConvergence(prev, err,
                                   f"first-moment quadrature failed (population {pop})")


def truncated_rate_mass(phi, eps, cfg=None):
    """Mass of the rate measure over the square [eps, 1)^2."""
    cfg = cfg or QuadratureConfig()
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    scale = 1.0 - eps
    prev = None
    err = np.inf
    for level in range(_MIN_LEVEL, cfg.max_level + 1):
        rule = tanh_sinh_rule(level)
        x = eps + scale * rule.x
        logx = np.log(x)
        log1mx = np.log(scale) + rule.log_1mx  # 1 - (eps + (1-eps) x)
        logf = _log_rate_from_logs(logx[:, None], log1mx[:, None],
                                   logx[None, :], log1mx[None, :], phi)
        logf = logf + rule.log_weights[:, None] + rule.log_weights[None, :]
        est = float(scale * scale * np.exp(logsumexp(logf)))
        if prev is not None:
            err = abs(est - prev)
            if err <= cfg.rel_tol * abs(est) + cfg.abs_tol:
                return est
        prev = est
    raise QuadratureNonConvergence(prev, err, f"truncated-mass quadrature failed (eps={eps})")


def rate_measure_diagnostics(phi, cfg=None, eps_grid=(1e-1, 1e-2, 1e-3, 1e-4)):
    """Check the properness requirements of the rate measure numerically."""
    cfg = cfg or QuadratureConfig()
    eps_grid = tuple(eps_grid)
    if any(not 0 < e <= 0.5 for e in eps_grid):
        raise ValueError("eps_grid entries must lie in (0, 0.5]")
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("eps_grid must be strictly decreasing")
    m1, e1 = _integrate_rate_moment(phi, cfg, 1)
    m2, e2 = _integrate_rate_moment(phi, cfg, 2)
    masses = tuple(truncated_rate_mass(phi, e, cfg) for e in eps_grid)
    return RateMeasureDiagnostics((m1, m2), (e1, e2), eps_grid, masses)
