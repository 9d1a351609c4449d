"""Shared MAP estimation primitives.

The sequence model and the frame-mixture baselines use the same conjugate
updates for categorical weights and Gaussian prototype means, and the same
1-D search for the shared diagonal variances. Keeping them here means the
ablations differ from the full model only in how frames are assigned.

Conventions: `sigma` vectors hold per-dimension *variances* of the diagonal
emission Gaussian, and Dirichlet concentrations are scalar (symmetric).
"""

import math

import numpy as np

# Search bracket for log-variance; doubles as a numerical floor/ceiling.
LOG_SIGMA_LO = -8.0
LOG_SIGMA_HI = 8.0

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(fn, lo, hi, tol=1e-8):
    """Argmax of a unimodal function on [lo, hi], within tol.

    Returns the midpoint of the final bracket. Boundary maxima are fine:
    the bracket simply collapses onto the boundary.
    """
    x1 = hi - _INV_GOLDEN * (hi - lo)
    x2 = lo + _INV_GOLDEN * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while (hi - lo) > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_GOLDEN * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_GOLDEN * (hi - lo)
            f2 = fn(x2)
    return 0.5 * (lo + hi)


def safe_log(p):
    """Elementwise log with log(0) = -inf and no warnings."""
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, -np.inf)
    np.log(p, out=out, where=p > 0)
    return out


def dirichlet_map(counts, alpha):
    """Posterior mode of a categorical distribution under a Dir(alpha) prior.

    Weights are (counts + alpha - 1) clipped at zero and renormalized. When
    every weight clips to zero (no observations at alpha = 1) the mode is
    taken as uniform.
    """
    counts = np.asarray(counts, dtype=float)
    w = np.maximum(counts + alpha - 1.0, 0.0)
    total = w.sum()
    if total <= 0.0:
        return np.full(counts.shape, 1.0 / counts.shape[-1])
    return w / total


def dirichlet_logpdf(probs, alpha):
    """log Dir(probs | alpha * 1_N).

    At alpha = 1 the density is the constant Gamma(N), so zero entries in
    `probs` contribute nothing; for alpha != 1 they give -inf as they should.
    """
    probs = np.asarray(probs, dtype=float)
    n = probs.shape[-1]
    norm = math.lgamma(n * alpha) - n * math.lgamma(alpha)
    if alpha == 1.0:
        return norm
    return norm + float((alpha - 1.0) * safe_log(probs).sum())


def normal_logpdf(x, mean, var):
    """Elementwise log N(x | mean, var)."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def lognormal_logpdf(x, mu, sigma):
    """Elementwise log LogNormal(x | mu, sigma) for x > 0."""
    lx = np.log(np.asarray(x, dtype=float))
    return -lx - math.log(sigma) - 0.5 * math.log(2.0 * np.pi) - (lx - mu) ** 2 / (2.0 * sigma * sigma)


def emission_loglik(frames, mu, sigma):
    """Log density of each frame under each prototype's diagonal Gaussian.

    frames: (..., D); mu: (N, D); sigma: (D,) variances. Returns (..., N).
    """
    x = np.asarray(frames, dtype=float)
    diff = x[..., None, :] - mu
    maha = np.sum(diff * diff / sigma, axis=-1)
    log_norm = np.sum(np.log(2.0 * np.pi * sigma))
    return -0.5 * (log_norm + maha)


def map_means(sums, counts, sigma, mu_mu, sigma_mu):
    """Conjugate MAP of Gaussian prototype means, one row per component.

    sums: (K, D) sums of assigned frames; counts: (K,); sigma: (D,) emission
    variances; prior N(mu_mu, sigma_mu^2) iid per dimension. Components with
    no assigned frames land exactly on the prior mean.
    """
    sums = np.asarray(sums, dtype=float)
    counts = np.asarray(counts, dtype=float)[:, None]
    prior_prec = 1.0 / (sigma_mu * sigma_mu)
    num = sums / sigma + mu_mu * prior_prec
    den = counts / sigma + prior_prec
    return num / den


def map_sigma(sq_sums, n_obs, mu_sigma, sigma_sigma, tol=1e-8):
    """MAP of the shared per-dimension emission variances.

    For each dimension d, maximizes the Gaussian likelihood of the n_obs
    assigned residuals (sum of squares sq_sums[d]) times a
    LogNormal(mu_sigma, sigma_sigma) prior. The posterior is unimodal in
    log-variance, searched by golden section on [LOG_SIGMA_LO, LOG_SIGMA_HI].
    """
    sq_sums = np.asarray(sq_sums, dtype=float)
    out = np.empty(sq_sums.shape[0])
    prior_scale = 2.0 * sigma_sigma * sigma_sigma
    for d, ssr in enumerate(sq_sums):

        def objective(t, ssr=ssr):
            # Emission term plus prior, dropping everything free of t.
            return (-0.5 * n_obs * t - 0.5 * ssr * math.exp(-t)
                    - t - (t - mu_sigma) ** 2 / prior_scale)

        out[d] = math.exp(golden_section_max(objective, LOG_SIGMA_LO, LOG_SIGMA_HI, tol=tol))
    return out


def markov_chain_sample(rng, pi, trans, n_chains, length):
    """Ancestral sampling of n_chains state chains of the given length."""
    states = np.empty((n_chains, length), dtype=np.int64)
    cdf0 = np.cumsum(np.asarray(pi, dtype=float))
    cdf0[-1] = 1.0
    states[:, 0] = np.searchsorted(cdf0, rng.random(n_chains), side="right")
    cdf = np.cumsum(np.asarray(trans, dtype=float), axis=1)
    cdf[:, -1] = 1.0
    for f in range(1, length):
        rows = cdf[states[:, f - 1]]
        states[:, f] = (rows <= rng.random(n_chains)[:, None]).sum(axis=1)
    return states


def relative_change(new, old):
    """|new - old| scaled by max(1, |old|); used by the EM stopping rule."""
    return abs(new - old) / max(1.0, abs(old))
