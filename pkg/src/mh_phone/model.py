"""The hold-prototype sequence model and its hard-EM MAP estimator.

Each sign is a Markov chain over N states. State n emits frames from
N(mu_n, diag(sigma)) with a shared diagonal variance; state 0 is the end
state whose prototype is the zero padding token. Training alternates a hard
E-step (greedy one-pass by default, exact Viterbi on request) with
closed-form MAP M-steps for pi, T and mu and a golden-section search for
sigma, in that order. The objective is the log joint density of parameters,
assignments and frames under the priors:

    sigma_d ~ LogNormal(mu_sigma, sigma_sigma)
    pi, T rows ~ Dir(alpha)
    mu_n (n > 0) ~ N(mu_mu, sigma_mu^2 I)
    c_0 ~ Cat(pi),  c_f ~ Cat(T[c_{f-1}]),  x_f ~ N(mu_{c_f}, diag(sigma))
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .corpus import Corpus, synth_corpus
from .errors import InvariantViolation, NotEnoughData
from .estimation import (dirichlet_logpdf, dirichlet_map, emission_loglik,
                         lognormal_logpdf, map_means, map_sigma, normal_logpdf,
                         relative_change, safe_log)
from .params import Assignment, FitReport, Hyperparams, ModelParams

SIGMA_INIT_FLOOR = 1e-3


def _farthest_points(rng, data, k):
    """Indices of k spread-out rows: a random start, then farthest-point picks."""
    chosen = [int(rng.integers(len(data)))]
    d2 = ((data - data[chosen[0]]) ** 2).sum(axis=1)
    d2[chosen[0]] = -1.0
    for _ in range(k - 1):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((data - data[nxt]) ** 2).sum(axis=1))
        d2[nxt] = -1.0
    return np.asarray(chosen)


def init_params(n_states, n_features, corpus: Corpus, seed=0) -> ModelParams:
    """Initial parameters: uniform pi and T, data-seeded prototypes.

    Prototype rows 1..N-1 are distinct non-padding frames chosen by
    farthest-point seeding; sigma starts at the per-dimension empirical std
    of the non-padding frames, floored at 1e-3.
    """
    if n_states < 2:
        raise InvariantViolation("n_states must be at least 2 (end state plus one prototype)")
    m, p, d = corpus.dims
    if d != n_features:
        raise InvariantViolation(f"corpus has {d} features, expected {n_features}")
    mask = np.arange(p)[None, :] < corpus.true_lengths[:, None]
    data = corpus.features[mask]
    if data.shape[0] < n_states - 1:
        raise NotEnoughData(
            f"{data.shape[0]} non-padding frames cannot seed {n_states - 1} prototypes")
    rng = np.random.default_rng(seed)
    mu = np.vstack([np.zeros(d), data[_farthest_points(rng, data, n_states - 1)]])
    sigma = np.maximum(data.std(axis=0), SIGMA_INIT_FLOOR)
    pi = np.full(n_states, 1.0 / n_states)
    trans = np.full((n_states, n_states), 1.0 / n_states)
    return ModelParams(pi=pi, trans=trans, mu=mu, sigma=sigma)


def _greedy_labels(params: ModelParams, frames: np.ndarray) -> np.ndarray:
    m, p, _ = frames.shape
    loglik = emission_loglik(frames, params.mu, params.sigma)
    log_pi = safe_log(params.pi)
    log_t = safe_log(params.trans)
    labels = np.empty((m, p), dtype=np.int64)
    labels[:, 0] = np.argmax(loglik[:, 0] + log_pi, axis=1)
    for f in range(1, p):
        labels[:, f] = np.argmax(loglik[:, f] + log_t[labels[:, f - 1]], axis=1)
    return labels


def _viterbi_labels(params: ModelParams, frames: np.ndarray) -> np.ndarray:
    m, p, _ = frames.shape
    n = params.n_states
    loglik = emission_loglik(frames, params.mu, params.sigma)
    log_t = safe_log(params.trans)
    back = np.empty((m, p, n), dtype=np.int64)
    alpha = safe_log(params.pi) + loglik[:, 0]
    for f in range(1, p):
        cand = alpha[:, :, None] + log_t[None, :, :]
        # argmax over the previous state; ties go to the lower index
        best_prev = np.argmax(cand, axis=1)
        back[:, f] = best_prev
        alpha = np.take_along_axis(cand, best_prev[:, None, :], axis=1)[:, 0, :] + loglik[:, f]
    labels = np.empty((m, p), dtype=np.int64)
    labels[:, -1] = np.argmax(alpha, axis=1)
    rows = np.arange(m)
    for f in range(p - 1, 0, -1):
        labels[:, f - 1] = back[rows, f, labels[:, f]]
    return labels


def _chunked(label_fn, params, frames, threads):
    m = frames.shape[0]
    if threads <= 1 or m < 2 * threads:
        return label_fn(params, frames)
    blocks = np.array_split(np.arange(m), threads)
    out = np.empty(frames.shape[:2], dtype=np.int64)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [(block, pool.submit(label_fn, params, frames[block])) for block in blocks]
        for block, fut in futures:
            out[block] = fut.result()
    return out


def e_step_greedy(params: ModelParams, corpus: Corpus, threads=1) -> Assignment:
    """One-pass hard assignment: each frame takes the best state given the
    previous frame's choice (posterior score = emission density times pi or
    the incoming transition probability). O(M P N) emission dot products."""
    return Assignment(labels=_chunked(_greedy_labels, params, corpus.features, threads))


def e_step_viterbi(params: ModelParams, corpus: Corpus, threads=1) -> Assignment:
    """Exact most-probable state path per sign via dynamic programming,
    O(M P N^2). Ties break toward the lower state index."""
    return Assignment(labels=_chunked(_viterbi_labels, params, corpus.features, threads))


def m_step(corpus: Corpus, assignment: Assignment, hyper: Hyperparams,
           prev: ModelParams) -> ModelParams:
    """Closed-form MAP coordinate updates in the order pi, T, mu, sigma.

    pi and the rows of T are Dirichlet posterior modes of the assignment
    counts (rows with no observations fall back to uniform). Prototype means
    are conjugate precision-weighted averages using the previous sigma, with
    row 0 pinned to zero; sigma maximizes the residual likelihood times its
    LogNormal prior by golden-section search in log-variance.
    """
    labels = assignment.labels
    m, p, d = corpus.dims
    if labels.shape != (m, p):
        raise InvariantViolation("assignment shape does not match the corpus")
    n = prev.n_states

    first_counts = np.bincount(labels[:, 0], minlength=n).astype(float)
    pi = dirichlet_map(first_counts, hyper.alpha)

    pair_index = (labels[:, :-1] * n + labels[:, 1:]).ravel()
    pair_counts = np.bincount(pair_index, minlength=n * n).reshape(n, n).astype(float)
    trans = np.stack([dirichlet_map(row, hyper.alpha) for row in pair_counts])

    flat_labels = labels.ravel()
    flat_frames = corpus.features.reshape(-1, d)
    counts = np.bincount(flat_labels, minlength=n).astype(float)
    sums = np.zeros((n, d))
    np.add.at(sums, flat_labels, flat_frames)
    mu = map_means(sums, counts, prev.sigma, hyper.mu_mu, hyper.sigma_mu)
    mu[0] = 0.0

    residuals = flat_frames - mu[flat_labels]
    sq_sums = (residuals * residuals).sum(axis=0)
    sigma = map_sigma(sq_sums, flat_frames.shape[0], hyper.mu_sigma, hyper.sigma_sigma)

    return ModelParams(pi=pi, trans=trans, mu=mu, sigma=sigma)


def joint_path_score(params: ModelParams, corpus: Corpus, assignment: Assignment) -> float:
    """Assignment-dependent part of the log joint: categorical terms for the
    state chains plus the emission log densities."""
    labels = assignment.labels
    loglik = emission_loglik(corpus.features, params.mu, params.sigma)
    emission = np.take_along_axis(loglik, labels[:, :, None], axis=2).sum()
    categorical = safe_log(params.pi)[labels[:, 0]].sum()
    categorical += safe_log(params.trans)[labels[:, :-1], labels[:, 1:]].sum()
    return float(emission + categorical)


def log_joint(params: ModelParams, corpus: Corpus, assignment: Assignment,
              hyper: Hyperparams) -> float:
    """Log density of every factor: priors on sigma, pi, T and mu, plus the
    categorical and emission terms of each assigned sign."""
    total = float(lognormal_logpdf(params.sigma, hyper.mu_sigma, hyper.sigma_sigma).sum())
    total += dirichlet_logpdf(params.pi, hyper.alpha)
    total += sum(dirichlet_logpdf(row, hyper.alpha) for row in params.trans)
    if params.n_states > 1:
        total += float(normal_logpdf(params.mu[1:], hyper.mu_mu,
                                     hyper.sigma_mu ** 2).sum())
    return total + joint_path_score(params, corpus, assignment)


_E_STEPS = {"greedy": e_step_greedy, "viterbi": e_step_viterbi}


def fit_em(corpus: Corpus, n_states, hyper: Hyperparams | None = None, *,
           max_iters=200, tol=1e-6, e_step="greedy", seed=0, threads=1):
    """Hard-EM MAP estimation. Returns (params, assignment, report).

    Stops when the relative change of the log joint drops below tol or after
    max_iters iterations. The report's trace holds one log-joint value per
    iteration; with the exact Viterbi E-step it is non-decreasing.
    """
    if hyper is None:
        hyper = Hyperparams()
    if e_step not in _E_STEPS:
        raise InvariantViolation(f"e_step must be one of {sorted(_E_STEPS)}, got '{e_step}'")
    step = _E_STEPS[e_step]
    _, _, d = corpus.dims
    params = init_params(n_states, d, corpus, seed=seed)
    assignment = None
    trace: list[float] = []
    previous = None
    rel = math.inf
    iterations = 0
    while iterations < max_iters:
        assignment = step(params, corpus, threads=threads)
        params = m_step(corpus, assignment, hyper, params)
        value = log_joint(params, corpus, assignment, hyper)
        trace.append(value)
        iterations += 1
        rel = math.inf if previous is None else relative_change(value, previous)
        previous = value
        if not (rel > tol):
            break
    report = FitReport(iterations=iterations, log_joint_trace=trace,
                       converged=bool(rel < tol))
    return params, assignment, report


def sample(params: ModelParams, n_signs, n_frames=25, seed=0,
           exact_end_token=True) -> Corpus:
    """Draw a corpus from the model by ancestral sampling."""
    corpus, _ = synth_corpus(params, n_signs, seed, n_frames=n_frames,
                             exact_end_token=exact_end_token, gloss_prefix="sample")
    return corpus
