"""Shared builders for the test suite."""

import numpy as np
from scipy.optimize import linear_sum_assignment

from mh_phone.corpus import Corpus, SignSequence
from mh_phone.params import ModelParams


def random_params(rng, n_states, n_features):
    """A valid random model: Dirichlet rows, spread means, positive variances."""
    pi = rng.dirichlet(np.ones(n_states))
    trans = rng.dirichlet(np.ones(n_states), size=n_states)
    mu = rng.normal(0.0, 2.0, size=(n_states, n_features))
    mu[0] = 0.0
    sigma = rng.uniform(0.05, 2.0, size=n_features)
    return ModelParams(pi=pi, trans=trans, mu=mu, sigma=sigma)


def random_corpus(rng, m, p, d, pad=True):
    """Random corpus; with pad=True each sign gets a random true length."""
    signs = []
    for i in range(m):
        length = int(rng.integers(1, p + 1)) if pad else p
        block = np.zeros((p, d))
        block[:length] = rng.normal(0.0, 1.0, size=(length, d))
        signs.append(SignSequence(gloss=f"r{i:03d}", features=block,
                                  true_length=length))
    return Corpus(signs)


def corpus_from_features(feats):
    """Wrap an (M, P, D) array of nonzero frames as full-length signs."""
    feats = np.asarray(feats, dtype=float)
    m, p, _ = feats.shape
    return Corpus([SignSequence(gloss=f"w{i:03d}", features=feats[i], true_length=p)
                   for i in range(m)])


def raw_frame(head=(0.0, 0.0), rsh=(1.0, 0.0), lsh=(-1.0, 0.0), relb=(2.0, 1.0),
              lelb=(-2.0, 1.0), rwr=(3.0, 2.0), lwr=(-3.0, 2.0)):
    return {"head": head, "right_shoulder": rsh, "left_shoulder": lsh,
            "right_elbow": relb, "left_elbow": lelb,
            "right_wrist": rwr, "left_wrist": lwr}


def align_states(fit_mu, true_mu):
    """Index array mapping truth order to fitted states by matching mu rows.

    State 0 maps to itself (both prototypes are pinned at zero); the rest are
    matched by minimum total Euclidean distance.
    """
    cost = np.linalg.norm(fit_mu[1:, None, :] - true_mu[None, 1:, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.zeros(fit_mu.shape[0], dtype=int)
    for r, c in zip(rows, cols):
        perm[c + 1] = r + 1
    return perm
