"""Containers for model parameters, hyperparameters and hard assignments.

State 0 is the end state: its prototype is pinned to the zero vector, which
is exactly the padding token appended to every sign. All probability vectors
must sum to 1 within 1e-9 and the shared `sigma` holds per-dimension
variances of the diagonal emission Gaussian.
"""

from dataclasses import dataclass, fields

import numpy as np

from .errors import InvariantViolation

_SUM_TOL = 1e-9


def _frozen_array(value, dtype=float):
    arr = np.array(value, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters shared by the model and the baselines.

    alpha: symmetric Dirichlet concentration for pi and the rows of T;
    mu_mu / sigma_mu: mean and std of the Gaussian prior on prototype means;
    mu_sigma / sigma_sigma: location and scale of the LogNormal prior on the
    emission variances.
    """

    alpha: float = 1.0
    mu_mu: float = 0.0
    sigma_mu: float = 10.0
    mu_sigma: float = 1.0
    sigma_sigma: float = 10.0

    def __post_init__(self):
        if not (self.alpha > 0):
            raise InvariantViolation("alpha must be positive")
        if not (self.sigma_mu > 0):
            raise InvariantViolation("sigma_mu must be positive")
        if not (self.sigma_sigma > 0):
            raise InvariantViolation("sigma_sigma must be positive")

    def to_dict(self):
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})


def _check_stochastic(vec, what):
    if np.any(vec < 0):
        raise InvariantViolation(f"{what} has negative entries")
    if abs(float(vec.sum()) - 1.0) > _SUM_TOL:
        raise InvariantViolation(f"{what} does not sum to 1 (got {vec.sum():.12f})")


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the sequence model.

    pi: (N,) start distribution; trans: (N, N) row-stochastic transitions;
    mu: (N, D) prototype means with row 0 fixed at zero; sigma: (D,)
    shared emission variances.
    """

    pi: np.ndarray
    trans: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        pi = _frozen_array(self.pi)
        trans = _frozen_array(self.trans)
        mu = _frozen_array(self.mu)
        sigma = _frozen_array(self.sigma)
        n = pi.shape[0]
        if pi.ndim != 1 or n < 1:
            raise InvariantViolation("pi must be a non-empty vector")
        if trans.shape != (n, n):
            raise InvariantViolation("trans must be square and match len(pi)")
        if mu.ndim != 2 or mu.shape[0] != n:
            raise InvariantViolation("mu must have one row per state")
        if sigma.shape != (mu.shape[1],):
            raise InvariantViolation("sigma must have one entry per feature")
        for arr, what in ((pi, "pi"), (trans, "trans"), (mu, "mu"), (sigma, "sigma")):
            if not np.all(np.isfinite(arr)):
                raise InvariantViolation(f"{what} has non-finite entries")
        _check_stochastic(pi, "pi")
        for j in range(n):
            _check_stochastic(trans[j], f"trans row {j}")
        if np.any(mu[0] != 0.0):
            raise InvariantViolation("mu row 0 (end state) must be exactly zero")
        if np.any(sigma <= 0):
            raise InvariantViolation("sigma must be strictly positive")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def n_features(self) -> int:
        return self.mu.shape[1]

    def to_dict(self):
        return {
            "pi": self.pi.tolist(),
            "trans": self.trans.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(pi=data["pi"], trans=data["trans"], mu=data["mu"], sigma=data["sigma"])


@dataclass(frozen=True)
class Assignment:
    """Hard state labels, one per frame: labels[w, f] in [0, N)."""

    labels: np.ndarray

    def __post_init__(self):
        labels = _frozen_array(self.labels, dtype=np.int64)
        if labels.ndim != 2:
            raise InvariantViolation("labels must be a signs-by-frames matrix")
        if np.any(labels < 0):
            raise InvariantViolation("labels must be non-negative state indices")
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self):
        return self.labels.shape


@dataclass
class FitReport:
    """Outcome of an EM run: iteration count, objective trace, stop reason."""

    iterations: int
    log_joint_trace: list
    converged: bool


def make_truth_params(n_states, n_features=14, seed=0, *, self_stick=0.85,
                      end_prob=0.06, separation=2.0, sigma=0.05,
                      head_at_origin=True) -> ModelParams:
    """Construct a well-separated ground-truth model for synthetic corpora.

    State 0 is absorbing (signs end and stay ended). Prototype rows are drawn
    until every pairwise distance, including the distance to the zero end
    prototype, is at least `separation`. With head_at_origin the first two
    feature dimensions are pinned to zero, matching normalized real data.
    """
    if n_states < 2:
        raise InvariantViolation("need the end state plus at least one prototype")
    if n_features < 1:
        raise InvariantViolation("need at least one feature dimension")
    rng = np.random.default_rng(seed)
    n, d = n_states, n_features

    spread = max(float(separation), 1.0)
    mu = None
    for _ in range(1000):
        cand = rng.normal(0.0, spread, size=(n - 1, d))
        if head_at_origin and d >= 2:
            cand[:, :2] = 0.0
        pts = np.vstack([np.zeros(d), cand])
        dists = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= separation:
            mu = pts
            break
    if mu is None:
        raise InvariantViolation("could not place prototypes at the requested separation")

    pi = np.zeros(n)
    pi[1:] = rng.dirichlet(np.full(n - 1, 5.0))
    pi /= pi.sum()

    trans = np.zeros((n, n))
    trans[0, 0] = 1.0
    for i in range(1, n):
        stay = float(self_stick)
        leave = 1.0 - stay
        row = np.zeros(n)
        row[i] = stay
        others = [j for j in range(1, n) if j != i]
        if others:
            to_end = min(float(end_prob), leave)
            row[0] = to_end
            rest = leave - to_end
            if rest > 0:
                row[others] = rest * rng.dirichlet(np.full(len(others), 3.0))
        else:
            row[0] = leave
        trans[i] = row / row.sum()

    return ModelParams(pi=pi, trans=trans, mu=mu, sigma=np.full(d, float(sigma)))
