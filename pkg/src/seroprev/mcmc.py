"""Adaptive random-walk Metropolis for :class:`~seroprev.bayes.JointModel`.

Each chain updates one coordinate at a time on an unconstrained scale:

* ``theta_i = lb_i + (1 - lb_i) * logistic(z_i)``
* ``sensitivity = logistic(z)``, ``specificity = logistic(z)``

The log-Jacobian of these maps is added to the target. Per-coordinate step
sizes follow a Robbins-Monro recursion during warmup and are then frozen.
Every chain draws from its own stream seeded by ``(seed, chain_index)``, so
output does not depend on how chains are scheduled.
"""
from __future__ import annotations

import logging
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .bayes import JointModel, log_prior_theta
from .model import binom_logpmf

logger = logging.getLogger(__name__)

RHAT_THRESHOLD = 1.01


class InvalidInit(RuntimeError):
    pass


class InsufficientDraws(ValueError):
    pass


class NonConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class McmcConfig:
    n_chains: int = 4
    n_warmup: int = 1000
    n_draws: int = 1000
    seed: int = 20201030
    target_accept: float = 0.4
    initial_step: float = 0.5

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        if self.n_warmup < 0:
            raise ValueError("n_warmup must be >= 0")
        if self.n_draws < 1:
            raise ValueError("n_draws must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if not self.initial_step > 0.0:
            raise ValueError("initial_step must be positive")


@dataclass
class PosteriorSamples:
    draws: np.ndarray          # (n_chains * n_draws, K + 2)
    chain_ids: np.ndarray      # (n_chains * n_draws,)
    param_names: list
    lower_bounds: list         # theta truncation points, one per survey

    @property
    def n_surveys(self) -> int:
        return len(self.lower_bounds)

    @property
    def n_chains(self) -> int:
        return len(np.unique(self.chain_ids))

    def by_chain(self) -> np.ndarray:
        """Draws reshaped to (n_chains, n_draws, n_params)."""
        chains = np.unique(self.chain_ids)
        return np.stack([self.draws[self.chain_ids == c] for c in chains])

    def in_support(self) -> np.ndarray:
        """Row mask: every theta at or above its bound and both accuracies in (0, 1)."""
        k = self.n_surveys
        th = self.draws[:, :k]
        acc = self.draws[:, k:]
        ok = np.all(th >= np.asarray(self.lower_bounds), axis=1) & np.all(th <= 1.0, axis=1)
        return ok & np.all((acc > 0.0) & (acc < 1.0), axis=1)


@dataclass
class Diagnostics:
    rhat: np.ndarray
    ess_bulk: np.ndarray
    accept_rate: np.ndarray
    param_names: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return bool(np.all(self.rhat < RHAT_THRESHOLD))

    def as_dict(self) -> dict:
        return {
            "rhat": dict(zip(self.param_names, map(float, self.rhat))),
            "ess_bulk": dict(zip(self.param_names, map(float, self.ess_bulk))),
            "accept_rate": [float(a) for a in self.accept_rate],
            "converged": self.converged,
        }


def _log_sigmoid(z: float) -> float:
    if z >= 0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


def _sigmoid_pair(z: float) -> tuple[float, float]:
    """(logistic(z), 1 - logistic(z)), both to full relative precision."""
    if z >= 0:
        e = math.exp(-z)
        return 1.0 / (1.0 + e), e / (1.0 + e)
    e = math.exp(z)
    return e / (1.0 + e), 1.0 / (1.0 + e)


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


class _Chain:
    """One chain's mutable state. The target is the log posterior plus log-Jacobian."""

    def __init__(self, model: JointModel, z0):
        self.model = model
        self.k = model.n_surveys
        self.lbs = model.lower_bounds
        self.log_span = [math.log1p(-lb) for lb in self.lbs]
        self.z = list(z0)
        self.theta = [0.0] * self.k
        self.theta_lp = [0.0] * self.k   # prior + jacobian per theta
        for i in range(self.k):
            self.theta[i], self.theta_lp[i] = self._theta_terms(i, self.z[i])
        self.sens, self.one_m_sens, self.sens_lp = self._acc_terms(model.sens_prior, self.z[self.k])
        self.spec, self.one_m_spec, self.spec_lp = self._acc_terms(model.spec_prior, self.z[self.k + 1])
        self.loglik = [self._loglik(i, self.theta[i], self.sens, self.one_m_sens,
                                    self.spec, self.one_m_spec) for i in range(self.k)]

    def _theta_terms(self, i, z):
        s, _ = _sigmoid_pair(z)
        lb = self.lbs[i]
        theta = lb + (1.0 - lb) * s
        if not 0.0 < theta < 1.0:
            return theta, -math.inf
        jac = self.log_span[i] + _log_sigmoid(z) + _log_sigmoid(-z)
        return theta, log_prior_theta(self.model.theta_priors[i], theta) + jac

    @staticmethod
    def _acc_terms(prior, z):
        p, q = _sigmoid_pair(z)
        if p <= 0.0 or q <= 0.0:
            return p, q, -math.inf
        return p, q, prior.logpdf(p, q) + _log_sigmoid(z) + _log_sigmoid(-z)

    def _loglik(self, i, theta, sens, one_m_sens, spec, one_m_spec):
        s = self.model.surveys[i]
        pos = theta * sens + (1.0 - theta) * one_m_spec
        neg = theta * one_m_sens + (1.0 - theta) * spec
        return binom_logpmf(s.x_positive, s.n_samples, pos, neg)

    def log_target(self) -> float:
        return math.fsum(self.loglik) + math.fsum(self.theta_lp) + self.sens_lp + self.spec_lp

    def point(self) -> list:
        return self.theta + [self.sens, self.spec]

    def update(self, j: int, z_new: float, log_u: float) -> tuple[bool, float]:
        """Metropolis step on coordinate j. Returns (accepted, acceptance probability)."""
        k = self.k
        if j < k:
            theta, lp = self._theta_terms(j, z_new)
            if lp == -math.inf:
                return False, 0.0
            ll = self._loglik(j, theta, self.sens, self.one_m_sens, self.spec, self.one_m_spec)
            delta = (ll - self.loglik[j]) + (lp - self.theta_lp[j])
            accept, prob = _decide(delta, log_u)
            if accept:
                self.z[j], self.theta[j], self.theta_lp[j], self.loglik[j] = z_new, theta, lp, ll
            return accept, prob
        prior = self.model.sens_prior if j == k else self.model.spec_prior
        p, q, lp = self._acc_terms(prior, z_new)
        if lp == -math.inf:
            return False, 0.0
        if j == k:
            lls = [self._loglik(i, self.theta[i], p, q, self.spec, self.one_m_spec) for i in range(k)]
            old_lp = self.sens_lp
        else:
            lls = [self._loglik(i, self.theta[i], self.sens, self.one_m_sens, p, q) for i in range(k)]
            old_lp = self.spec_lp
        delta = math.fsum(lls) - math.fsum(self.loglik) + (lp - old_lp)
        accept, prob = _decide(delta, log_u)
        if accept:
            self.z[j] = z_new
            self.loglik = lls
            if j == k:
                self.sens, self.one_m_sens, self.sens_lp = p, q, lp
            else:
                self.spec, self.one_m_spec, self.spec_lp = p, q, lp
        return accept, prob


def _decide(delta: float, log_u: float) -> tuple[bool, float]:
    if math.isnan(delta):
        return False, 0.0
    prob = 1.0 if delta >= 0 else math.exp(delta)
    return log_u < delta, prob


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chain)]))


def _initial_z(model: JointModel, rng: np.random.Generator, max_tries: int = 1000) -> list:
    """Draw a start from the priors, mapped to the unconstrained scale."""
    for _ in range(max_tries):
        z = []
        for lb in model.lower_bounds:
            u_lo = float(special.betainc(0.5, 0.5, lb))
            u = u_lo + (1.0 - u_lo) * rng.random()
            theta = float(special.betaincinv(0.5, 0.5, u))
            frac = (theta - lb) / (1.0 - lb)
            z.append(_logit(frac) if 0.0 < frac < 1.0 else math.nan)
        for prior in (model.sens_prior, model.spec_prior):
            p = float(rng.beta(prior.alpha, prior.beta))
            z.append(_logit(p) if 0.0 < p < 1.0 else math.nan)
        if not all(math.isfinite(v) for v in z):
            continue
        if math.isfinite(_Chain(model, z).log_target()):
            return z
    raise InvalidInit(f"no finite-density starting point found in {max_tries} attempts")


def _run_chain(model: JointModel, config: McmcConfig, chain: int):
    rng = chain_rng(config.seed, chain)
    state = _Chain(model, _initial_z(model, rng))
    dim = model.n_params
    n_iter = config.n_warmup + config.n_draws
    noise = rng.standard_normal((n_iter, dim)).tolist()
    log_u = np.log(rng.random((n_iter, dim))).tolist()
    log_step = [math.log(config.initial_step)] * dim
    step = [config.initial_step] * dim
    target = config.target_accept
    out = np.empty((config.n_draws, dim))
    n_accept = 0
    for it in range(n_iter):
        warm = it < config.n_warmup
        if warm:
            gain = (it + 1) ** -0.6
        nz, lu = noise[it], log_u[it]
        for j in range(dim):
            accepted, prob = state.update(j, state.z[j] + step[j] * nz[j], lu[j])
            if warm:
                log_step[j] += gain * (prob - target)
                step[j] = math.exp(log_step[j])
            elif accepted:
                n_accept += 1
        if not warm:
            out[it - config.n_warmup] = state.point()
    return out, n_accept / (config.n_draws * dim), step


def sample(model: JointModel, config: McmcConfig = McmcConfig(), n_jobs: int = 1,
           warn: bool = True) -> tuple[PosteriorSamples, Diagnostics]:
    """Run ``config.n_chains`` chains and return pooled post-warmup draws.

    ``n_jobs > 1`` runs chains in parallel processes; the result is identical.
    A :class:`NonConvergenceWarning` is issued when any split-Rhat reaches 1.01.
    """
    if n_jobs == 1:
        results = [_run_chain(model, config, c) for c in range(config.n_chains)]
    else:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_chain)(model, config, c) for c in range(config.n_chains))
    draws = np.concatenate([r[0] for r in results])
    chain_ids = np.repeat(np.arange(config.n_chains), config.n_draws)
    samples = PosteriorSamples(draws, chain_ids, model.param_names, model.lower_bounds)
    accept = np.array([r[1] for r in results])
    for c, r in enumerate(results):
        logger.debug("chain %d: accept %.3f, steps %s", c, r[1], np.round(r[2], 4))
    if config.n_chains >= 2 and config.n_draws >= 4:
        diag = diagnostics(samples)
        diag.accept_rate = accept
    else:
        nan = np.full(model.n_params, np.nan)
        diag = Diagnostics(nan, nan.copy(), accept, model.param_names)
    if warn and config.n_chains >= 2 and not diag.converged:
        bad = [n for n, r in zip(model.param_names, diag.rhat) if not r < RHAT_THRESHOLD]
        warnings.warn(f"split-Rhat >= {RHAT_THRESHOLD} for {bad}", NonConvergenceWarning,
                      stacklevel=2)
    return samples, diag


# -- diagnostics -------------------------------------------------------------

def _split(x: np.ndarray) -> np.ndarray:
    """(chains, draws) -> (2 * chains, draws // 2); a middle draw is dropped when odd."""
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, x.shape[1] - half:]], axis=0)


def split_rhat(x: np.ndarray) -> float:
    """Split-Rhat of a (chains, draws) array.

    Zero within-chain variance gives 1.0 if the chains agree and inf if not.
    """
    s = _split(np.asarray(x, dtype=float))
    m, n = s.shape
    if np.all(np.ptp(s, axis=1) == 0.0):
        return 1.0 if np.ptp(s) == 0.0 else math.inf
    means = s.mean(axis=1)
    w = s.var(axis=1, ddof=1).mean()
    b = n * means.var(ddof=1)
    if w == 0.0:
        return math.inf
    var_plus = (n - 1) / n * w + b / n
    return float(math.sqrt(var_plus / w))


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    size = 2 ** int(math.ceil(math.log2(2 * n)))
    centered = x - x.mean(axis=-1, keepdims=True)
    f = np.fft.rfft(centered, n=size, axis=-1)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=-1)[..., :n]
    return acov / n


def ess(x: np.ndarray) -> float:
    """Multi-chain effective sample size with Geyer's initial positive sequence."""
    x = np.asarray(x, dtype=float)
    m, n = x.shape
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1.0)
    w = chain_var.mean()
    var_plus = w * (n - 1.0) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus == 0.0:
        return float(m * n)
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # sum consecutive pairs until the first negative pair sum
    total = 0.0
    prev = math.inf
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        pair = min(pair, prev)     # monotone sequence estimator
        total += pair
        prev = pair
        t += 2
    tau = 2.0 * total - 1.0
    tau = max(tau, 1.0 / math.log10(m * n)) if m * n > 1 else max(tau, 1.0)
    return float(m * n / tau)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    flat = x.ravel()
    ranks = stats.rankdata(flat, method="average")
    z = stats.norm.ppf((ranks - 0.375) / (flat.size + 0.25))
    return z.reshape(x.shape)


def ess_bulk(x: np.ndarray) -> float:
    """ESS of rank-normalized split chains."""
    s = _split(np.asarray(x, dtype=float))
    if np.ptp(s) == 0.0:
        return float(s.size)
    return ess(_rank_normalize(s))


def diagnostics(samples: PosteriorSamples) -> Diagnostics:
    chains = samples.by_chain()
    m, n, d = chains.shape
    if m < 2 or n < 4:
        raise InsufficientDraws("diagnostics need at least 2 chains of 4 draws")
    rhat = np.array([split_rhat(chains[:, :, j]) for j in range(d)])
    eb = np.array([ess_bulk(chains[:, :, j]) for j in range(d)])
    return Diagnostics(rhat, eb, np.full(m, np.nan), list(samples.param_names))


# -- summaries ---------------------------------------------------------------

@dataclass
class ParameterSummary:
    mean: float
    sd: float
    q025: float
    q975: float


@dataclass
class PosteriorSummary:
    param_names: list
    stats: dict          # name -> ParameterSummary on the proportion scale
    scaled: dict         # theta name -> ParameterSummary in persons
    population: int

    def __getitem__(self, name) -> ParameterSummary:
        return self.stats[name]

    @property
    def theta_names(self) -> list:
        return [n for n in self.param_names if n.startswith("theta_")]


def _summ(x: np.ndarray) -> ParameterSummary:
    q025, q975 = np.quantile(x, [0.025, 0.975])
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return ParameterSummary(float(x.mean()), sd, float(q025), float(q975))


def summarize(samples: PosteriorSamples, population: int = 1) -> PosteriorSummary:
    """Pooled mean, sd and central 95% interval per parameter; theta also in persons."""
    if samples.draws.shape[0] == 0:
        raise ValueError("no draws to summarize")
    stats_, scaled = {}, {}
    for j, name in enumerate(samples.param_names):
        col = samples.draws[:, j]
        stats_[name] = _summ(col)
        if name.startswith("theta_"):
            scaled[name] = _summ(col * population)
    return PosteriorSummary(list(samples.param_names), stats_, scaled, int(population))


def detection_ratio(summary: PosteriorSummary, confirmed):
    """Posterior-mean infected persons per confirmed case, one value per survey.

    ``confirmed`` is a scalar or a sequence with one count per theta.
    """
    means = np.array([summary.scaled[n].mean for n in summary.theta_names])
    confirmed = np.asarray(confirmed, dtype=float)
    if np.any(confirmed < 1):
        raise ValueError("confirmed counts must be >= 1")
    return means / confirmed


def default_seed_from_env():
    """Seed from ``SEROPREV_SEED``, or None when unset."""
    env = os.environ.get("SEROPREV_SEED")
    return int(env) if env else None
