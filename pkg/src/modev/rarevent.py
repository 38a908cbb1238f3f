"""Rare-event probabilities for estimator deviations, by importance sampling.

Events are deviations of size u_n in the standardized parameter scale:
W = I(theta0)^{1/2} (estimate - theta_gen) / u_n landing in an open region,
with theta_gen = theta0 + u_n b.  Their probabilities decay like
exp(-n u_n^2 / 2 * inf_{x in region} |x|^2), so everything here works in
the log domain: parameter-shift exponential tilting with exact likelihood
ratio weights, logsumexp accumulation, and a one-sided bound instead of a
point estimate when no hit is observed.

Determinism contract: replication r of schedule point i under master seed s
draws from numpy Generator(seed=[s, i, r]).  Chunk sizes depend only on the
per-replication draw count and partial results are combined in chunk order,
so output is byte-identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps
from scipy.special import logsumexp

from .errors import (
    BudgetError,
    DegenerateWeightsWarning,
    DomainError,
    GridError,
    TiltDomainError,
)
from .families import ParametricFamily, fisher_information
from .estimators import LossSpec, PriorSpec
from .regions import RegionSpec, rate_functional
from .sampling import rep_rng, run_chunks

_PILOT_BASE = 2**33  # replication indices for pilot draws, disjoint from main runs
_PILOT_REPS = 400
_PILOT_B_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
_ZERO_HIT_NUMERATOR = 3.0  # one-sided ~95% bound when no replication hits


# ---------------------------------------------------------------------------
# Schedules, budgets, results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    n_reps: int = 100_000
    max_total_draws: int = 10**9
    min_reps: int = 1000


@dataclass(frozen=True)
class DeviationSchedule:
    """u_n = c n^{-alpha}; alpha in (0, 1/2) is the moderate zone, alpha = 0
    keeps u fixed for the large-deviation sweeps."""

    n_values: tuple
    alpha: float
    c: float = 1.0
    b: Optional[np.ndarray] = None

    def __post_init__(self):
        ns = tuple(int(v) for v in self.n_values)
        if len(ns) == 0 or any(v < 2 for v in ns):
            raise GridError("n_values must be nonempty with entries >= 2")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise GridError("n_values must be strictly increasing")
        object.__setattr__(self, "n_values", ns)
        if not (0.0 <= self.alpha < 0.5):
            raise GridError("alpha must lie in [0, 1/2)")
        if not self.c > 0:
            raise GridError("c must be positive")
        if self.b is not None:
            object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)))

    def u_of(self, n: int) -> float:
        return self.c * float(n) ** (-self.alpha)


@dataclass(frozen=True)
class ProbEstimate:
    p_hat: float
    log_p: float
    stderr_log: float
    method: str
    n_reps: int
    seed: int
    upper_bound: bool = False  # True when log_p is a no-hit bound, not an estimate


@dataclass(frozen=True)
class RatePoint:
    n: int
    u_n: float
    estimate: ProbEstimate

    @property
    def normalized_rate(self) -> float:
        return -self.estimate.log_p / (self.n * self.u_n**2 / 2.0)


@dataclass(frozen=True)
class RateCurve:
    points: tuple
    target: float  # inf over the region of |x|^2; nan for discrepancy curves
    label: str

    def normalized_rates(self) -> np.ndarray:
        return np.array([p.normalized_rate for p in self.points])


# ---------------------------------------------------------------------------
# Event descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MleEvent:
    region: RegionSpec


@dataclass(frozen=True)
class PsiEvent:
    region: RegionSpec


@dataclass(frozen=True)
class BayesEvent:
    region: RegionSpec
    prior: PriorSpec = field(default_factory=PriorSpec.flat)
    loss: LossSpec = field(default_factory=lambda: LossSpec.power(2.0))
    resolution: int = 256


@dataclass(frozen=True)
class PosteriorMassEvent:
    region: RegionSpec
    threshold: float = 0.5
    prior: PriorSpec = field(default_factory=PriorSpec.flat)
    resolution: int = 256


@dataclass(frozen=True)
class DiscrepancyEvent:
    """Couplings between estimators: the event is the coupling failing.

    kinds (delta scales the failure threshold):
      mle_vs_psi:  |I^{1/2}(mle - theta0) - 2 n^{-1/2} psi| > delta u_n
      lr_vs_wald:  |2 sum_xi - n (mle-theta_gen)' I (mle-theta_gen)| > 2 delta n u_n^2
      lr_vs_psi2:  |sum_xi - 2 |psi - sqrt(n) u_n b|^2| > delta n u_n^2
    """

    kind: str
    delta: float

    def __post_init__(self):
        if self.kind not in ("mle_vs_psi", "lr_vs_wald", "lr_vs_psi2"):
            raise GridError(f"unknown discrepancy kind {self.kind!r}")
        if not self.delta > 0:
            raise GridError("delta must be positive")


def _event_region(event) -> Optional[RegionSpec]:
    return getattr(event, "region", None)


# ---------------------------------------------------------------------------
# Chunk kernel (module level: it is pickled into worker processes)
# ---------------------------------------------------------------------------


def _theta_arg(fam, theta):
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    return t if fam.d > 1 else float(t[0])


def _loglik_matrix(fam, obs, thetas) -> np.ndarray:
    """(R, K) log-likelihoods of each replication row under each theta."""
    n = obs.shape[1]
    stats = fam.suff_stats(obs)
    if stats is not None:
        th = np.stack([np.atleast_1d(np.asarray(t, dtype=float)) for t in thetas])
        arg = th[:, 0] if fam.d == 1 else th
        return fam.loglik_from_stats(stats, n, arg)
    out = np.empty((obs.shape[0], len(thetas)))
    for k, t in enumerate(thetas):
        out[:, k] = np.sum(fam.log_density(obs, _theta_arg(fam, t)), axis=-1)
    return out


def _loglik_nodes(fam, stats, n, nodes) -> np.ndarray:
    """Log-likelihood on per-replication node grids: nodes (R, G), stats (R, 1).

    Elementwise counterpart of loglik_from_stats, which only takes a grid
    shared across replications.
    """
    s = stats[:, 0][:, None]
    if fam.name == "gaussian":
        return nodes * s - 0.5 * n * nodes**2
    if fam.name == "bernoulli":
        return s * np.log(nodes) + (n - s) * np.log1p(-nodes)
    if fam.name == "exponential":
        return n * np.log(nodes) - s * nodes
    raise DomainError(f"no sufficient-statistic grid likelihood for family {fam.name!r}")


def _loglik_per_rep(fam, obs, thetas) -> np.ndarray:
    """Log-likelihood of row r under its own parameter thetas[r]; (R,)."""
    stats = fam.suff_stats(obs)
    if stats is not None and fam.name in ("gaussian", "bernoulli", "exponential"):
        return _loglik_nodes(fam, stats, obs.shape[1], thetas[:, 0][:, None])[:, 0]
    if fam.obs_dim == 1:
        return np.sum(fam.log_density(obs, thetas[:, 0][:, None]), axis=-1)
    return np.sum(fam.log_density(obs, thetas[:, None, :]), axis=-1)


def _psi_matrix(fam, obs, theta0, inv_sqrt, threshold) -> np.ndarray:
    """psi = n^{-1/2} I^{-1/2} sum of truncated phi, per replication; (R, d)."""
    n = obs.shape[1]
    phi = np.asarray(fam.score_phi(obs, _theta_arg(fam, theta0)), dtype=float)
    if fam.d == 1:
        kept = np.where(np.abs(phi) < threshold, phi, 0.0)
        s = kept.sum(axis=1)[:, None]
    else:
        nrm = np.linalg.norm(phi, axis=-1)
        kept = np.where((nrm < threshold)[..., None], phi, 0.0)
        s = kept.sum(axis=1)
    return (s @ inv_sqrt.T) / math.sqrt(n)


def _grid_posterior(fam, obs, prior, resolution, n, u_n):
    """Per-replication posterior grids (suff-stat families, one dimension)."""
    if fam.d != 1:
        raise DomainError("replication posterior grids support one dimension only")
    stats = fam.suff_stats(obs)
    if stats is None:
        raise DomainError(f"family {fam.name!r} lacks sufficient statistics for grid posteriors")
    pilot = fam.mle_batch(obs)[:, 0]
    hw = max(10.0 / math.sqrt(n), 5.0 * u_n)
    dom = fam.theta_domain
    margin = 1e-9 * float(dom.width()[0])
    lo = np.clip(pilot - hw, dom.lo[0] + margin, dom.hi[0] - 2 * margin)
    hi = np.clip(pilot + hw, lo + margin, dom.hi[0] - margin)
    frac = np.linspace(0.0, 1.0, resolution)
    nodes = lo[:, None] + frac[None, :] * (hi - lo)[:, None]  # (R, G)
    lw = _loglik_nodes(fam, stats, n, nodes)
    if prior.kind == "gaussian":
        lw = lw - 0.5 * ((nodes - float(prior.mean[0])) / prior.sd) ** 2
    lw -= lw.max(axis=1, keepdims=True)
    w = np.exp(lw)
    w /= w.sum(axis=1, keepdims=True)
    return nodes, w


def _bayes_estimates(fam, obs, prior, loss, resolution, n, u_n) -> np.ndarray:
    nodes, w = _grid_posterior(fam, obs, prior, resolution, n, u_n)
    if loss.kind == "power" and loss.p == 2.0:
        return np.sum(w * nodes, axis=1)
    if loss.kind == "linear" or (loss.kind == "power" and loss.p == 1.0):
        # weighted median, linearly interpolated inside the crossing cell
        cum = np.cumsum(w, axis=1)
        j = np.argmax(cum >= 0.5, axis=1)
        rows = np.arange(nodes.shape[0])
        c1 = cum[rows, j]
        c0 = np.where(j > 0, cum[rows, np.maximum(j - 1, 0)], 0.0)
        x1 = nodes[rows, j]
        x0 = np.where(j > 0, nodes[rows, np.maximum(j - 1, 0)], nodes[:, 0])
        t = np.where(c1 > c0, (0.5 - c0) / np.maximum(c1 - c0, 1e-300), 0.0)
        return x0 + t * (x1 - x0)
    raise DomainError("replication Bayes kernels support squared or absolute loss")


def _indicator(fam, event, obs, ctx) -> np.ndarray:
    (theta0, theta_gen, n, u_n, b, eps, i_mat, i_sqrt, i_inv_sqrt) = ctx
    if isinstance(event, MleEvent):
        est = fam.mle_batch(obs)
        if est is None:
            raise DomainError(f"family {fam.name!r} lacks a batch estimator for MC kernels")
        w = (est - theta_gen[None, :]) @ i_sqrt.T / u_n
        return event.region.contains(w)
    if isinstance(event, PsiEvent):
        psi = _psi_matrix(fam, obs, theta0, i_inv_sqrt, eps / u_n)
        w = 2.0 * psi / (math.sqrt(n) * u_n) - (i_sqrt @ b)[None, :]
        return event.region.contains(w)
    if isinstance(event, BayesEvent):
        est = _bayes_estimates(fam, obs, event.prior, event.loss, event.resolution, n, u_n)
        w = (est[:, None] - theta_gen[None, :]) @ i_sqrt.T / u_n
        return event.region.contains(w)
    if isinstance(event, PosteriorMassEvent):
        mass = _posterior_masses(fam, event, obs, theta0, theta_gen, n, u_n, i_sqrt)
        return mass > event.threshold
    if isinstance(event, DiscrepancyEvent):
        return _discrepancy_indicator(fam, event, obs, ctx)
    raise DomainError(f"unknown event type {type(event).__name__}")


def _posterior_masses(fam, event, obs, theta0, theta_gen, n, u_n, i_sqrt) -> np.ndarray:
    reg = event.region
    if (
        fam.name == "gaussian"
        and event.prior.kind == "flat"
        and reg.shape == "half_space"
    ):
        # Conjugate truncated posterior N(xbar, 1/n) on the default sub-box.
        xbar = np.mean(obs, axis=1)
        hw = max(10.0 / math.sqrt(n), 5.0 * u_n)
        lo, hi = xbar - hw, xbar + hw
        sn = math.sqrt(n)
        a = float(reg.a[0])
        t = theta_gen[0] + u_n * reg.c / (a * float(i_sqrt[0, 0]))
        t = np.clip(t, lo, hi)
        z_lo, z_hi, z_t = sn * (lo - xbar), sn * (hi - xbar), sn * (t - xbar)
        denom = sps.norm.cdf(z_hi) - sps.norm.cdf(z_lo)
        if a > 0:
            num = sps.norm.cdf(z_hi) - sps.norm.cdf(z_t)
        else:
            num = sps.norm.cdf(z_t) - sps.norm.cdf(z_lo)
        return num / np.maximum(denom, 1e-300)
    nodes, w = _grid_posterior(fam, obs, event.prior, event.resolution, n, u_n)
    std = (nodes - theta_gen[0]) * float(i_sqrt[0, 0]) / u_n
    inside = reg.contains(std.reshape(-1, 1)).reshape(std.shape)
    return np.sum(w * inside, axis=1)


def _discrepancy_indicator(fam, event, obs, ctx) -> np.ndarray:
    (theta0, theta_gen, n, u_n, b, eps, i_mat, i_sqrt, i_inv_sqrt) = ctx
    est = fam.mle_batch(obs)
    if est is None:
        raise DomainError(f"family {fam.name!r} lacks a batch estimator for MC kernels")
    if event.kind == "mle_vs_psi":
        psi = _psi_matrix(fam, obs, theta0, i_inv_sqrt, eps / u_n)
        lhs = (est - theta0[None, :]) @ i_sqrt.T
        disc = np.linalg.norm(lhs - 2.0 * psi / math.sqrt(n), axis=1)
        return disc > event.delta * u_n
    sum_xi = _loglik_per_rep(fam, obs, est) - _loglik_matrix(fam, obs, [theta_gen])[:, 0]
    if event.kind == "lr_vs_wald":
        diff = est - theta_gen[None, :]
        wald = n * np.einsum("ri,ij,rj->r", diff, i_mat, diff)
        return np.abs(2.0 * sum_xi - wald) > 2.0 * event.delta * n * u_n**2
    # lr_vs_psi2
    psi = _psi_matrix(fam, obs, theta0, i_inv_sqrt, eps / u_n)
    center = psi - math.sqrt(n) * u_n * b[None, :]
    quad = 2.0 * np.sum(center * center, axis=1)
    return np.abs(sum_xi - quad) > event.delta * n * u_n**2


def _sim_chunk(start, stop, payload):
    (fam, event, components, master_seed, point_index, n, ctx) = payload
    (theta0, theta_gen, _n, u_n, b, eps, i_mat, i_sqrt, i_inv_sqrt) = ctx
    k_count = len(components)
    rows = []
    comp = np.zeros(stop - start, dtype=np.int64)
    for j in range(stop - start):
        rng = rep_rng(master_seed, point_index, start + j)
        k = 0 if k_count == 1 else int(rng.integers(k_count))
        comp[j] = k
        rows.append(fam.draw(rng, _theta_arg(fam, components[k]), n))
    obs = np.stack(rows)

    if k_count == 1 and np.allclose(components[0], theta_gen):
        logw = np.zeros(obs.shape[0])
    else:
        ll = _loglik_matrix(fam, obs, [theta_gen] + list(components))
        logq = logsumexp(ll[:, 1:], axis=1) - math.log(k_count)
        logw = ll[:, 0] - logq

    ind = np.asarray(_indicator(fam, event, obs, ctx), dtype=bool)
    hits = int(ind.sum())
    neg_inf = -math.inf
    lw_hit = float(logsumexp(logw[ind])) if hits else neg_inf
    l2w_hit = float(logsumexp(2.0 * logw[ind])) if hits else neg_inf
    lw_all = float(logsumexp(logw))
    l2w_all = float(logsumexp(2.0 * logw))
    return (hits, lw_hit, l2w_hit, lw_all, l2w_all)


def _pilot_chunk(start, stop, payload):
    """Event frequency under a single tilt component; used for tilt selection."""
    (fam, event, component, master_seed, point_index, n, ctx) = payload
    rows = []
    for j in range(stop - start):
        rng = rep_rng(master_seed, point_index, _PILOT_BASE + start + j)
        rows.append(fam.draw(rng, _theta_arg(fam, component), n))
    obs = np.stack(rows)
    return int(np.asarray(_indicator(fam, event, obs, ctx), dtype=bool).sum())


# ---------------------------------------------------------------------------
# Tilt selection
# ---------------------------------------------------------------------------


def _deviation_tilts(fam, region, theta_gen, u_n, i_inv_sqrt) -> list[np.ndarray]:
    """Parameter shifts at 1.1x the region's nearest points, mapped through
    I^{-1/2}; multiple dominant points become an equal-weight mixture."""
    points = region.nearest_points()
    comps = []
    for x in points:
        shift = 1.1 * u_n * (i_inv_sqrt @ np.atleast_1d(x))
        comps.append(theta_gen + shift)
    uniq: list[np.ndarray] = []
    for c in comps:
        if not any(np.allclose(c, u) for u in uniq):
            uniq.append(c)
    for c in uniq:
        if not fam.theta_domain.contains(c):
            raise TiltDomainError(
                f"tilt parameter {c.tolist()} leaves the domain of {fam.name};"
                " shrink u_n or the region"
            )
    return uniq


def _pilot_tilts(fam, event, theta_gen, u_n, i_inv_sqrt, master_seed, point_index, ctx, n):
    """Seeded pilot over a ladder of standardized shifts; returns the mixture
    components and the chosen shift size for the method tag."""
    e1 = np.zeros(fam.d)
    e1[0] = 1.0
    freqs = []
    for bi, b_try in enumerate(_PILOT_B_GRID):
        comp = theta_gen + u_n * b_try * (i_inv_sqrt @ e1)
        if not fam.theta_domain.contains(comp):
            freqs.append(-1.0)
            continue
        payload = (fam, event, comp, master_seed, point_index + 1000 * (bi + 1), n, ctx)
        hits = _pilot_chunk(0, _PILOT_REPS, payload)
        freqs.append(hits / _PILOT_REPS)
    freqs_arr = np.array(freqs)
    ok = np.flatnonzero(freqs_arr >= 0.2)
    bi = int(ok[0]) if ok.size else int(np.argmax(freqs_arr))
    b_star = _PILOT_B_GRID[bi]
    if b_star == 0.0:
        return [theta_gen.copy()], b_star
    comps = []
    for sgn in (1.0, -1.0):
        for ax in range(fam.d):
            e = np.zeros(fam.d)
            e[ax] = sgn
            c = theta_gen + u_n * b_star * (i_inv_sqrt @ e)
            if fam.theta_domain.contains(c):
                comps.append(c)
    if not comps:
        raise TiltDomainError("no pilot tilt stays inside the parameter domain")
    return comps, b_star


# ---------------------------------------------------------------------------
# Exact tail oracles
# ---------------------------------------------------------------------------


def _gaussian_region_logtail(region: RegionSpec, scale: float) -> float:
    """log P(Z in region) for Z ~ N(0, scale^{-2} Id): the exact tails the
    Monte Carlo estimates are judged against."""
    if region.shape == "half_space":
        return float(sps.norm.logsf(region.c * scale))
    if region.shape == "complement_ball":
        return float(sps.chi2.logsf((region.r * scale) ** 2, df=region.d))
    if region.shape == "box":
        lp = 0.0
        for lo, hi in zip(region.lo, region.hi):
            p = sps.norm.cdf(hi * scale) - sps.norm.cdf(lo * scale)
            if p <= 0:
                return -math.inf
            lp += math.log(p)
        return lp
    if region.shape == "complement_box":
        lp_in = 0.0
        for lo, hi in zip(region.lo, region.hi):
            p = sps.norm.cdf(hi * scale) - sps.norm.cdf(lo * scale)
            lp_in += math.log(max(p, 1e-300))
        val = -math.expm1(lp_in)  # 1 - P(box)
        return math.log(max(val, 1e-300))
    raise DomainError(f"no exact tail for region shape {region.shape!r}")


def _exact_tail(event, fam, theta0, n, u_n, b, eps, seed) -> ProbEstimate:
    """Closed-form tail where the estimator itself has a closed form.

    Gaussian families: all deviation events reduce to Gaussian region tails
    (posterior box truncation affects them below double precision; the
    score truncation is inactive at these scales by assumption).
    Bernoulli / exponential estimator events: exact discrete / Gamma tails.
    """
    theta_gen = theta0 + u_n * b
    region = _event_region(event)
    if region is None:
        raise DomainError("no exact tail oracle for discrepancy events")
    if isinstance(event, BayesEvent):
        if not (
            fam.name in ("gaussian", "gaussian2")
            and event.prior.kind == "flat"
            and event.loss.kind == "power"
            and event.loss.p == 2.0
        ):
            raise DomainError("exact Bayes tails need Gaussian, flat prior, squared loss")
    if isinstance(event, PosteriorMassEvent):
        if not (fam.name == "gaussian" and event.prior.kind == "flat" and region.shape == "half_space"):
            raise DomainError("exact posterior-mass tails need Gaussian, flat prior, half-space")
        z = float(sps.norm.isf(event.threshold))
        arg = math.sqrt(n) * u_n * region.c - z
        log_p = float(sps.norm.logsf(arg))
        return ProbEstimate(math.exp(log_p), log_p, 0.0, "exact", 0, seed)

    if fam.name in ("gaussian", "gaussian2"):
        log_p = _gaussian_region_logtail(region, math.sqrt(n) * u_n)
        return ProbEstimate(math.exp(log_p), log_p, 0.0, "exact", 0, seed)

    if fam.name == "bernoulli" and isinstance(event, (MleEvent, PsiEvent)):
        if isinstance(event, PsiEvent):
            t0 = float(theta0[0])
            phimax = max(t0, 1.0 - t0) / (2.0 * t0 * (1.0 - t0))
            if eps / u_n <= phimax:
                raise DomainError("truncation active: no exact tail for the truncated score")
        # Sum pmf atoms through the same float pipeline the simulation kernel
        # applies; a sf/floor shortcut can put a boundary atom on the wrong
        # side of the open region, and deep in the tail one atom is a large
        # fraction of the mass.
        fisher = fisher_information(fam, theta0)
        ks = np.arange(n + 1, dtype=float)
        if isinstance(event, MleEvent):
            est = (ks / n)[:, None]
            w = (est - theta_gen[None, :]) @ fisher.sqrt.T / u_n
        else:
            phi1 = float(np.asarray(fam.score_phi(np.array([[1.0]]), _theta_arg(fam, theta0)))[0, 0])
            phi0 = float(np.asarray(fam.score_phi(np.array([[0.0]]), _theta_arg(fam, theta0)))[0, 0])
            s = (ks * phi1 + (n - ks) * phi0)[:, None]
            psi = (s @ fisher.inv_sqrt.T) / math.sqrt(n)
            w = 2.0 * psi / (math.sqrt(n) * u_n) - (fisher.sqrt @ b)[None, :]
        mask = np.asarray(event.region.contains(w), dtype=bool)
        if not mask.any():
            return ProbEstimate(0.0, -math.inf, 0.0, "exact", 0, seed)
        log_p = float(logsumexp(sps.binom.logpmf(ks[mask], n, float(theta_gen[0]))))
        return ProbEstimate(math.exp(log_p), log_p, 0.0, "exact", 0, seed)

    if fam.name == "exponential" and isinstance(event, MleEvent) and region.shape == "half_space":
        t0 = float(theta0[0])
        tg = float(theta_gen[0])
        a = float(region.a[0])
        rate_thr = tg + u_n * region.c * t0 / a  # estimate 1/xbar crosses this
        if a > 0:
            if rate_thr <= 0:
                return ProbEstimate(1.0, 0.0, 0.0, "exact", 0, seed)
            log_p = float(sps.gamma.logcdf(n / rate_thr, a=n, scale=1.0 / tg))
        else:
            if rate_thr <= 0:
                return ProbEstimate(0.0, -math.inf, 0.0, "exact", 0, seed)
            log_p = float(sps.gamma.logsf(n / rate_thr, a=n, scale=1.0 / tg))
        return ProbEstimate(math.exp(log_p), log_p, 0.0, "exact", 0, seed)

    raise DomainError(f"no exact tail oracle for family {fam.name!r} with this event")


# ---------------------------------------------------------------------------
# The estimator
# ---------------------------------------------------------------------------


def estimate_prob(
    event,
    fam: ParametricFamily,
    theta0,
    n: int,
    u_n: float,
    b=None,
    method: str = "tilted",
    n_reps: int = 100_000,
    seed: int = 0,
    eps: float = 0.5,
    point_index: int = 0,
    workers: int = 1,
) -> ProbEstimate:
    """Probability of a standardized deviation or coupling-failure event.

    method: "crude" (sample the data-generating law), "tilted"
    (parameter-shift importance sampling toward the event), or "exact"
    (closed-form tail when available).  Weights and second moments are
    accumulated in the log domain, so estimates remain usable down to
    p ~ exp(-450) and 0 hits yield a flagged one-sided bound.
    """
    theta0 = fam.validate_theta(theta0)
    b = np.zeros(fam.d) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
    if b.size != fam.d:
        raise DomainError(f"b has dimension {b.size}, expected {fam.d}")
    if not u_n > 0:
        raise GridError("u_n must be positive")
    if n < 2:
        raise GridError("n must be at least 2")
    theta_gen = theta0 + u_n * b
    if not fam.theta_domain.contains(theta_gen):
        raise DomainError(f"theta_gen {theta_gen.tolist()} outside the parameter domain")

    if method == "exact":
        return _exact_tail(event, fam, theta0, n, u_n, b, eps, seed)
    if method not in ("crude", "tilted"):
        raise GridError(f"unknown method {method!r}")

    fisher = fisher_information(fam, theta0)
    ctx = (theta0, theta_gen, n, u_n, b, eps, fisher.matrix, fisher.sqrt, fisher.inv_sqrt)
    region = _event_region(event)

    method_tag = method
    if method == "crude":
        _guard_crude(event, fam, theta0, n, u_n, b, eps, region, seed)
        components = [theta_gen.copy()]
    elif region is not None:
        components = _deviation_tilts(fam, region, theta_gen, u_n, fisher.inv_sqrt)
    else:
        components, b_star = _pilot_tilts(
            fam, event, theta_gen, u_n, fisher.inv_sqrt, seed, point_index, ctx, n
        )
        method_tag = f"tilted(pilot-b={b_star:g})"

    payload = (fam, event, components, seed, point_index, n, ctx)
    partials = run_chunks(_sim_chunk, n_reps, n, workers, payload)

    hits = sum(p[0] for p in partials)
    lw_hit = float(logsumexp(np.array([p[1] for p in partials])))
    l2w_hit = float(logsumexp(np.array([p[2] for p in partials])))
    lw_all = float(logsumexp(np.array([p[3] for p in partials])))
    l2w_all = float(logsumexp(np.array([p[4] for p in partials])))
    log_n = math.log(n_reps)

    # Raw weights are heavy-tailed by design under a rare-event tilt, and a
    # deep tilt legitimately concentrates weight on moderately few hits (the
    # stderr reports that noise honestly).  Warn only when the estimate rests
    # on a handful of effective replications despite many nominal hits.
    if hits >= 8:
        ess_hits = math.exp(2.0 * lw_hit - l2w_hit)
        if ess_hits < 5.0:
            warnings.warn(
                f"importance weights degenerate: {hits} hits carry an"
                f" effective sample of {ess_hits:.1f}",
                DegenerateWeightsWarning,
                stacklevel=2,
            )

    if hits == 0:
        log_bound = math.log(_ZERO_HIT_NUMERATOR) - log_n
        return ProbEstimate(0.0, log_bound, math.inf, method_tag, n_reps, seed, upper_bound=True)

    log_p = lw_hit - log_n
    relvar = math.exp(log_n + l2w_hit - 2.0 * lw_hit) - 1.0
    stderr_log = math.sqrt(max(relvar, 0.0) / n_reps)
    return ProbEstimate(math.exp(log_p), log_p, stderr_log, method_tag, n_reps, seed)


def _guard_crude(event, fam, theta0, n, u_n, b, eps, region, seed):
    """Crude sampling cannot see probabilities far below 1/n_reps; refuse
    configurations whose predicted probability is below 1e-12."""
    log_pred = None
    try:
        log_pred = _exact_tail(event, fam, theta0, n, u_n, b, eps, seed).log_p
    except DomainError:
        if region is not None:
            log_pred = -0.5 * n * u_n**2 * rate_functional(region)
    if log_pred is not None and log_pred < math.log(1e-12):
        raise BudgetError(
            f"predicted probability exp({log_pred:.1f}) below 1e-12:"
            " crude sampling cannot resolve it; use method='tilted'"
        )


# ---------------------------------------------------------------------------
# Curves and sweeps
# ---------------------------------------------------------------------------


def _reps_for(schedule_ns, budget: Budget) -> int:
    total = sum(schedule_ns)
    capped = budget.max_total_draws // max(total, 1)
    return max(budget.min_reps, min(budget.n_reps, int(capped)))


def ldp_curve(
    event,
    fam: ParametricFamily,
    theta0,
    schedule: DeviationSchedule,
    budget: Budget = Budget(),
    method: str = "tilted",
    seed: int = 0,
    workers: int = 1,
    eps: float = 0.5,
    label: str = "",
) -> RateCurve:
    """Normalized rate -log p / (n u_n^2 / 2) along a moderate-deviation
    schedule, against the region's rate inf |x|^2."""
    if not schedule.alpha > 0:
        raise GridError("moderate-deviation curves need alpha in (0, 1/2)")
    region = _event_region(event)
    target = rate_functional(region) if region is not None else math.nan
    b = schedule.b if schedule.b is not None else np.zeros(fam.d)
    reps = _reps_for(schedule.n_values, budget)
    points = []
    for i, n in enumerate(schedule.n_values):
        u = schedule.u_of(n)
        est = estimate_prob(
            event, fam, theta0, n, u,
            b=b, method=method, n_reps=reps, seed=seed, eps=eps,
            point_index=i, workers=workers,
        )
        points.append(RatePoint(n=n, u_n=u, estimate=est))
    return RateCurve(points=tuple(points), target=target, label=label or type(event).__name__)


def equivalence_tail(
    fam: ParametricFamily,
    theta0,
    schedule: DeviationSchedule,
    delta: float,
    budget: Budget = Budget(),
    method: str = "tilted",
    seed: int = 0,
    workers: int = 1,
    eps: float = 0.5,
) -> dict:
    """Decay of the three estimator-coupling failure probabilities.

    These are the events whose probabilities must vanish faster than any
    deviation event's; the curves have no fixed rate target.
    """
    curves = {}
    b = schedule.b if schedule.b is not None else np.zeros(fam.d)
    reps = _reps_for(schedule.n_values, budget)
    for k, kind in enumerate(("mle_vs_psi", "lr_vs_wald", "lr_vs_psi2")):
        event = DiscrepancyEvent(kind=kind, delta=delta)
        points = []
        for i, n in enumerate(schedule.n_values):
            u = schedule.u_of(n)
            est = estimate_prob(
                event, fam, theta0, n, u,
                b=b, method=method, n_reps=reps, seed=seed, eps=eps,
                point_index=10_000 * k + i, workers=workers,
            )
            points.append(RatePoint(n=n, u_n=u, estimate=est))
        curves[kind] = RateCurve(points=tuple(points), target=math.nan, label=kind)
    return curves


def bahadur_sweep(
    event,
    fam: ParametricFamily,
    theta0,
    u_values,
    n_large: int,
    budget: Budget = Budget(),
    method: str = "tilted",
    seed: int = 0,
    workers: int = 1,
    eps: float = 0.5,
) -> list[RateCurve]:
    """Fixed-u rate curves in n, one per u: the per-u normalized rates
    approach the region's rate from above as n grows."""
    if n_large < 16:
        raise GridError("n_large must be at least 16")
    region = _event_region(event)
    target = rate_functional(region) if region is not None else math.nan
    curves = []
    for j, u in enumerate(u_values):
        if not u > 0:
            raise GridError("u values must be positive")
        n_floor = max(int(math.ceil(2.0 / u**2)), n_large // 64)
        ns = sorted({n_floor, n_large // 16, n_large // 4, n_large})
        ns = [n for n in ns if n * u**2 >= 2.0 and n >= 2]
        if not ns:
            raise GridError(f"no usable n for u={u}: n u^2 stays below 2")
        reps = _reps_for(ns, budget)
        points = []
        for i, n in enumerate(ns):
            est = estimate_prob(
                event, fam, theta0, n, u,
                b=None, method=method, n_reps=reps, seed=seed, eps=eps,
                point_index=100_000 * j + i, workers=workers,
            )
            points.append(RatePoint(n=n, u_n=u, estimate=est))
        curves.append(RateCurve(points=tuple(points), target=target, label=f"u={u:g}"))
    return curves
