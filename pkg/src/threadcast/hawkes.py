"""Branching-process likelihoods and per-cascade parameter fitting.

The generative story: top-level comments arrive on [0, T] as an
inhomogeneous Poisson process with Weibull-shaped rate ``h`` of total mass
``a``; every comment then receives direct replies at rate ``n_b * phi(dt)``
where ``phi`` is a lognormal delay density and ``dt`` is measured from the
comment itself. The tree is fully observed, so parent attribution is known
and the likelihood needs no latent branching structure.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from . import _kernels
from .cascade import CascadeTree, HawkesParams

log = logging.getLogger(__name__)

# Box constraints used by both the optimizer and the embedding updates.
# sigma gets a larger floor to keep the delay kernel from degenerating into
# a spike; mu is a location in log-minutes and may be negative. The upper
# bounds are generous numerical guards, far outside any realistic fit.
PARAM_LOWER = (1e-6, 1e-6, 1e-6, -20.0, 1e-3, 1e-6)
PARAM_UPPER = (1e6, 1e6, 50.0, 20.0, 50.0, 1e3)

# Same-timestamp parent/child pairs happen at one-second data resolution;
# shift those gaps by half a second so log(dt) stays finite.
ZERO_GAP_JITTER = 0.5 / 60.0

GOF_BEST = 0.85
GOF_WORST = 0.45
GOF_FAILED = 0.95


class NotEnoughData(ValueError):
    """The cascade does not meet the minimum-data requirements for fitting."""


@dataclass(frozen=True)
class FitConfig:
    min_comments: int = 10
    max_iterations: int = 500
    param_lower_bounds: tuple[float, ...] = PARAM_LOWER
    param_upper_bounds: tuple[float, ...] = PARAM_UPPER
    time_horizon: float | None = None  # minutes; None = last comment + 1

    def __post_init__(self):
        if self.min_comments < 1:
            raise ValueError("min_comments must be >= 1")
        for i in (0, 1, 2, 4, 5):
            if self.param_lower_bounds[i] <= 0:
                raise ValueError("scale/shape lower bounds must be strictly positive")


@dataclass(frozen=True)
class FitResult:
    params: HawkesParams
    g: float  # goodness score; 0.95 exactly on optimizer failure
    converged: bool
    n_events_used: int
    neg_log_lik: float

    @property
    def per_event_nll(self) -> float:
        return self.neg_log_lik / max(self.n_events_used, 1)


def weibull_intensity(t, a, b, alpha):
    """Top-level arrival rate a*(alpha/b)*(t/b)^(alpha-1)*exp(-(t/b)^alpha).

    Diverges at t=0 when alpha < 1 (the integral stays finite); callers
    sampling or scoring events never evaluate there.
    """
    if a <= 0 or b <= 0 or alpha <= 0:
        raise ValueError("a, b, alpha must be strictly positive")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    with np.errstate(divide="ignore"):
        out = a * (alpha / b) * (t / b) ** (alpha - 1.0) * np.exp(-((t / b) ** alpha))
    return float(out) if out.ndim == 0 else out


def weibull_cumulative(t, a, b, alpha):
    """Expected top-level comments by time t: a*(1 - exp(-(t/b)^alpha))."""
    if a <= 0 or b <= 0 or alpha <= 0:
        raise ValueError("a, b, alpha must be strictly positive")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    out = -a * np.expm1(-((t / b) ** alpha))
    return float(out) if out.ndim == 0 else out


def lognormal_kernel(dt, mu, sigma):
    """Reply-delay density at dt minutes after the parent event."""
    if sigma <= 0:
        raise ValueError("sigma must be strictly positive")
    dt = np.asarray(dt, dtype=np.float64)
    if np.any(dt <= 0):
        raise ValueError("dt must be strictly positive")
    z = (np.log(dt) - mu) / sigma
    out = np.exp(-0.5 * z * z) / (dt * sigma * math.sqrt(2.0 * math.pi))
    return float(out) if out.ndim == 0 else out


def lognormal_cdf(dt, mu, sigma):
    """Reply-delay CDF; defined as 0 at and below dt = 0."""
    if sigma <= 0:
        raise ValueError("sigma must be strictly positive")
    dt = np.asarray(dt, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = np.where(dt > 0, ndtr((np.log(np.maximum(dt, 1e-300)) - mu) / sigma), 0.0)
    return float(out) if out.ndim == 0 else out


def event_arrays(tree: CascadeTree, t_obs: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a cascade into the arrays the likelihood kernel consumes.

    Returns (top-level times, reply gaps from direct parents, horizon gaps
    T - t_k for every comment). Zero gaps are jittered; negative ones are a
    broken tree and raise.
    """
    rel = tree.relative_times
    if rel.size and t_obs < rel.max():
        raise ValueError(f"t_obs={t_obs} precedes the last observed comment at {rel.max()}")
    by_id = {c.comment_id: i for i, c in enumerate(tree.comments)}
    top = []
    gaps = []
    for i, c in enumerate(tree.comments):
        if c.depth == 0:
            top.append(max(rel[i], ZERO_GAP_JITTER))
        else:
            dt = rel[i] - rel[by_id[c.parent_id]]
            if dt < 0:
                raise ValueError(f"reply {c.comment_id} precedes its parent")
            gaps.append(max(dt, ZERO_GAP_JITTER))
    return np.array(top), np.array(gaps), t_obs - rel


def neg_log_likelihood(tree: CascadeTree, params: HawkesParams, t_obs: float) -> float:
    top, gaps, horizon = event_arrays(tree, t_obs)
    nll, _ = _kernels.hawkes_nll_grad(top, gaps, horizon, t_obs, params.as_vector())
    return nll


def nll_gradient(tree: CascadeTree, params: HawkesParams, t_obs: float) -> np.ndarray:
    top, gaps, horizon = event_arrays(tree, t_obs)
    _, grad = _kernels.hawkes_nll_grad(top, gaps, horizon, t_obs, params.as_vector())
    return grad


def _default_horizon(tree: CascadeTree, cfg: FitConfig) -> float:
    if cfg.time_horizon is not None:
        return cfg.time_horizon
    rel = tree.relative_times
    return float(rel.max()) + 1.0 if rel.size else 1.0


def _initial_guess(tree: CascadeTree, cfg: FitConfig) -> np.ndarray:
    """Moment-style starting point; clipped into the optimizer box."""
    top, gaps, _ = event_arrays(tree, _default_horizon(tree, cfg))
    n = len(tree.comments)
    a0 = float(max(len(top), 1))
    b0 = float(np.median(top)) if top.size else 30.0
    mu0 = float(np.mean(np.log(gaps))) if gaps.size else 3.0
    sigma0 = float(np.std(np.log(gaps))) if gaps.size > 1 else 1.0
    nb0 = gaps.size / n if n else 0.1
    x0 = np.array([a0, b0, 1.0, mu0, max(sigma0, 0.25), max(nb0, 0.01)])
    return np.clip(x0, cfg.param_lower_bounds, cfg.param_upper_bounds)


def fit(
    tree: CascadeTree,
    cfg: FitConfig = FitConfig(),
    init: HawkesParams | None = None,
    iteration_cap: int | None = None,
) -> FitResult:
    """Bounded maximum-likelihood fit of the six parameters to one cascade.

    Without an ``iteration_cap`` the cascade must have ``min_comments``
    comments including at least one top-level comment and one reply;
    passing a cap (the partial-refit path) relaxes those requirements.
    A cap of 0 returns ``init`` unchanged. The returned goodness score is
    0.95 on failure and a provisional mid-range value otherwise; use
    :func:`assign_goodness` to normalize it across a training corpus.
    """
    n_comments = len(tree.comments)
    n_top = sum(1 for c in tree.comments if c.depth == 0)
    if iteration_cap is None:
        if n_comments < cfg.min_comments:
            raise NotEnoughData(
                f"{tree.root.post_id}: {n_comments} comments < minimum {cfg.min_comments}"
            )
        if n_top == 0 or n_top == n_comments:
            raise NotEnoughData(
                f"{tree.root.post_id}: need both top-level comments and replies"
            )

    t_obs = _default_horizon(tree, cfg)
    top, gaps, horizon = event_arrays(tree, t_obs)
    lower = np.asarray(cfg.param_lower_bounds)
    upper = np.asarray(cfg.param_upper_bounds)
    if init is not None:
        x0 = np.clip(init.as_vector(), lower, upper)
    else:
        x0 = _initial_guess(tree, cfg)

    f0, _ = _kernels.hawkes_nll_grad(top, gaps, horizon, t_obs, x0)
    if iteration_cap is not None and iteration_cap <= 0:
        return FitResult(
            params=HawkesParams.from_vector(x0),
            g=GOF_FAILED,
            converged=False,
            n_events_used=n_comments,
            neg_log_lik=f0,
        )

    best = {"f": f0, "x": x0.copy()}

    def objective(x):
        f, grad = _kernels.hawkes_nll_grad(top, gaps, horizon, t_obs, x)
        if np.isfinite(f) and f < best["f"]:
            best["f"] = f
            best["x"] = x.copy()
        return f, grad

    maxiter = cfg.max_iterations if iteration_cap is None else iteration_cap
    converged = False
    try:
        res = minimize(
            objective,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(lower, upper)),
            options={"maxiter": maxiter},
        )
        converged = bool(res.success)
    except Exception:  # noqa: BLE001 - optimizer blow-ups degrade to a failed fit
        log.warning("optimizer failed on %s; keeping best iterate", tree.root.post_id)

    return FitResult(
        params=HawkesParams.from_vector(best["x"]),
        g=0.65 if converged else GOF_FAILED,
        converged=converged,
        n_events_used=n_comments,
        neg_log_lik=best["f"],
    )


@dataclass(frozen=True)
class GofStats:
    """Per-event NLL range over a training set, for goodness normalization."""

    min_per_event_nll: float
    max_per_event_nll: float

    @classmethod
    def from_fits(cls, fits) -> "GofStats | None":
        vals = [f.per_event_nll for f in fits if f.converged and math.isfinite(f.per_event_nll)]
        if not vals:
            return None
        return cls(min(vals), max(vals))


def normalize_gof(per_event_nll: float, stats: GofStats) -> float:
    """Affine map of per-event NLL onto [0.45, 0.85], best fit highest."""
    lo, hi = stats.min_per_event_nll, stats.max_per_event_nll
    if hi <= lo:
        return 0.5 * (GOF_BEST + GOF_WORST)
    g = GOF_BEST - (GOF_BEST - GOF_WORST) * (per_event_nll - lo) / (hi - lo)
    return min(max(g, GOF_WORST), GOF_BEST)


def assign_goodness(fits: dict[str, FitResult]) -> dict[str, FitResult]:
    """Replace provisional goodness scores with corpus-normalized ones."""
    stats = GofStats.from_fits(fits.values())
    out = {}
    for pid, fr in fits.items():
        if fr.converged and stats is not None:
            out[pid] = dataclasses.replace(fr, g=normalize_gof(fr.per_event_nll, stats))
        else:
            out[pid] = fr
    return out


def refit_partial(
    observed: CascadeTree, inferred: HawkesParams, cfg: FitConfig = FitConfig()
) -> FitResult:
    """Refine inferred parameters against a partially observed cascade.

    The optimizer starts from the inferred values and is allowed one
    iteration per observed comment, so sparse observations barely move the
    prior while rich ones dominate it. No observed comments returns the
    inferred parameters verbatim.
    """
    n = len(observed.comments)
    if n == 0:
        t_obs = _default_horizon(observed, cfg)
        return FitResult(
            params=inferred,
            g=GOF_FAILED,
            converged=False,
            n_events_used=0,
            neg_log_lik=neg_log_likelihood(observed, inferred, t_obs),
        )
    return fit(observed, cfg, init=inferred, iteration_cap=n)


def _fit_one(args):
    tree, cfg = args
    try:
        return tree.root.post_id, fit(tree, cfg), None
    except NotEnoughData as e:
        return tree.root.post_id, None, str(e)


@dataclass
class FitSummary:
    n_fitted: int = 0
    n_converged: int = 0
    n_skipped: int = 0


def fit_corpus(
    trees, cfg: FitConfig = FitConfig(), jobs: int = 1
) -> tuple[dict[str, FitResult], FitSummary]:
    """Fit every eligible cascade and normalize goodness across the set.

    Fitting is pure per cascade, so ``jobs > 1`` fans out over processes;
    results are identical either way.
    """
    tasks = [(t, cfg) for t in trees]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_fit_one, tasks, chunksize=32))
    else:
        results = [_fit_one(t) for t in tasks]

    fits: dict[str, FitResult] = {}
    summary = FitSummary()
    for pid, fr, err in results:
        if fr is None:
            summary.n_skipped += 1
            log.debug("skipped %s: %s", pid, err)
        else:
            fits[pid] = fr
            summary.n_fitted += 1
            summary.n_converged += fr.converged
    return assign_goodness(fits), summary
