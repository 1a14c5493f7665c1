"""Generative simulation of full cascade trees from Hawkes parameters.

Sampling is exact rather than thinning-based: immigrant counts are Poisson
with the Weibull mass on the window and times come from the analytic
inverse of the cumulative rate; offspring counts are Poisson with the
truncated lognormal mass and delays come from the inverse lognormal CDF.
The Weibull rate is unbounded near zero for shape < 1, which exact
inversion handles and naive thinning does not.
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .cascade import SECONDS_PER_MINUTE, CascadeTree, Comment, HawkesParams, Post

PLACEHOLDER_ROOT = Post(post_id="sim-root", author="", title="", created_at=0.0)


@dataclass(frozen=True)
class SimConfig:
    cutoff_minutes: float = 43200.0  # 30 days
    max_events: int = 2000
    seed: int = 0
    runs: int = 5

    def __post_init__(self):
        if not self.cutoff_minutes > 0:
            raise ValueError("cutoff_minutes must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be >= 1")


def derive_seed(base_seed: int, *parts) -> int:
    """Stable per-(post, run) seed; independent of process hash salting."""
    h = hashlib.sha256()
    h.update(str(int(base_seed)).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "big")


def _weibull_mass(a, b, alpha, t):
    return -a * np.expm1(-((t / b) ** alpha))


def sample_immigrants(
    params: HawkesParams, T: float, rng, t_start: float = 0.0
) -> np.ndarray:
    """One realization of the top-level arrival process on (t_start, T].

    Count is Poisson with the Weibull mass on the window; times invert the
    cumulative rate at uniform levels, which reproduces the inhomogeneous
    Poisson law exactly.
    """
    a, b, alpha = params.a, params.b, params.alpha
    if a <= 0 or b <= 0 or alpha <= 0:
        raise ValueError("a, b, alpha must be strictly positive")
    if not 0 <= t_start < T:
        raise ValueError("need 0 <= t_start < T")
    lo = _weibull_mass(a, b, alpha, t_start)
    hi = _weibull_mass(a, b, alpha, T)
    mass = hi - lo
    n = rng.poisson(mass)
    if n == 0:
        return np.empty(0)
    q = (lo + rng.random(n) * mass) / a  # cumulative fraction in (0, 1)
    times = b * (-np.log1p(-q)) ** (1.0 / alpha)
    times = times[(times > t_start) & (times <= T)]
    return np.sort(times)


def sample_offspring(
    parent_time: float, params: HawkesParams, T: float, rng, t_min: float | None = None
) -> np.ndarray:
    """Reply times for one parent event, truncated to (t_min, T].

    Count is Poisson with mean n_b times the lognormal mass on the window;
    delays come from the inverse CDF. ``t_min`` excludes the already
    observed part of the timeline when continuing a partial cascade.
    """
    if parent_time >= T:
        raise ValueError("parent_time must precede the cutoff")
    mu, sigma, nb = params.mu, params.sigma, params.n_b
    if nb == 0.0:
        return np.empty(0)
    lo_gap = max(0.0, (t_min - parent_time)) if t_min is not None else 0.0
    hi_gap = T - parent_time
    p_lo = float(ndtr((np.log(lo_gap) - mu) / sigma)) if lo_gap > 0 else 0.0
    p_hi = float(ndtr((np.log(hi_gap) - mu) / sigma))
    mass = nb * (p_hi - p_lo)
    n = rng.poisson(mass)
    if n == 0:
        return np.empty(0)
    p = p_lo + rng.random(n) * (p_hi - p_lo)
    p = np.clip(p, 1e-16, 1.0 - 1e-16)
    gaps = np.exp(mu + sigma * ndtri(p))
    times = parent_time + np.minimum(gaps, hi_gap)
    if t_min is not None:
        times = times[times > t_min]
    times = times[times > parent_time]
    return np.sort(times)


def simulate_tree(
    params: HawkesParams,
    cfg: SimConfig = SimConfig(),
    observed: CascadeTree | None = None,
    root: Post | None = None,
    rng=None,
) -> CascadeTree:
    """Generate a full cascade, optionally continuing an observed prefix.

    Breadth-first over parents: top-level comments come from the base
    rate (restarted after the last observed time when a prefix is given),
    and every comment spawns replies through the delay kernel. Observed
    comments only spawn into the unobserved part of the timeline. Stops
    when the frontier empties or the total comment count hits
    ``max_events``, which sets the ``truncated`` flag.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    T = cfg.cutoff_minutes
    if observed is not None:
        root = observed.root
        rel = observed.relative_times
        if rel.size and rel.max() >= T:
            raise ValueError("observed cascade extends past the cutoff")
        t_last = float(rel.max()) if rel.size else 0.0
        kept = list(observed.comments)
        # observed comments keep their original records
        seed_parents = [
            (float(m), c.comment_id, c.depth, t_last)
            for c, m in zip(observed.comments, rel)
        ]
    else:
        root = root or PLACEHOLDER_ROOT
        t_last = 0.0
        kept = []
        seed_parents = []

    used_ids = {c.comment_id for c in kept}
    counter = 0

    def fresh_id() -> str:
        nonlocal counter
        counter += 1
        cid = f"sim{counter:06d}"
        while cid in used_ids:
            counter += 1
            cid = f"sim{counter:06d}"
        used_ids.add(cid)
        return cid

    truncated = False
    total = len(kept)
    new_events: list[tuple[float, str, str, int]] = []
    # parents queue: (time, id, depth, spawn floor or None)
    queue: deque[tuple[float, str, int, float | None]] = deque(seed_parents)
    for t in sample_immigrants(params, T, rng, t_start=t_last):
        if total >= cfg.max_events:
            truncated = True
            break
        cid = fresh_id()
        new_events.append((float(t), cid, root.post_id, 0))
        queue.append((float(t), cid, 0, None))
        total += 1

    while queue:
        if total >= cfg.max_events:
            truncated = True
            break
        t_parent, pid, depth, floor = queue.popleft()
        if t_parent >= T:
            continue
        for t in sample_offspring(t_parent, params, T, rng, t_min=floor):
            if total >= cfg.max_events:
                truncated = True
                break
            cid = fresh_id()
            new_events.append((float(t), cid, pid, depth + 1))
            queue.append((float(t), cid, depth + 1, None))
            total += 1

    comments = kept + [
        Comment(
            comment_id=cid,
            parent_id=parent,
            created_at=root.created_at + t * SECONDS_PER_MINUTE,
            depth=depth,
        )
        for t, cid, parent, depth in new_events
    ]
    comments.sort(key=lambda c: (c.created_at, c.comment_id))
    return CascadeTree(root=root, comments=tuple(comments), simulated=True, truncated=truncated)
