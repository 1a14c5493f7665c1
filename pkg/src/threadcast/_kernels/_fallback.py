"""Pure-Python implementations of the numerical hot paths.

Mirrors the compiled ``_speedups`` module operation for operation so the
two are interchangeable. Kept deliberately close to the C loops (same
clamp rules, same bisection semantics, same update order) so that results
agree across backends; the likelihood sums may differ from the compiled
path only in floating-point summation order.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

LOG_2PI = 1.8378770664093453
INV_SQRT_2PI = 0.3989422804014327
# Cap on (t/b)**alpha so pathological optimizer excursions stay finite.
POW_CAP = 1e12


def hawkes_nll_grad(top_times, reply_gaps, event_gaps, T, theta):
    """Negative log-likelihood of one cascade and its six-parameter gradient.

    ``top_times``: top-level comment times (minutes, > 0).
    ``reply_gaps``: each reply's delay from its direct parent (minutes, > 0).
    ``event_gaps``: ``T - t_k`` for every comment ``k`` (>= 0), feeding the
    reply-survival terms (every comment can parent further replies).
    """
    a, b, alpha, mu, sigma, nb = (float(v) for v in theta)
    top = np.asarray(top_times, dtype=np.float64)
    rep = np.asarray(reply_gaps, dtype=np.float64)
    gaps = np.asarray(event_gaps, dtype=np.float64)
    n_top = top.size
    n_rep = rep.size

    u_T = min((T / b) ** alpha, POW_CAP)
    e_T = np.exp(-u_T)

    # top-level arrivals: Weibull rate with total mass a
    if n_top:
        log_tb = np.log(top / b)
        u_top = np.minimum((top / b) ** alpha, POW_CAP)
        ll_top = n_top * (np.log(a) + np.log(alpha) - np.log(b)) + (alpha - 1.0) * np.sum(
            log_tb
        ) - np.sum(u_top)
        g_b_top = (alpha / b) * (np.sum(u_top) - n_top)
        g_alpha_top = n_top / alpha + np.sum(log_tb * (1.0 - u_top))
    else:
        ll_top = 0.0
        g_b_top = 0.0
        g_alpha_top = 0.0
    ll_comp = a * np.expm1(-u_T)  # -a * (1 - e_T)

    # replies: lognormal delay kernel scaled by the branching factor
    if n_rep:
        z_rep = (np.log(rep) - mu) / sigma
        ll_rep = (
            n_rep * (np.log(nb) - np.log(sigma) - 0.5 * LOG_2PI)
            - np.sum(np.log(rep))
            - 0.5 * np.sum(z_rep**2)
        )
        g_mu_rep = np.sum(z_rep) / sigma
        g_sigma_rep = np.sum(z_rep**2 - 1.0) / sigma
    else:
        ll_rep = 0.0
        g_mu_rep = 0.0
        g_sigma_rep = 0.0

    # survival: replies each comment could still receive by the horizon
    pos = gaps[gaps > 0.0]
    if pos.size:
        z_ev = (np.log(pos) - mu) / sigma
        cdf = ndtr(z_ev)
        pdf = INV_SQRT_2PI * np.exp(-0.5 * z_ev**2)
        sum_cdf = np.sum(cdf)
        sum_pdf = np.sum(pdf)
        sum_zpdf = np.sum(z_ev * pdf)
    else:
        sum_cdf = sum_pdf = sum_zpdf = 0.0
    ll_surv = -nb * sum_cdf

    ll = ll_top + ll_comp + ll_rep + ll_surv
    grad_ll = np.array(
        [
            n_top / a + np.expm1(-u_T),
            g_b_top + a * alpha * u_T * e_T / b,
            g_alpha_top - a * e_T * u_T * np.log(T / b),
            g_mu_rep + (nb / sigma) * sum_pdf,
            g_sigma_rep + (nb / sigma) * sum_zpdf,
            n_rep / nb - sum_cdf,
        ]
    )
    return -float(ll), -grad_ll


def random_walks(indptr, indices, cumw, starts, uniforms, walk_len):
    """First-order weighted random walks over a CSR graph.

    One walk per row of ``uniforms``; step ``s`` of walk ``w`` consumes
    ``uniforms[w, s-1]``. Unreachable steps (node without neighbours) leave
    the remainder of the row at -1.
    """
    n_walks = len(starts)
    walks = np.full((n_walks, walk_len), -1, dtype=np.int32)
    for w in range(n_walks):
        cur = int(starts[w])
        walks[w, 0] = cur
        for s in range(1, walk_len):
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if hi == lo:
                break
            target = uniforms[w, s - 1] * cumw[hi - 1]
            j = lo + int(np.searchsorted(cumw[lo:hi], target, side="right"))
            if j >= hi:
                j = hi - 1
            cur = int(indices[j])
            walks[w, s] = cur
    return walks


def attraction_updates(walks, emb, rates, window, lower, upper):
    """Pull co-occurring walk nodes toward each other, in place.

    Every unordered pair of distinct nodes at walk distance <= ``window``
    moves both endpoints toward each other: the deltas are taken before
    either endpoint moves, each endpoint uses its own rate, and components
    are clamped into [lower, upper] immediately. Returns the pair count.
    """
    n_pairs = 0
    n_walks, L = walks.shape
    for w in range(n_walks):
        row = walks[w]
        for i in range(L):
            u = int(row[i])
            if u < 0:
                break
            j_hi = min(i + window, L - 1)
            for j in range(i + 1, j_hi + 1):
                v = int(row[j])
                if v < 0:
                    break
                if v == u:
                    continue
                ru = rates[u]
                rv = rates[v]
                for d in range(6):
                    delta = emb[v, d] - emb[u, d]
                    if ru != 0.0:
                        x = emb[u, d] + ru * delta
                        if x < lower[d]:
                            x = lower[d]
                        elif x > upper[d]:
                            x = upper[d]
                        emb[u, d] = x
                    if rv != 0.0:
                        y = emb[v, d] - rv * delta
                        if y < lower[d]:
                            y = lower[d]
                        elif y > upper[d]:
                            y = upper[d]
                        emb[v, d] = y
                n_pairs += 1
    return n_pairs
