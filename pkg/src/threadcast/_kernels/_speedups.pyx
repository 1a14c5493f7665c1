# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical hot paths.

Same contracts as ``_fallback``: cascade likelihood with gradient,
weighted random walks over a CSR graph, and windowed attraction updates
on the embedding matrix.
"""

from libc.math cimport exp, expm1, log, pow, erfc

import numpy as np

cdef double LOG_2PI = 1.8378770664093453
cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double INV_SQRT_2 = 0.7071067811865476
cdef double POW_CAP = 1e12


cdef inline double _ndtr(double z) nogil:
    return 0.5 * erfc(-z * INV_SQRT_2)


def hawkes_nll_grad(double[::1] top_times, double[::1] reply_gaps,
                    double[::1] event_gaps, double T, double[::1] theta):
    """Negative log-likelihood of one cascade and its six-parameter gradient."""
    cdef double a = theta[0], b = theta[1], alpha = theta[2]
    cdef double mu = theta[3], sigma = theta[4], nb = theta[5]
    cdef Py_ssize_t n_top = top_times.shape[0]
    cdef Py_ssize_t n_rep = reply_gaps.shape[0]
    cdef Py_ssize_t n_ev = event_gaps.shape[0]
    cdef Py_ssize_t i
    cdef double u_T, e_T, ll_top, g_b_top, g_alpha_top, ll_comp
    cdef double sum_log_tb, sum_u, sum_la
    cdef double ll_rep, g_mu_rep, g_sigma_rep, sum_z, sum_z2, sum_logd
    cdef double sum_cdf, sum_pdf, sum_zpdf
    cdef double t, u, z, p, ll

    u_T = pow(T / b, alpha)
    if u_T > POW_CAP:
        u_T = POW_CAP
    e_T = exp(-u_T)

    sum_log_tb = 0.0
    sum_u = 0.0
    sum_la = 0.0
    for i in range(n_top):
        t = log(top_times[i] / b)
        u = pow(top_times[i] / b, alpha)
        if u > POW_CAP:
            u = POW_CAP
        sum_log_tb += t
        sum_u += u
        sum_la += t * (1.0 - u)
    if n_top > 0:
        ll_top = n_top * (log(a) + log(alpha) - log(b)) + (alpha - 1.0) * sum_log_tb - sum_u
        g_b_top = (alpha / b) * (sum_u - n_top)
        g_alpha_top = n_top / alpha + sum_la
    else:
        ll_top = 0.0
        g_b_top = 0.0
        g_alpha_top = 0.0
    ll_comp = a * expm1(-u_T)

    sum_z = 0.0
    sum_z2 = 0.0
    sum_logd = 0.0
    for i in range(n_rep):
        t = log(reply_gaps[i])
        z = (t - mu) / sigma
        sum_logd += t
        sum_z += z
        sum_z2 += z * z
    if n_rep > 0:
        ll_rep = n_rep * (log(nb) - log(sigma) - 0.5 * LOG_2PI) - sum_logd - 0.5 * sum_z2
        g_mu_rep = sum_z / sigma
        g_sigma_rep = (sum_z2 - n_rep) / sigma
    else:
        ll_rep = 0.0
        g_mu_rep = 0.0
        g_sigma_rep = 0.0

    sum_cdf = 0.0
    sum_pdf = 0.0
    sum_zpdf = 0.0
    for i in range(n_ev):
        if event_gaps[i] <= 0.0:
            continue
        z = (log(event_gaps[i]) - mu) / sigma
        p = INV_SQRT_2PI * exp(-0.5 * z * z)
        sum_cdf += _ndtr(z)
        sum_pdf += p
        sum_zpdf += z * p

    ll = ll_top + ll_comp + ll_rep - nb * sum_cdf
    grad = np.empty(6, dtype=np.float64)
    cdef double[::1] g = grad
    g[0] = -(n_top / a + expm1(-u_T))
    g[1] = -(g_b_top + a * alpha * u_T * e_T / b)
    g[2] = -(g_alpha_top - a * e_T * u_T * log(T / b))
    g[3] = -(g_mu_rep + (nb / sigma) * sum_pdf)
    g[4] = -(g_sigma_rep + (nb / sigma) * sum_zpdf)
    g[5] = -(n_rep / nb - sum_cdf)
    return -ll, grad


cdef inline Py_ssize_t _bisect_right(double[::1] arr, double x,
                                     Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < arr[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def random_walks(long[::1] indptr, long[::1] indices, double[::1] cumw,
                 long[::1] starts, double[:, ::1] uniforms, int walk_len):
    """First-order weighted random walks over a CSR graph."""
    cdef Py_ssize_t n_walks = starts.shape[0]
    walks_arr = np.full((n_walks, walk_len), -1, dtype=np.int32)
    cdef int[:, ::1] walks = walks_arr
    cdef Py_ssize_t w, s, lo, hi, j
    cdef long cur
    cdef double target
    with nogil:
        for w in range(n_walks):
            cur = starts[w]
            walks[w, 0] = <int> cur
            for s in range(1, walk_len):
                lo = indptr[cur]
                hi = indptr[cur + 1]
                if hi == lo:
                    break
                target = uniforms[w, s - 1] * cumw[hi - 1]
                j = _bisect_right(cumw, target, lo, hi)
                if j >= hi:
                    j = hi - 1
                cur = indices[j]
                walks[w, s] = <int> cur
    return walks_arr


def attraction_updates(int[:, ::1] walks, double[:, ::1] emb, double[::1] rates,
                       int window, double[::1] lower, double[::1] upper):
    """Pull co-occurring walk nodes toward each other, in place."""
    cdef Py_ssize_t n_walks = walks.shape[0]
    cdef Py_ssize_t L = walks.shape[1]
    cdef Py_ssize_t w, i, j, j_hi, d
    cdef int u, v
    cdef double ru, rv, delta, x, y
    cdef long n_pairs = 0
    with nogil:
        for w in range(n_walks):
            for i in range(L):
                u = walks[w, i]
                if u < 0:
                    break
                j_hi = i + window
                if j_hi > L - 1:
                    j_hi = L - 1
                for j in range(i + 1, j_hi + 1):
                    v = walks[w, j]
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
