# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of kernels_py: the LSTM recurrence and linear-chain CRF
dynamic programs with the per-timestep loops in C.

Matrix products that BLAS already handles well (input projections, the
backward weight products) stay in numpy; only the sequential recurrences
and label-lattice sweeps are compiled.  Contracts and array layouts match
kernels_py exactly.
"""

import numpy as np

cimport cython
from libc.math cimport exp, log, tanh


ctypedef fused floating:
    float
    double


def _np_dtype(arr):
    return np.float32 if arr.itemsize == 4 else np.float64


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------


def _lstm_forward_loop(
    floating[:, ::1] pre,
    floating[:, ::1] wh,
    floating[:, ::1] gi,
    floating[:, ::1] gf,
    floating[:, ::1] gg,
    floating[:, ::1] go,
    floating[:, ::1] c,
    floating[:, ::1] hc,
    floating[:, ::1] h,
):
    cdef Py_ssize_t T = pre.shape[0]
    cdef Py_ssize_t H = wh.shape[0]
    cdef Py_ssize_t t, j, k
    cdef double cv, hk
    cdef double[::1] s = np.zeros(4 * H, dtype=np.float64)
    for t in range(T):
        for j in range(4 * H):
            s[j] = pre[t, j]
        if t > 0:
            # row-major streaming of wh: s += h[t-1] @ wh
            for k in range(H):
                hk = h[t - 1, k]
                for j in range(4 * H):
                    s[j] += hk * wh[k, j]
        for j in range(H):
            gi[t, j] = <floating>(1.0 / (1.0 + exp(-s[j])))
            gf[t, j] = <floating>(1.0 / (1.0 + exp(-s[H + j])))
            gg[t, j] = <floating>tanh(s[2 * H + j])
            go[t, j] = <floating>(1.0 / (1.0 + exp(-s[3 * H + j])))
            cv = gf[t, j] * (c[t - 1, j] if t > 0 else 0.0) + gi[t, j] * gg[t, j]
            c[t, j] = <floating>cv
            hc[t, j] = <floating>tanh(cv)
            h[t, j] = go[t, j] * hc[t, j]


def lstm_forward(x, wx, wh, b):
    """Same contract as kernels_py.lstm_forward."""
    x = np.ascontiguousarray(x)
    wx = np.ascontiguousarray(wx)
    wh = np.ascontiguousarray(wh)
    b = np.ascontiguousarray(b)
    T = x.shape[0]
    H = wh.shape[0]
    dtype = _np_dtype(x)
    gi = np.zeros((T, H), dtype=dtype)
    gf = np.zeros((T, H), dtype=dtype)
    gg = np.zeros((T, H), dtype=dtype)
    go = np.zeros((T, H), dtype=dtype)
    c = np.zeros((T, H), dtype=dtype)
    hc = np.zeros((T, H), dtype=dtype)
    h = np.zeros((T, H), dtype=dtype)
    if T:
        pre = np.ascontiguousarray(x @ wx + b)
        _lstm_forward_loop(pre, wh, gi, gf, gg, go, c, hc, h)
    return h, (x, wx, wh, gi, gf, gg, go, c, hc, h)


def _lstm_backward_loop(
    floating[:, ::1] dh,
    floating[:, ::1] wh,
    floating[:, ::1] gi,
    floating[:, ::1] gf,
    floating[:, ::1] gg,
    floating[:, ::1] go,
    floating[:, ::1] c,
    floating[:, ::1] hc,
    floating[:, ::1] ds,
):
    cdef Py_ssize_t T = dh.shape[0]
    cdef Py_ssize_t H = wh.shape[0]
    cdef Py_ssize_t t, j, k
    cdef double dht, dc, di, dg, df, do, c_prev
    cdef double[::1] dh_next = np.zeros(H, dtype=np.float64)
    cdef double[::1] dc_next = np.zeros(H, dtype=np.float64)
    for t in range(T - 1, -1, -1):
        for j in range(H):
            dht = dh[t, j] + dh_next[j]
            c_prev = c[t - 1, j] if t > 0 else 0.0
            do = dht * hc[t, j]
            dc = dht * go[t, j] * (1.0 - <double>hc[t, j] * hc[t, j]) + dc_next[j]
            di = dc * gg[t, j]
            dg = dc * gi[t, j]
            df = dc * c_prev
            dc_next[j] = dc * gf[t, j]
            ds[t, j] = <floating>(di * gi[t, j] * (1.0 - gi[t, j]))
            ds[t, H + j] = <floating>(df * gf[t, j] * (1.0 - gf[t, j]))
            ds[t, 2 * H + j] = <floating>(dg * (1.0 - <double>gg[t, j] * gg[t, j]))
            ds[t, 3 * H + j] = <floating>(do * go[t, j] * (1.0 - go[t, j]))
        for k in range(H):
            dh_next[k] = 0.0
            for j in range(4 * H):
                dh_next[k] += ds[t, j] * wh[k, j]


def lstm_backward(dh, cache):
    x, wx, wh, gi, gf, gg, go, c, hc, h = cache
    dh = np.ascontiguousarray(dh)
    T, H = dh.shape
    dtype = _np_dtype(x)
    ds = np.zeros((T, 4 * H), dtype=dtype)
    if T:
        _lstm_backward_loop(dh, wh, gi, gf, gg, go, c, hc, ds)
    h_prev = np.zeros((T, H), dtype=dtype)
    if T > 1:
        h_prev[1:] = h[0 : T - 1]
    dx = ds @ wx.T
    dwx = x.T @ ds
    dwh = h_prev.T @ ds
    db = ds.sum(axis=0)
    return dx, dwx, dwh, db


# ---------------------------------------------------------------------------
# CRF
# ---------------------------------------------------------------------------


def _crf_alpha_loop(
    floating[:, ::1] em,
    floating[:, ::1] trans,
    floating[:, ::1] alpha,
):
    cdef Py_ssize_t T = em.shape[0]
    cdef Py_ssize_t K = em.shape[1]
    cdef Py_ssize_t t, j, k
    cdef double m, acc, v
    for t in range(1, T):
        for j in range(K):
            m = -1e300
            for k in range(K):
                v = alpha[t - 1, k] + trans[k, j]
                if v > m:
                    m = v
            acc = 0.0
            for k in range(K):
                acc += exp((alpha[t - 1, k] + trans[k, j]) - m)
            alpha[t, j] = <floating>(em[t, j] + m + log(acc))


def crf_alphas(emissions, trans, begin):
    emissions = np.ascontiguousarray(emissions)
    trans = np.ascontiguousarray(trans)
    T, K = emissions.shape
    alpha = np.zeros((T, K), dtype=_np_dtype(emissions))
    alpha[0] = begin + emissions[0]
    if T > 1:
        _crf_alpha_loop(emissions, trans, alpha)
    return alpha


def _crf_beta_loop(
    floating[:, ::1] em,
    floating[:, ::1] trans,
    floating[:, ::1] beta,
):
    cdef Py_ssize_t T = em.shape[0]
    cdef Py_ssize_t K = em.shape[1]
    cdef Py_ssize_t t, j, k
    cdef double m, acc, v
    for t in range(T - 2, -1, -1):
        for j in range(K):
            m = -1e300
            for k in range(K):
                v = trans[j, k] + em[t + 1, k] + beta[t + 1, k]
                if v > m:
                    m = v
            acc = 0.0
            for k in range(K):
                acc += exp((trans[j, k] + em[t + 1, k] + beta[t + 1, k]) - m)
            beta[t, j] = <floating>(m + log(acc))


def crf_betas(emissions, trans, end):
    emissions = np.ascontiguousarray(emissions)
    trans = np.ascontiguousarray(trans)
    T, K = emissions.shape
    beta = np.zeros((T, K), dtype=_np_dtype(emissions))
    beta[T - 1] = end
    if T > 1:
        _crf_beta_loop(emissions, trans, beta)
    return beta


def _logsumexp_row(row):
    m = np.max(row)
    return float(m + np.log(np.sum(np.exp(row - m))))


def crf_log_partition(emissions, trans, begin, end):
    alpha = crf_alphas(emissions, trans, begin)
    return _logsumexp_row(alpha[alpha.shape[0] - 1] + end)


def _crf_pairwise_loop(
    floating[:, ::1] em,
    floating[:, ::1] trans,
    floating[:, ::1] alpha,
    floating[:, ::1] beta,
    double log_z,
    floating[:, :, ::1] pairwise,
):
    cdef Py_ssize_t T = em.shape[0]
    cdef Py_ssize_t K = em.shape[1]
    cdef Py_ssize_t t, i, j
    for t in range(T - 1):
        for i in range(K):
            for j in range(K):
                pairwise[t, i, j] = <floating>exp(
                    alpha[t, i]
                    + trans[i, j]
                    + em[t + 1, j]
                    + beta[t + 1, j]
                    - log_z
                )


def crf_marginals(emissions, trans, begin, end):
    emissions = np.ascontiguousarray(emissions)
    trans = np.ascontiguousarray(trans)
    T, K = emissions.shape
    alpha = crf_alphas(emissions, trans, begin)
    beta = crf_betas(emissions, trans, end)
    log_z = _logsumexp_row(alpha[T - 1] + end)
    unary = np.exp(alpha + beta - log_z)
    dtype = _np_dtype(emissions)
    pairwise = np.zeros((max(T - 1, 0), K, K), dtype=dtype)
    if T > 1:
        _crf_pairwise_loop(emissions, trans, alpha, beta, log_z, pairwise)
    return unary, pairwise, float(log_z)


def _crf_viterbi_loop(
    floating[:, ::1] em,
    floating[:, ::1] trans,
    floating[:, ::1] score,
    long long[:, ::1] back,
):
    cdef Py_ssize_t T = em.shape[0]
    cdef Py_ssize_t K = em.shape[1]
    cdef Py_ssize_t t, j, k, arg
    cdef double best, v
    for t in range(1, T):
        for j in range(K):
            best = score[t - 1, 0] + trans[0, j]
            arg = 0
            for k in range(1, K):
                v = score[t - 1, k] + trans[k, j]
                if v > best:
                    best = v
                    arg = k
            score[t, j] = <floating>(best + em[t, j])
            back[t, j] = arg


def crf_viterbi(emissions, trans, begin, end):
    emissions = np.ascontiguousarray(emissions)
    trans = np.ascontiguousarray(trans)
    T, K = emissions.shape
    dtype = _np_dtype(emissions)
    score = np.zeros((T, K), dtype=dtype)
    score[0] = begin + emissions[0]
    back = np.zeros((T, K), dtype=np.int64)
    if T > 1:
        _crf_viterbi_loop(emissions, trans, score, back)
    final = score[T - 1] + end
    last = int(np.argmax(final))
    best = float(final[last])
    path = np.zeros(T, dtype=np.int64)
    path[T - 1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best
