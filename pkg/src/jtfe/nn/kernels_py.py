"""Pure-numpy reference kernels for the LSTM recurrence and linear-chain
CRF dynamic programs.

These are the hot inner loops of training; a compiled twin lives in
`_ckernels` and is selected at import by `kernels`.  Both implementations
share the exact array-in/array-out contracts below and respect the input
dtype (float32 for training, float64 for gradient checks).
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

NEG_INF = -1e30


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_forward(x, wx, wh, b):
    """One-direction LSTM from zero initial state.

    x: (T, I); wx: (I, 4H); wh: (H, 4H); b: (4H,).  Gate order i, f, g, o.
    Returns (h, cache) with h: (T, H).
    """
    T = x.shape[0]
    H = wh.shape[0]
    dtype = x.dtype
    h = np.zeros((T, H), dtype=dtype)
    gi = np.zeros((T, H), dtype=dtype)
    gf = np.zeros((T, H), dtype=dtype)
    gg = np.zeros((T, H), dtype=dtype)
    go = np.zeros((T, H), dtype=dtype)
    c = np.zeros((T, H), dtype=dtype)
    hc = np.zeros((T, H), dtype=dtype)

    pre = x @ wx + b if T else np.zeros((0, 4 * H), dtype=dtype)
    h_prev = np.zeros(H, dtype=dtype)
    c_prev = np.zeros(H, dtype=dtype)
    for t in range(T):
        s = pre[t] + h_prev @ wh
        gi[t] = _sigmoid(s[:H])
        gf[t] = _sigmoid(s[H : 2 * H])
        gg[t] = np.tanh(s[2 * H : 3 * H])
        go[t] = _sigmoid(s[3 * H :])
        c[t] = gf[t] * c_prev + gi[t] * gg[t]
        hc[t] = np.tanh(c[t])
        h[t] = go[t] * hc[t]
        h_prev = h[t]
        c_prev = c[t]
    cache = (x, wx, wh, gi, gf, gg, go, c, hc, h)
    return h, cache


def lstm_backward(dh, cache):
    """Gradients of a scalar loss given dL/dh for every timestep.

    Returns (dx, dwx, dwh, db).
    """
    x, wx, wh, gi, gf, gg, go, c, hc, h = cache
    T, H = dh.shape
    dtype = x.dtype
    ds = np.zeros((T, 4 * H), dtype=dtype)
    dh_next = np.zeros(H, dtype=dtype)
    dc_next = np.zeros(H, dtype=dtype)
    for t in range(T - 1, -1, -1):
        dht = dh[t] + dh_next
        c_prev = c[t - 1] if t > 0 else np.zeros(H, dtype=dtype)
        do = dht * hc[t]
        dc = dht * go[t] * (1.0 - hc[t] * hc[t]) + dc_next
        di = dc * gg[t]
        dg = dc * gi[t]
        df = dc * c_prev
        dc_next = dc * gf[t]
        ds[t, :H] = di * gi[t] * (1.0 - gi[t])
        ds[t, H : 2 * H] = df * gf[t] * (1.0 - gf[t])
        ds[t, 2 * H : 3 * H] = dg * (1.0 - gg[t] * gg[t])
        ds[t, 3 * H :] = do * go[t] * (1.0 - go[t])
        dh_next = ds[t] @ wh.T
    h_prev = np.zeros((T, H), dtype=dtype)
    if T > 1:
        h_prev[1:] = h[:-1]
    dx = ds @ wx.T
    dwx = x.T @ ds
    dwh = h_prev.T @ ds
    db = ds.sum(axis=0)
    return dx, dwx, dwh, db


def _logsumexp(v, axis=-1):
    m = np.max(v, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(v - m), axis=axis, keepdims=True))).squeeze(axis)


def crf_alphas(emissions, trans, begin):
    """Forward log-potentials: alpha[0] = begin + e0,
    alpha[t] = e_t + logsumexp_j(alpha[t-1, j] + trans[j, :])."""
    T, K = emissions.shape
    alpha = np.zeros((T, K), dtype=emissions.dtype)
    alpha[0] = begin + emissions[0]
    for t in range(1, T):
        alpha[t] = emissions[t] + _logsumexp(alpha[t - 1][:, None] + trans, axis=0)
    return alpha


def crf_betas(emissions, trans, end):
    """Backward log-potentials: beta[T-1] = end,
    beta[t] = logsumexp_j(trans[:, j] + e_{t+1, j} + beta[t+1, j])."""
    T, K = emissions.shape
    beta = np.zeros((T, K), dtype=emissions.dtype)
    beta[T - 1] = end
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp(trans + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def crf_log_partition(emissions, trans, begin, end):
    alpha = crf_alphas(emissions, trans, begin)
    return float(_logsumexp(alpha[-1] + end, axis=0))


def crf_marginals(emissions, trans, begin, end):
    """Unary (T, K) and pairwise (T-1, K, K) posterior marginals."""
    T, K = emissions.shape
    alpha = crf_alphas(emissions, trans, begin)
    beta = crf_betas(emissions, trans, end)
    log_z = _logsumexp(alpha[-1] + end, axis=0)
    unary = np.exp(alpha + beta - log_z)
    pairwise = np.zeros((max(T - 1, 0), K, K), dtype=emissions.dtype)
    for t in range(T - 1):
        pairwise[t] = np.exp(
            alpha[t][:, None]
            + trans
            + (emissions[t + 1] + beta[t + 1])[None, :]
            - log_z
        )
    return unary, pairwise, float(log_z)


def crf_viterbi(emissions, trans, begin, end) -> Tuple[np.ndarray, float]:
    """Best label sequence and its path score."""
    T, K = emissions.shape
    score = begin + emissions[0]
    back = np.zeros((T, K), dtype=np.int64)
    for t in range(1, T):
        cand = score[:, None] + trans
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(K)] + emissions[t]
    score = score + end
    last = int(np.argmax(score))
    best = float(score[last])
    path = np.zeros(T, dtype=np.int64)
    path[T - 1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best
