"""Trainable building blocks: categorical embedding tables, a linear
projection, a one-layer BiLSTM and a linear-chain CRF, with handwritten
backprop.  Every layer keeps its parameters and gradient buffers as plain
numpy arrays; initialization is uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
per matrix with a +1 forget-gate bias.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..errors import WidthMismatch
from . import kernels


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Parameter container; subclasses register arrays by name."""

    def __init__(self):
        self._params: Dict[str, np.ndarray] = {}
        self._grads: Dict[str, np.ndarray] = {}

    def _register(self, name: str, value: np.ndarray) -> np.ndarray:
        self._params[name] = value
        self._grads[name] = np.zeros_like(value)
        return value

    def params(self) -> Dict[str, np.ndarray]:
        return self._params

    def grads(self) -> Dict[str, np.ndarray]:
        return self._grads

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g[...] = 0

    def load_params(self, values: Dict[str, np.ndarray]) -> None:
        for name, arr in self._params.items():
            src = values[name]
            if src.shape != arr.shape:
                raise ValueError(
                    f"parameter {name}: shape {src.shape} != {arr.shape}"
                )
            arr[...] = src


class EmbeddingTable(Layer):
    def __init__(self, vocab: int, dim: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.vocab = vocab
        self.dim = dim
        self.w = self._register("w", _uniform(rng, (vocab, dim), vocab, dtype))

    def forward(self, idx: np.ndarray) -> np.ndarray:
        return self.w[idx]

    def backward(self, idx: np.ndarray, dout: np.ndarray) -> None:
        np.add.at(self._grads["w"], idx, dout)


class Linear(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        self.w = self._register("w", _uniform(rng, (n_in, n_out), n_in, dtype))
        self.b = self._register("b", np.zeros(n_out, dtype=dtype))

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x @ self.w + self.b

    def backward(self, x: np.ndarray, dout: np.ndarray) -> np.ndarray:
        self._grads["w"] += x.T @ dout
        self._grads["b"] += dout.sum(axis=0)
        return dout @ self.w.T


class BiLstm(Layer):
    """One-layer bidirectional LSTM; output width is 2 * hidden."""

    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.n_in = n_in
        self.hidden = hidden
        for tag in ("f", "b"):
            self._register(f"wx_{tag}", _uniform(rng, (n_in, 4 * hidden), n_in, dtype))
            self._register(f"wh_{tag}", _uniform(rng, (hidden, 4 * hidden), hidden, dtype))
            bias = np.zeros(4 * hidden, dtype=dtype)
            bias[hidden : 2 * hidden] = 1.0  # forget gate
            self._register(f"b_{tag}", bias)

    def forward(self, x: np.ndarray):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise WidthMismatch(f"expected (T, {self.n_in}) input, got {x.shape}")
        p = self._params
        hf, cache_f = kernels.lstm_forward(x, p["wx_f"], p["wh_f"], p["b_f"])
        xr = np.ascontiguousarray(x[::-1])
        hb_r, cache_b = kernels.lstm_forward(xr, p["wx_b"], p["wh_b"], p["b_b"])
        h = np.concatenate([hf, hb_r[::-1]], axis=1)
        return h, (cache_f, cache_b)

    def backward(self, dh: np.ndarray, cache) -> np.ndarray:
        cache_f, cache_b = cache
        H = self.hidden
        g = self._grads
        dx_f, dwx, dwh, db = kernels.lstm_backward(
            np.ascontiguousarray(dh[:, :H]), cache_f
        )
        g["wx_f"] += dwx
        g["wh_f"] += dwh
        g["b_f"] += db
        dx_b_r, dwx, dwh, db = kernels.lstm_backward(
            np.ascontiguousarray(dh[::-1, H:]), cache_b
        )
        g["wx_b"] += dwx
        g["wh_b"] += dwh
        g["b_b"] += db
        return dx_f + dx_b_r[::-1]


class CrfLayer(Layer):
    """Linear-chain CRF with begin/end scores.

    Scores start at zero (a uniform chain) so early training is driven by
    the emissions; the uniform init used elsewhere adds nothing but noise
    here."""

    def __init__(self, n_labels: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.n_labels = n_labels
        self._register("trans", np.zeros((n_labels, n_labels), dtype=dtype))
        self._register("begin", np.zeros(n_labels, dtype=dtype))
        self._register("end", np.zeros(n_labels, dtype=dtype))

    def _check_labels(self, labels: np.ndarray) -> None:
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_labels):
            raise ValueError(
                f"label index outside [0, {self.n_labels}): {labels}"
            )

    def log_partition(self, emissions: np.ndarray) -> float:
        p = self._params
        return kernels.crf_log_partition(emissions, p["trans"], p["begin"], p["end"])

    def score(self, emissions: np.ndarray, labels: np.ndarray) -> float:
        self._check_labels(labels)
        p = self._params
        s = float(p["begin"][labels[0]] + p["end"][labels[-1]])
        s += float(emissions[np.arange(len(labels)), labels].sum())
        s += float(p["trans"][labels[:-1], labels[1:]].sum())
        return s

    def nll(self, emissions: np.ndarray, labels: np.ndarray) -> float:
        return self.log_partition(emissions) - self.score(emissions, labels)

    def nll_backward(
        self, emissions: np.ndarray, labels: np.ndarray, scale: float = 1.0
    ) -> Tuple[float, np.ndarray]:
        """NLL plus the gradient w.r.t. emissions; parameter gradients are
        accumulated in place (marginals minus gold indicators).  `scale`
        multiplies the loss and every gradient, so callers can normalize a
        sentence's contribution by its length."""
        self._check_labels(labels)
        p = self._params
        g = self._grads
        T = emissions.shape[0]
        unary, pairwise, log_z = kernels.crf_marginals(
            emissions, p["trans"], p["begin"], p["end"]
        )
        nll = log_z - self.score(emissions, labels)
        d_emissions = unary.copy()
        d_emissions[np.arange(T), labels] -= 1.0
        d_emissions *= scale
        if T > 1:
            g["trans"] += scale * pairwise.sum(axis=0)
            np.add.at(g["trans"], (labels[:-1], labels[1:]), -scale)
        g["begin"] += scale * unary[0]
        g["begin"][labels[0]] -= scale
        g["end"] += scale * unary[-1]
        g["end"][labels[-1]] -= scale
        return scale * nll, d_emissions

    def viterbi(self, emissions: np.ndarray) -> Tuple[np.ndarray, float]:
        p = self._params
        return kernels.crf_viterbi(emissions, p["trans"], p["begin"], p["end"])


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_xent(
    logits: np.ndarray, gold: int, allowed: Optional[Sequence[int]] = None
) -> Tuple[float, np.ndarray]:
    """Cross-entropy of one row of logits, optionally restricted to an
    allowed index subset (the masked candidate-set softmax).  Returns the
    loss and dloss/dlogits."""
    if allowed is not None:
        masked = np.full_like(logits, -np.inf)
        masked[list(allowed)] = logits[list(allowed)]
        logits = masked
    logp = log_softmax(logits)
    loss = -float(logp[gold])
    dlogits = np.exp(logp)
    dlogits[np.isneginf(logp)] = 0.0
    dlogits[gold] -= 1.0
    return loss, dlogits


def softmax_xent_rows(
    logits: np.ndarray, gold: np.ndarray
) -> Tuple[float, np.ndarray]:
    """Summed cross-entropy over rows; gold holds one index per row."""
    logp = log_softmax(logits)
    rows = np.arange(len(gold))
    loss = -float(logp[rows, gold].sum())
    dlogits = np.exp(logp)
    dlogits[rows, gold] -= 1.0
    return loss, dlogits
