"""Task models: a shared feature encoder (categorical embeddings plus
optional implicit vectors feeding a BiLSTM) under either a CRF tagging head
or the masked candidate-set classification head used for polyphones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import UnknownLemma
from . import layers


@dataclass
class EncodedSentence:
    """Model-ready view of one sentence."""

    sent_id: str
    feat_idx: np.ndarray  # (T, F) int32 embedding indices per field
    implicit: Optional[np.ndarray] = None  # (T, D) float, frozen input
    labels: Optional[np.ndarray] = None  # (T,) gold label ids (CRF tasks)
    targets: List[Tuple[int, str, int]] = field(default_factory=list)
    # targets: (position, lemma, gold candidate id) for polyphone sentences

    def __len__(self) -> int:
        return int(self.feat_idx.shape[0])


class Encoder:
    """Per-field embedding tables -> concat (+ implicit) -> BiLSTM."""

    def __init__(
        self,
        field_sizes: Sequence[int],
        embed_dim: int,
        implicit_dim: int,
        hidden: int,
        rng: np.random.Generator,
        dtype=np.float32,
    ):
        self.field_sizes = list(field_sizes)
        self.embed_dim = embed_dim
        self.implicit_dim = implicit_dim
        self.hidden = hidden
        self.dtype = dtype
        self.tables = [
            layers.EmbeddingTable(v, embed_dim, rng, dtype) for v in field_sizes
        ]
        self.input_dim = embed_dim * len(self.field_sizes) + implicit_dim
        self.bilstm = layers.BiLstm(self.input_dim, hidden, rng, dtype)

    @property
    def out_dim(self) -> int:
        return 2 * self.hidden

    def forward(self, ex: EncodedSentence):
        T = len(ex)
        parts = [table.forward(ex.feat_idx[:, f]) for f, table in enumerate(self.tables)]
        if self.implicit_dim:
            if ex.implicit is None or ex.implicit.shape != (T, self.implicit_dim):
                raise ValueError(
                    f"sentence {ex.sent_id!r}: expected implicit matrix "
                    f"({T}, {self.implicit_dim})"
                )
            parts.append(ex.implicit.astype(self.dtype, copy=False))
        x = (
            np.concatenate(parts, axis=1)
            if parts
            else np.zeros((T, 0), dtype=self.dtype)
        )
        h, lstm_cache = self.bilstm.forward(x)
        return h, (ex, x, lstm_cache)

    def backward(self, dh: np.ndarray, cache) -> None:
        ex, x, lstm_cache = cache
        dx = self.bilstm.backward(dh, lstm_cache)
        E = self.embed_dim
        for f, table in enumerate(self.tables):
            table.backward(ex.feat_idx[:, f], dx[:, f * E : (f + 1) * E])
        # implicit inputs are frozen: their slice of dx is dropped

    def layer_list(self) -> List[layers.Layer]:
        return [*self.tables, self.bilstm]


class _ModelBase:
    """Common parameter plumbing for the task models."""

    def _layers(self) -> List[Tuple[str, layers.Layer]]:
        raise NotImplementedError

    def params(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {}
        for prefix, layer in self._layers():
            for name, arr in layer.params().items():
                out[f"{prefix}.{name}"] = arr
        return out

    def grads(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {}
        for prefix, layer in self._layers():
            for name, arr in layer.grads().items():
                out[f"{prefix}.{name}"] = arr
        return out

    def zero_grads(self) -> None:
        for _, layer in self._layers():
            layer.zero_grads()

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params().items()}

    def load_snapshot(self, snap: Dict[str, np.ndarray]) -> None:
        for k, v in self.params().items():
            v[...] = snap[k]


class CrfTagger(_ModelBase):
    """BiLSTM-CRF sequence labeler (boundary and nucleus-change tasks)."""

    def __init__(
        self,
        field_sizes: Sequence[int],
        n_labels: int,
        embed_dim: int = 8,
        implicit_dim: int = 0,
        hidden: int = 32,
        seed: int = 0,
        dtype=np.float32,
    ):
        rng = np.random.default_rng(seed)
        self.encoder = Encoder(field_sizes, embed_dim, implicit_dim, hidden, rng, dtype)
        self.head = layers.Linear(self.encoder.out_dim, n_labels, rng, dtype)
        self.crf = layers.CrfLayer(n_labels, rng, dtype)
        self.n_labels = n_labels

    def _layers(self):
        enc = self.encoder.layer_list()
        named = [(f"enc.emb{f}", t) for f, t in enumerate(enc[:-1])]
        named.append(("enc.bilstm", enc[-1]))
        named.append(("head", self.head))
        named.append(("crf", self.crf))
        return named

    def loss_grads(self, ex: EncodedSentence) -> float:
        """Per-token mean NLL of the sentence; gradients accumulate into the
        layers.  Length normalization keeps batch gradient magnitudes
        independent of sentence length."""
        if len(ex) == 0:
            return 0.0
        assert ex.labels is not None
        h, cache = self.encoder.forward(ex)
        emissions = self.head.forward(h)
        nll, d_em = self.crf.nll_backward(emissions, ex.labels, scale=1.0 / len(ex))
        dh = self.head.backward(h, d_em)
        self.encoder.backward(dh, cache)
        return nll

    def emissions(self, ex: EncodedSentence) -> np.ndarray:
        h, _ = self.encoder.forward(ex)
        return self.head.forward(h)

    def predict(self, ex: EncodedSentence) -> np.ndarray:
        if len(ex) == 0:
            return np.zeros(0, dtype=np.int64)
        path, _ = self.crf.viterbi(self.emissions(ex))
        return path


class PdClassifier(_ModelBase):
    """BiLSTM with a per-lemma masked softmax at polyphone positions.

    `inventory` maps a lemma to its candidate pronunciations; all candidates
    share one projection layer and scoring is restricted to the lemma's
    subset.
    """

    def __init__(
        self,
        field_sizes: Sequence[int],
        inventory: Dict[str, Sequence[str]],
        embed_dim: int = 8,
        implicit_dim: int = 0,
        hidden: int = 32,
        seed: int = 0,
        dtype=np.float32,
    ):
        rng = np.random.default_rng(seed)
        self.inventory = {k: list(v) for k, v in sorted(inventory.items())}
        self.candidates: List[str] = sorted(
            {c for cands in self.inventory.values() for c in cands}
        )
        self._cand_idx = {c: i for i, c in enumerate(self.candidates)}
        self.lemma_slots = {
            lemma: [self._cand_idx[c] for c in cands]
            for lemma, cands in self.inventory.items()
        }
        self.encoder = Encoder(field_sizes, embed_dim, implicit_dim, hidden, rng, dtype)
        self.head = layers.Linear(self.encoder.out_dim, len(self.candidates), rng, dtype)

    def _layers(self):
        enc = self.encoder.layer_list()
        named = [(f"enc.emb{f}", t) for f, t in enumerate(enc[:-1])]
        named.append(("enc.bilstm", enc[-1]))
        named.append(("head", self.head))
        return named

    def candidate_id(self, pronunciation: str) -> int:
        return self._cand_idx[pronunciation]

    def loss_grads(self, ex: EncodedSentence) -> float:
        if not ex.targets or len(ex) == 0:
            return 0.0
        h, cache = self.encoder.forward(ex)
        logits = self.head.forward(h)
        d_logits = np.zeros_like(logits)
        total = 0.0
        for pos, lemma, gold in ex.targets:
            slots = self.lemma_slots.get(lemma)
            if slots is None:
                raise UnknownLemma(lemma)
            if gold not in slots:
                raise ValueError(
                    f"gold candidate {gold} is not among lemma {lemma!r} slots"
                )
            loss, drow = layers.softmax_xent(logits[pos], gold, slots)
            total += loss
            d_logits[pos] += drow
        dh = self.head.backward(h, d_logits)
        self.encoder.backward(dh, cache)
        return total

    def predict(self, ex: EncodedSentence) -> List[Tuple[int, str]]:
        """Argmax candidate per polyphone target, as (position, choice)."""
        if not ex.targets or len(ex) == 0:
            return []
        h, _ = self.encoder.forward(ex)
        logits = self.head.forward(h)
        out = []
        for pos, lemma, _gold in ex.targets:
            slots = self.lemma_slots.get(lemma)
            if slots is None:
                raise UnknownLemma(lemma)
            local = int(np.argmax(logits[pos][slots]))
            out.append((pos, self.candidates[slots[local]]))
        return out
