"""Implicit-feature providers: a file-backed reader for pre-exported
contextual embeddings, subword-to-word pooling, and a small trainable
character-level bidirectional language model.

Embedding file layout (little-endian):

    magic "JTFE" | u32 version=1 | u32 dim | u32 sentence count
    per sentence: u32 id length | id (utf-8) | u32 token count
                  | token_count * dim float32
    index: count * u64 record offsets (from file start)
    u64 index offset

The writer and reader round-trip bit-exactly; the same contract is shared
with the offline exporter tool.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BadMagic, DimMismatch, EmptyRange, UnknownSentenceId
from .nn import layers
from .nn import kernels
from .text import Sentence

MAGIC = b"JTFE"
VERSION = 1


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Token-aligned dense vectors for one sentence (one row per morpheme)."""

    vectors: np.ndarray  # (tokens, dim) float32

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


def write_embedding_file(
    path: str | Path,
    dim: int,
    records: Iterable[Tuple[str, np.ndarray]],
) -> None:
    """Write (sentence-id, matrix) records; every matrix must be
    (tokens, dim) float32."""
    records = list(records)
    ids = [sid for sid, _ in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate sentence ids")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, dim, len(records)))
        offsets: List[int] = []
        for sid, matrix in records:
            matrix = np.asarray(matrix, dtype=np.float32)
            if matrix.ndim != 2 or matrix.shape[1] != dim:
                raise DimMismatch(
                    f"sentence {sid!r}: matrix {matrix.shape} does not match dim {dim}"
                )
            offsets.append(fh.tell())
            raw = sid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", matrix.shape[0]))
            fh.write(np.ascontiguousarray(matrix).tobytes())
        index_offset = fh.tell()
        for off in offsets:
            fh.write(struct.pack("<Q", off))
        fh.write(struct.pack("<Q", index_offset))


class EmbeddingFile:
    """Indexed store of per-sentence, per-token vectors keyed by id."""

    def __init__(self, dim: int, matrices: Dict[str, np.ndarray]):
        self.dim = dim
        self._matrices = matrices

    def __len__(self) -> int:
        return len(self._matrices)

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self._matrices

    @property
    def sentence_ids(self) -> List[str]:
        return list(self._matrices)

    def fetch(self, sentence_id: str) -> EmbeddingMatrix:
        try:
            return EmbeddingMatrix(self._matrices[sentence_id])
        except KeyError:
            raise UnknownSentenceId(
                f"sentence id {sentence_id!r} not in embedding file"
            ) from None

    def records(self) -> List[Tuple[str, np.ndarray]]:
        return list(self._matrices.items())

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingFile":
        data = Path(path).read_bytes()
        if len(data) < 24 or data[:4] != MAGIC:
            raise BadMagic(f"{path}: not an embedding file")
        version, dim, count = struct.unpack_from("<III", data, 4)
        if version != VERSION:
            raise BadMagic(f"{path}: unsupported version {version}")
        (index_offset,) = struct.unpack_from("<Q", data, len(data) - 8)
        records_end = index_offset
        if records_end + 8 * count + 8 != len(data):
            raise DimMismatch(f"{path}: index does not match record region")
        pos = 16
        matrices: Dict[str, np.ndarray] = {}
        for _ in range(count):
            if pos + 4 > records_end:
                raise DimMismatch(f"{path}: truncated record header")
            (id_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            sid = data[pos : pos + id_len].decode("utf-8")
            pos += id_len
            (tokens,) = struct.unpack_from("<I", data, pos)
            pos += 4
            nbytes = 4 * tokens * dim
            if pos + nbytes > records_end:
                raise DimMismatch(
                    f"{path}: record {sid!r} shorter than {tokens}x{dim} floats"
                )
            matrix = (
                np.frombuffer(data, dtype="<f4", count=tokens * dim, offset=pos)
                .reshape(tokens, dim)
                .copy()
            )
            pos += nbytes
            if sid in matrices:
                raise DimMismatch(f"{path}: duplicate sentence id {sid!r}")
            matrices[sid] = matrix
        if pos != records_end:
            raise DimMismatch(f"{path}: {records_end - pos} stray record bytes")
        return cls(dim, matrices)

    def save(self, path: str | Path) -> None:
        write_embedding_file(path, self.dim, self.records())


def pool_subwords(
    subword_vectors: np.ndarray, alignment: Sequence[Tuple[int, int]]
) -> EmbeddingMatrix:
    """Mean-pool subword rows into one vector per word.

    `alignment` holds half-open subword index ranges that must partition the
    subword sequence in order.
    """
    vectors = np.asarray(subword_vectors, dtype=np.float32)
    expected = 0
    rows = []
    for start, end in alignment:
        if end <= start:
            raise EmptyRange(f"range [{start}, {end}) is empty")
        if start != expected:
            raise ValueError(f"ranges must be contiguous; got [{start}, {end})")
        expected = end
        rows.append(vectors[start:end].mean(axis=0))
    if expected != vectors.shape[0]:
        raise ValueError(
            f"ranges cover {expected} of {vectors.shape[0]} subwords"
        )
    if not rows:
        return EmbeddingMatrix(np.zeros((0, vectors.shape[1]), dtype=np.float32))
    return EmbeddingMatrix(np.stack(rows).astype(np.float32))


# ---------------------------------------------------------------------------
# Character-level bidirectional language model
# ---------------------------------------------------------------------------

BOS = "<s>"
EOS = "</s>"
CHAR_UNK = "<unk>"


@dataclass
class CharLmConfig:
    embed_dim: int = 16
    hidden: int = 32
    epochs: int = 20
    lr: float = 0.05
    seed: int = 0


class CharLM:
    """Forward and backward character LMs sharing one vocabulary.

    Word vectors are the forward hidden state at a word's last character
    concatenated with the backward hidden state at its first character, so
    the embedding dim is 2 * hidden.
    """

    def __init__(self, vocab: Sequence[str], config: CharLmConfig):
        self.vocab = list(vocab)
        self.char_to_id = {c: i for i, c in enumerate(self.vocab)}
        self.config = config
        rng = np.random.default_rng(config.seed)
        V, E, H = len(self.vocab), config.embed_dim, config.hidden
        self.sides = {}
        for side in ("fwd", "bwd"):
            self.sides[side] = {
                "embed": layers.EmbeddingTable(V, E, rng),
                "lstm_wx": layers._uniform(rng, (E, 4 * H), E, np.float32),
                "lstm_wh": layers._uniform(rng, (H, 4 * H), H, np.float32),
                "lstm_b": np.zeros(4 * H, dtype=np.float32),
                "out": layers.Linear(H, V, rng),
            }
            self.sides[side]["lstm_b"][H : 2 * H] = 1.0

    @property
    def dim(self) -> int:
        return 2 * self.config.hidden

    @classmethod
    def build_vocab(cls, corpus_text: str) -> List[str]:
        chars = sorted(set(corpus_text) - {"\n"})
        return [CHAR_UNK, BOS, EOS] + chars

    def _ids(self, text: str) -> np.ndarray:
        unk = self.char_to_id[CHAR_UNK]
        return np.array(
            [self.char_to_id[BOS]]
            + [self.char_to_id.get(c, unk) for c in text]
            + [self.char_to_id[EOS]],
            dtype=np.int64,
        )

    def _hidden_states(self, side: str, ids: np.ndarray) -> np.ndarray:
        s = self.sides[side]
        x = s["embed"].forward(ids)
        h, _ = kernels.lstm_forward(x, s["lstm_wx"], s["lstm_wh"], s["lstm_b"])
        return h

    def _step(self, side: str, text: str, lr: float) -> Tuple[float, int]:
        """One SGD step on one sequence; returns (summed loss, positions)."""
        s = self.sides[side]
        ids = self._ids(text)
        inputs, golds = ids[:-1], ids[1:]
        x = s["embed"].forward(inputs)
        h, cache = kernels.lstm_forward(x, s["lstm_wx"], s["lstm_wh"], s["lstm_b"])
        logits = s["out"].forward(h)
        loss, dlogits = layers.softmax_xent_rows(logits, golds)
        s["embed"].zero_grads()
        s["out"].zero_grads()
        dh = s["out"].backward(h, dlogits)
        dx, dwx, dwh, db = kernels.lstm_backward(dh, cache)
        s["embed"].backward(inputs, dx)
        n = len(golds)
        scale = lr / n
        s["embed"].params()["w"] -= scale * s["embed"].grads()["w"]
        s["out"].params()["w"] -= scale * s["out"].grads()["w"]
        s["out"].params()["b"] -= scale * s["out"].grads()["b"]
        s["lstm_wx"] -= scale * dwx
        s["lstm_wh"] -= scale * dwh
        s["lstm_b"] -= scale * db
        return loss, n

    def _eval_loss(self, side: str, sequences: Sequence[str]) -> float:
        total, count = 0.0, 0
        s = self.sides[side]
        for text in sequences:
            ids = self._ids(text)
            inputs, golds = ids[:-1], ids[1:]
            x = s["embed"].forward(inputs)
            h, _ = kernels.lstm_forward(x, s["lstm_wx"], s["lstm_wh"], s["lstm_b"])
            logits = s["out"].forward(h)
            loss, _ = layers.softmax_xent_rows(logits, golds)
            total += loss
            count += len(golds)
        return total / max(count, 1)

    def embed_sentence(self, sentence: Sentence) -> EmbeddingMatrix:
        """Per-morpheme vectors: forward state at the word's last character,
        backward state at its first character (unknown characters map to the
        UNK symbol)."""
        text = "".join(m.surface for m in sentence.morphemes)
        n = len(sentence.morphemes)
        if n == 0:
            return EmbeddingMatrix(np.zeros((0, self.dim), dtype=np.float32))
        h_fwd = self._hidden_states("fwd", self._ids(text))
        h_bwd = self._hidden_states("bwd", self._ids(text[::-1]))
        H = self.config.hidden
        out = np.zeros((n, 2 * H), dtype=np.float32)
        offset = 0
        L = len(text)
        for i, m in enumerate(sentence.morphemes):
            first = offset
            last = offset + len(m.surface) - 1
            # forward states are over [BOS] + text, so char j sits at row j+1
            out[i, :H] = h_fwd[last + 1]
            # backward runs over reversed text: char j sits at row (L-1-j)+1
            out[i, H:] = h_bwd[L - first]
            offset += len(m.surface)
        return EmbeddingMatrix(out)

    def params_blob(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {}
        for side, s in self.sides.items():
            out[f"{side}.embed.w"] = s["embed"].params()["w"]
            out[f"{side}.lstm_wx"] = s["lstm_wx"]
            out[f"{side}.lstm_wh"] = s["lstm_wh"]
            out[f"{side}.lstm_b"] = s["lstm_b"]
            out[f"{side}.out.w"] = s["out"].params()["w"]
            out[f"{side}.out.b"] = s["out"].params()["b"]
        return out

    def load_blob(self, blob: Dict[str, np.ndarray]) -> None:
        for side, s in self.sides.items():
            s["embed"].params()["w"][...] = blob[f"{side}.embed.w"]
            s["lstm_wx"][...] = blob[f"{side}.lstm_wx"]
            s["lstm_wh"][...] = blob[f"{side}.lstm_wh"]
            s["lstm_b"][...] = blob[f"{side}.lstm_b"]
            s["out"].params()["w"][...] = blob[f"{side}.out.w"]
            s["out"].params()["b"][...] = blob[f"{side}.out.b"]


@dataclass
class CharLmHistory:
    initial_loss: float
    epoch_losses: List[float]

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else self.initial_loss


def train_charlm(
    corpus_path: str | Path, config: Optional[CharLmConfig] = None
) -> Tuple[CharLM, CharLmHistory]:
    """Train forward and backward next/previous-character models on a plain
    text corpus (one sequence per non-empty line)."""
    config = config or CharLmConfig()
    text = Path(corpus_path).read_text(encoding="utf-8")
    sequences = [line for line in text.splitlines() if line.strip()]
    if not sequences:
        raise ValueError(f"{corpus_path}: corpus is empty")
    model = CharLM(CharLM.build_vocab(text), config)
    reversed_sequences = [s[::-1] for s in sequences]
    initial = model._eval_loss("fwd", sequences) + model._eval_loss(
        "bwd", reversed_sequences
    )
    rng = np.random.default_rng(config.seed)
    epoch_losses: List[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(sequences))
        for i in order:
            model._step("fwd", sequences[int(i)], config.lr)
            model._step("bwd", reversed_sequences[int(i)], config.lr)
        epoch_losses.append(
            model._eval_loss("fwd", sequences)
            + model._eval_loss("bwd", reversed_sequences)
        )
    return model, CharLmHistory(initial, epoch_losses)


def charlm_embed(model: CharLM, sentence: Sentence) -> EmbeddingMatrix:
    return model.embed_sentence(sentence)


CHARLM_MAGIC_TASK = "charlm"


def save_charlm(model: CharLM, path: str | Path) -> None:
    from .nn.io import save_model_file

    meta = {
        "vocab": model.vocab,
        "embed_dim": model.config.embed_dim,
        "hidden": model.config.hidden,
        "seed": model.config.seed,
    }
    save_model_file(path, CHARLM_MAGIC_TASK, meta, model.params_blob())


def load_charlm(path: str | Path) -> CharLM:
    from .nn.io import load_model_file

    task, meta, params = load_model_file(path)
    if task != CHARLM_MAGIC_TASK:
        raise ValueError(f"{path}: not a character LM file (task {task!r})")
    config = CharLmConfig(
        embed_dim=meta["embed_dim"], hidden=meta["hidden"], seed=meta["seed"]
    )
    model = CharLM(meta["vocab"], config)
    model.load_blob(params)
    return model
