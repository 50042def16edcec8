"""Dictionary-driven lattice tokenizer and annotated-corpus ingestion.

The tokenizer builds a word lattice over the normalized input from all
dictionary matches, adds single-character unknown-word nodes so a path
always exists, and decodes the minimum-cost path (entry costs plus
connection costs, including begin/end markers).  Ties break toward fewer
morphemes, then the lexicographically smaller surface sequence, which keeps
decoding deterministic.

Corpus files carry gold tokenizations with per-word pronunciation, accent,
phrase-boundary and nucleus-change labels; training always runs on gold
tokenizations, never on tokenizer output.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import DanglingBoundary, LabelOutOfRange, MissingField
from .text import (
    Morpheme,
    Sentence,
    hiragana_to_katakana,
    normalize_text,
    segment_morae,
)

DEFAULT_UNKNOWN_COST = 10000

LEXICON_COLUMNS = [
    "surface",
    "left_id",
    "right_id",
    "cost",
    "pos",
    "pronunciation",
    "lexical_accent",
    "accent_combination_type",
    "conjugation_form",
    "conjugation_type",
    "word_type",
]


@dataclass(frozen=True)
class LexiconEntry:
    surface: str
    left_id: int
    right_id: int
    cost: int
    pos: str
    pronunciation: str
    lexical_accent: int = 0
    accent_combination_type: str = "*"
    conjugation_form: str = "*"
    conjugation_type: str = "*"
    word_type: str = "*"

    def __post_init__(self):
        if not self.surface:
            raise ValueError("lexicon entry with empty surface")

    def to_morpheme(self) -> Morpheme:
        return Morpheme(
            surface=self.surface,
            pos=self.pos,
            pronunciation=self.pronunciation,
            lexical_accent=self.lexical_accent,
            accent_combination_type=self.accent_combination_type,
            conjugation_form=self.conjugation_form,
            conjugation_type=self.conjugation_type,
            word_type=self.word_type,
        )


class ConnectionMatrix:
    """Rectangular cost table indexed by (right_id of the left word,
    left_id of the right word).  The begin and end markers use id 0."""

    def __init__(self, costs: Sequence[Sequence[int]]):
        rows = [list(r) for r in costs]
        if not rows or not rows[0]:
            raise ValueError("connection matrix must be at least 1x1")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("connection matrix is not rectangular")
        self._rows = rows
        self.shape = (len(rows), width)

    @classmethod
    def zeros(cls, rows: int = 1, cols: int = 1) -> "ConnectionMatrix":
        return cls([[0] * cols for _ in range(rows)])

    @classmethod
    def load(cls, path: str | Path) -> "ConnectionMatrix":
        tokens = Path(path).read_text(encoding="utf-8").split()
        if len(tokens) < 2:
            raise ValueError(f"{path}: missing 'R C' header")
        r, c = int(tokens[0]), int(tokens[1])
        values = [int(t) for t in tokens[2:]]
        if len(values) != r * c:
            raise ValueError(f"{path}: expected {r * c} entries, got {len(values)}")
        return cls([values[i * c : (i + 1) * c] for i in range(r)])

    def save(self, path: str | Path) -> None:
        r, c = self.shape
        lines = [f"{r} {c}"]
        lines += [" ".join(str(v) for v in row) for row in self._rows]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def cost(self, right_id: int, left_id: int) -> int:
        return self._rows[right_id][left_id]

    def check_entry(self, entry: LexiconEntry) -> None:
        rows, cols = self.shape
        if not (0 <= entry.right_id < rows and 0 <= entry.left_id < cols):
            raise ValueError(
                f"entry {entry.surface!r} ids ({entry.left_id}, {entry.right_id}) "
                f"outside connection matrix {rows}x{cols}"
            )


class Lexicon:
    """Immutable set of entries with a first-character prefix index."""

    def __init__(self, entries: Iterable[LexiconEntry]):
        self.entries: Tuple[LexiconEntry, ...] = tuple(entries)
        self._by_first: Dict[str, List[LexiconEntry]] = {}
        self.max_surface_len = 0
        for e in self.entries:
            self._by_first.setdefault(e.surface[0], []).append(e)
            self.max_surface_len = max(self.max_surface_len, len(e.surface))

    def __len__(self) -> int:
        return len(self.entries)

    def matches_at(self, text: str, pos: int) -> List[LexiconEntry]:
        out = []
        for e in self._by_first.get(text[pos], ()):  # surfaces share text[pos]
            if text.startswith(e.surface, pos):
                out.append(e)
        return out

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        entries = []
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != len(LEXICON_COLUMNS):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(LEXICON_COLUMNS)} columns, "
                    f"got {len(cols)}"
                )
            entries.append(
                LexiconEntry(
                    surface=cols[0],
                    left_id=int(cols[1]),
                    right_id=int(cols[2]),
                    cost=int(cols[3]),
                    pos=cols[4],
                    pronunciation=cols[5],
                    lexical_accent=int(cols[6]),
                    accent_combination_type=cols[7],
                    conjugation_form=cols[8],
                    conjugation_type=cols[9],
                    word_type=cols[10],
                )
            )
        return cls(entries)

    def save(self, path: str | Path) -> None:
        lines = ["#" + "\t".join(LEXICON_COLUMNS)]
        for e in self.entries:
            lines.append(
                "\t".join(
                    str(getattr(e, col)) for col in LEXICON_COLUMNS
                )
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class LatticeNode:
    start: int
    end: int
    entry: LexiconEntry


def _unknown_entry(ch: str, cost: int) -> LexiconEntry:
    if "ァ" <= ch <= "ー":
        pron = ch if ch != "・" else ""
    elif "ぁ" <= ch <= "ゖ" or ch == "ー":
        pron = hiragana_to_katakana(ch)
    else:
        pron = ""
    # Keep only segmentable pronunciations; glides etc. fall back to empty.
    try:
        segment_morae(pron)
    except Exception:
        pron = ""
    return LexiconEntry(
        surface=ch, left_id=0, right_id=0, cost=cost, pos="unknown", pronunciation=pron
    )


def build_lattice(
    text: str, lexicon: Lexicon, unknown_cost: int = DEFAULT_UNKNOWN_COST
) -> List[LatticeNode]:
    """All dictionary matches over the normalized text plus one
    single-character unknown node per position."""
    nodes: List[LatticeNode] = []
    for i in range(len(text)):
        for e in lexicon.matches_at(text, i):
            nodes.append(LatticeNode(i, i + len(e.surface), e))
        nodes.append(LatticeNode(i, i + 1, _unknown_entry(text[i], unknown_cost)))
    return nodes


# Path ranking key: total cost, then morpheme count, then surface sequence.
# Appending a common suffix preserves the order of two same-span prefixes,
# so per-node top-k decoding over the DAG stays exact.
_PathKey = Tuple[int, int, Tuple[str, ...]]


@dataclass
class _Partial:
    key: _PathKey
    nodes: Tuple[LatticeNode, ...]


def _decode(
    text: str,
    lexicon: Lexicon,
    conn: ConnectionMatrix,
    n: int,
    unknown_cost: int,
) -> List[Tuple[_PathKey, Tuple[LatticeNode, ...]]]:
    if not text:
        return [((0, 0, ()), ())]
    nodes = build_lattice(text, lexicon, unknown_cost)
    by_start: Dict[int, List[int]] = {}
    for idx, node in enumerate(nodes):
        conn.check_entry(node.entry)
        by_start.setdefault(node.start, []).append(idx)

    best: List[List[_Partial]] = [[] for _ in nodes]

    def push(acc: List[_Partial], item: _Partial) -> None:
        acc.append(item)
        acc.sort(key=lambda p: p.key)
        del acc[n:]

    order = sorted(range(len(nodes)), key=lambda i: (nodes[i].start, nodes[i].end))
    for idx in order:
        node = nodes[idx]
        e = node.entry
        if node.start == 0:
            cost = conn.cost(0, e.left_id) + e.cost
            push(best[idx], _Partial((cost, 1, (e.surface,)), (node,)))
        for prev_idx in range(len(nodes)):
            if nodes[prev_idx].end != node.start:
                continue
            step = conn.cost(nodes[prev_idx].entry.right_id, e.left_id) + e.cost
            for p in best[prev_idx]:
                key = (p.key[0] + step, p.key[1] + 1, p.key[2] + (e.surface,))
                push(best[idx], _Partial(key, p.nodes + (node,)))

    finals: List[_Partial] = []
    for idx, node in enumerate(nodes):
        if node.end != len(text):
            continue
        eos = conn.cost(node.entry.right_id, 0)
        for p in best[idx]:
            push(finals, _Partial((p.key[0] + eos, p.key[1], p.key[2]), p.nodes))
    return [(p.key, p.nodes) for p in finals]


def _to_sentence(text: str, nodes: Sequence[LatticeNode], sent_id: str) -> Sentence:
    return Sentence(
        raw=text,
        morphemes=tuple(node.entry.to_morpheme() for node in nodes),
        id=sent_id,
    )


def tokenize(
    text: str,
    lexicon: Lexicon,
    conn: Optional[ConnectionMatrix] = None,
    unknown_cost: int = DEFAULT_UNKNOWN_COST,
    sent_id: str = "",
) -> Sentence:
    """Minimum-cost lattice tokenization of the normalized text."""
    results = nbest(text, lexicon, conn, 1, unknown_cost, sent_id)
    return results[0]


def nbest(
    text: str,
    lexicon: Lexicon,
    conn: Optional[ConnectionMatrix] = None,
    n: int = 1,
    unknown_cost: int = DEFAULT_UNKNOWN_COST,
    sent_id: str = "",
) -> List[Sentence]:
    """Up to n tokenizations in non-decreasing cost order; the first equals
    `tokenize` output."""
    if n < 1:
        raise ValueError("n must be positive")
    normalized = normalize_text(text)
    conn = conn or ConnectionMatrix.zeros()
    ranked = _decode(normalized, lexicon, conn, n, unknown_cost)
    return [_to_sentence(normalized, nodes, sent_id) for _, nodes in ranked]


def path_cost(
    nodes: Sequence[LatticeNode], conn: ConnectionMatrix
) -> int:
    """Total cost of a complete lattice path including begin/end markers."""
    if not nodes:
        return 0
    total = conn.cost(0, nodes[0].entry.left_id)
    for prev, cur in zip(nodes, nodes[1:]):
        total += prev.entry.cost + conn.cost(prev.entry.right_id, cur.entry.left_id)
    total += nodes[-1].entry.cost + conn.cost(nodes[-1].entry.right_id, 0)
    return total


# ---------------------------------------------------------------------------
# Annotated corpus
# ---------------------------------------------------------------------------

CORPUS_COLUMNS = [
    "surface",
    "pos",
    "pronunciation",
    "lexical_accent",
    "accent_combination_type",
    "conjugation_form",
    "conjugation_type",
    "word_type",
    "boundary_before",
    "nucleus_label",
    "polyphone_lemma",
]


@dataclass(frozen=True)
class AnnotatedSentence:
    sentence: Sentence
    boundaries: Tuple[bool, ...]
    nucleus_labels: Tuple[str, ...]

    def __post_init__(self):
        n = len(self.sentence)
        if len(self.boundaries) != n or len(self.nucleus_labels) != n:
            raise ValueError("label count does not match morpheme count")


@dataclass(frozen=True)
class AnnotatedCorpus:
    sentences: Tuple[AnnotatedSentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def _nucleus_shift(label: str) -> Optional[int]:
    """NUC(k) labels encode a phrase-relative shift; KEEP/FLAT return None."""
    if label.startswith("NUC"):
        return int(label[3:])
    return None


def parse_nucleus_label(label: str) -> str:
    if label in ("KEEP", "FLAT"):
        return label
    if label.startswith("NUC"):
        k = int(label[3:])
        if not (1 <= k <= 10):
            raise ValueError(f"nucleus shift {k} outside 1..10")
        return label
    raise ValueError(f"unknown nucleus label {label!r}")


def load_corpus(path: str | Path) -> AnnotatedCorpus:
    """Parse the annotated corpus format; malformed lines raise with their
    line number."""
    sentences: List[AnnotatedSentence] = []
    block: List[Tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines.append("")  # terminate the final block
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            block.append((lineno, line))
            continue
        if block:
            sentences.append(_parse_block(block))
            block = []
    return AnnotatedCorpus(tuple(sentences))


def _parse_block(block: List[Tuple[int, str]]) -> AnnotatedSentence:
    lineno, header = block[0]
    if not header.startswith("#id"):
        raise MissingField("expected '#id <sentence-id>' header", lineno)
    parts = header.split(None, 1)
    sent_id = parts[1].strip() if len(parts) > 1 else ""
    if len(block) < 2:
        raise MissingField("missing raw-text line", lineno)
    raw = block[1][1]

    morphemes: List[Morpheme] = []
    boundaries: List[bool] = []
    labels: List[str] = []
    for lineno, line in block[2:]:
        cols = line.split("\t")
        if len(cols) != len(CORPUS_COLUMNS):
            raise MissingField(
                f"expected {len(CORPUS_COLUMNS)} fields, got {len(cols)}", lineno
            )
        lemma = cols[10]
        m = Morpheme(
            surface=cols[0],
            pos=cols[1],
            pronunciation=cols[2],
            lexical_accent=int(cols[3]),
            accent_combination_type=cols[4],
            conjugation_form=cols[5],
            conjugation_type=cols[6],
            word_type=cols[7],
            is_polyphone_target=lemma != "-",
            polyphone_lemma=None if lemma == "-" else lemma,
        )
        try:
            label = parse_nucleus_label(cols[9])
        except ValueError as exc:
            raise LabelOutOfRange(str(exc), lineno) from None
        shift = _nucleus_shift(label)
        if shift is not None and shift > m.mora_count:
            raise LabelOutOfRange(
                f"nucleus label {label} on {m.surface!r} with "
                f"{m.mora_count} morae",
                lineno,
            )
        if cols[8] not in ("0", "1"):
            raise MissingField(f"boundary flag must be 0 or 1, got {cols[8]!r}", lineno)
        morphemes.append(m)
        boundaries.append(cols[8] == "1")
        labels.append(label)

    if morphemes and not boundaries[0]:
        raise DanglingBoundary(
            "first word of a sentence must open an accent phrase", block[2][0]
        )
    sentence = Sentence(raw=raw, morphemes=tuple(morphemes), id=sent_id)
    return AnnotatedSentence(sentence, tuple(boundaries), tuple(labels))


def save_corpus(corpus: AnnotatedCorpus, path: str | Path) -> None:
    blocks = []
    for ann in corpus:
        lines = [f"#id {ann.sentence.id}", ann.sentence.raw]
        for m, b, lab in zip(ann.sentence.morphemes, ann.boundaries, ann.nucleus_labels):
            lines.append(
                "\t".join(
                    [
                        m.surface,
                        m.pos,
                        m.pronunciation,
                        str(m.lexical_accent),
                        m.accent_combination_type,
                        m.conjugation_form,
                        m.conjugation_type,
                        m.word_type,
                        "1" if b else "0",
                        lab,
                        m.polyphone_lemma or "-",
                    ]
                )
            )
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
