"""Explicit categorical features per word and their embedding-index mapping.

Seven feature families are extracted per morpheme:

  ef1  part-of-speech tag
  ef2  conjugation form, conjugation type, word type
  ef3  mora-count bucket and the first two morae of the pronunciation
  ef4  lexical-accent bucket and accent-combination type
  ef5  words-in-phrase bucket and position within the phrase
  ef6  nucleus-change label the sandhi rule table assigns in context
  ef7  log-count buckets of word unigram / adjacent bigram frequency

ef5/ef6 need a phrase partition and ef7 an n-gram count table; when a
prerequisite is missing the field is filled with the reserved NA symbol.
Task heads consume subsets: PD uses ef1 only, boundary prediction ef1-4
(optionally ef7), nucleus prediction ef1-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import LookupBeforeFit
from .rules import SandhiRuleTable, mora_bucket, rule_sandhi
from .text import AccentPhrase, Sentence, check_partition

UNK = "<unk>"
NA = "<na>"

PD_FIELDS = ("ef1_pos",)
APBP_FIELDS = (
    "ef1_pos",
    "ef2_conjugation_form",
    "ef2_conjugation_type",
    "ef2_word_type",
    "ef3_mora_bucket",
    "ef3_first_mora",
    "ef3_second_mora",
    "ef4_accent_bucket",
    "ef4_combination_type",
)
EF7_FIELDS = ("ef7_unigram_bucket", "ef7_bigram_bucket")
ANPP_FIELDS = APBP_FIELDS + (
    "ef5_words_bucket",
    "ef5_position",
    "ef6_rule_label",
)
ALL_FIELDS = ANPP_FIELDS + EF7_FIELDS


def task_fields(task: str, use_ef7: bool = False) -> Tuple[str, ...]:
    if task == "pd":
        return PD_FIELDS
    if task == "apbp":
        return APBP_FIELDS + (EF7_FIELDS if use_ef7 else ())
    if task == "anpp":
        return ANPP_FIELDS
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class FeatureBundle:
    ef1_pos: str
    ef2_conjugation_form: str
    ef2_conjugation_type: str
    ef2_word_type: str
    ef3_mora_bucket: str
    ef3_first_mora: str
    ef3_second_mora: str
    ef4_accent_bucket: str
    ef4_combination_type: str
    ef5_words_bucket: str
    ef5_position: str
    ef6_rule_label: str
    ef7_unigram_bucket: str
    ef7_bigram_bucket: str

    def get(self, field: str) -> str:
        return getattr(self, field)


def count_bucket(count: int) -> str:
    """min(7, floor(log2(1 + count))) as a symbol; 0 stays bucket 0."""
    return str(min(7, int(math.floor(math.log2(1 + count)))))


def accent_bucket(accent: int) -> str:
    return str(accent) if accent < 10 else "10+"


def words_bucket(n: int) -> str:
    return str(n) if n < 6 else "6+"


class NgramCounts:
    """Surface unigram and adjacent-pair bigram counts."""

    def __init__(
        self,
        unigrams: Optional[Dict[str, int]] = None,
        bigrams: Optional[Dict[Tuple[str, str], int]] = None,
    ):
        self.unigrams = dict(unigrams or {})
        self.bigrams = dict(bigrams or {})

    def unigram(self, surface: str) -> int:
        return self.unigrams.get(surface, 0)

    def bigram(self, left: str, right: str) -> int:
        return self.bigrams.get((left, right), 0)

    def add_sentence(self, surfaces: Sequence[str]) -> None:
        for s in surfaces:
            self.unigrams[s] = self.unigrams.get(s, 0) + 1
        for a, b in zip(surfaces, surfaces[1:]):
            self.bigrams[(a, b)] = self.bigrams.get((a, b), 0) + 1

    def save(self, path: str | Path) -> None:
        lines = []
        for s, c in sorted(self.unigrams.items()):
            lines.append(f"{s}\t{c}")
        for (a, b), c in sorted(self.bigrams.items()):
            lines.append(f"{a}\t{b}\t{c}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NgramCounts":
        counts = cls()
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) == 2:
                counts.unigrams[cols[0]] = int(cols[1])
            elif len(cols) == 3:
                counts.bigrams[(cols[0], cols[1])] = int(cols[2])
            else:
                raise ValueError(f"{path}:{lineno}: expected 2 or 3 columns")
        return counts


def build_ngram_counts(path: str | Path, tokenizer) -> NgramCounts:
    """Count unigram/bigram surfaces over a plain-text corpus.

    `tokenizer` maps a text chunk to a Sentence; each whitespace-separated
    chunk of each line is tokenized independently.
    """
    counts = NgramCounts()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        for chunk in line.split():
            sent = tokenizer(chunk)
            counts.add_sentence([m.surface for m in sent.morphemes])
    return counts


def extract_features(
    sentence: Sentence,
    phrases: Optional[Sequence[AccentPhrase]] = None,
    ngram_model: Optional[NgramCounts] = None,
    rule_table: Optional[SandhiRuleTable] = None,
) -> List[FeatureBundle]:
    """One bundle per morpheme; deterministic and model-free."""
    n = len(sentence)
    ef5_words = [NA] * n
    ef5_pos = [NA] * n
    ef6 = [NA] * n
    if phrases is not None:
        check_partition(phrases, n)
        for ph in phrases:
            size = ph.end - ph.start
            for offset, i in enumerate(range(ph.start, ph.end)):
                ef5_words[i] = words_bucket(size)
                if size == 1:
                    ef5_pos[i] = "only"
                elif offset == 0:
                    ef5_pos[i] = "first"
                elif offset == size - 1:
                    ef5_pos[i] = "last"
                else:
                    ef5_pos[i] = "middle"
            if rule_table is not None:
                labels = rule_sandhi(ph.morphemes(sentence), rule_table)
                for offset, i in enumerate(range(ph.start, ph.end)):
                    ef6[i] = labels[offset]

    bundles: List[FeatureBundle] = []
    for i, m in enumerate(sentence.morphemes):
        morae = m.morae
        if ngram_model is None:
            uni = bi = NA
        else:
            uni = count_bucket(ngram_model.unigram(m.surface))
            if i == 0:
                bi = count_bucket(0)
            else:
                bi = count_bucket(
                    ngram_model.bigram(sentence.morphemes[i - 1].surface, m.surface)
                )
        bundles.append(
            FeatureBundle(
                ef1_pos=m.pos,
                ef2_conjugation_form=m.conjugation_form,
                ef2_conjugation_type=m.conjugation_type,
                ef2_word_type=m.word_type,
                ef3_mora_bucket=mora_bucket(len(morae)),
                ef3_first_mora=morae[0].text if len(morae) > 0 else "-",
                ef3_second_mora=morae[1].text if len(morae) > 1 else "-",
                ef4_accent_bucket=accent_bucket(m.lexical_accent),
                ef4_combination_type=m.accent_combination_type,
                ef5_words_bucket=ef5_words[i],
                ef5_position=ef5_pos[i],
                ef6_rule_label=ef6[i],
                ef7_unigram_bucket=uni,
                ef7_bigram_bucket=bi,
            )
        )
    return bundles


class FeatureVocabulary:
    """Per-field symbol-to-index maps, frozen after fitting.

    Index 0 of every field is reserved for unknown symbols, so lookup is
    total once fitted.
    """

    def __init__(self, maps: Optional[Dict[str, Dict[str, int]]] = None):
        self._maps: Optional[Dict[str, Dict[str, int]]] = maps

    @property
    def fitted(self) -> bool:
        return self._maps is not None

    def fit(self, bundle_lists: Sequence[Sequence[FeatureBundle]]) -> "FeatureVocabulary":
        maps: Dict[str, Dict[str, int]] = {f: {UNK: 0} for f in ALL_FIELDS}
        for bundles in bundle_lists:
            for b in bundles:
                for f in ALL_FIELDS:
                    table = maps[f]
                    sym = b.get(f)
                    if sym not in table:
                        table[sym] = len(table)
        self._maps = maps
        return self

    def size(self, field: str) -> int:
        if self._maps is None:
            raise LookupBeforeFit("vocabulary not fitted")
        return len(self._maps[field])

    def lookup(self, bundle: FeatureBundle, fields: Sequence[str]) -> Tuple[int, ...]:
        if self._maps is None:
            raise LookupBeforeFit("vocabulary not fitted")
        return tuple(self._maps[f].get(bundle.get(f), 0) for f in fields)

    def to_dict(self) -> Dict[str, Dict[str, int]]:
        if self._maps is None:
            raise LookupBeforeFit("vocabulary not fitted")
        return {f: dict(m) for f, m in self._maps.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Dict[str, int]]) -> "FeatureVocabulary":
        return cls({f: dict(m) for f, m in data.items()})


__all__ = [
    "FeatureBundle",
    "FeatureVocabulary",
    "NgramCounts",
    "ALL_FIELDS",
    "PD_FIELDS",
    "APBP_FIELDS",
    "ANPP_FIELDS",
    "EF7_FIELDS",
    "task_fields",
    "extract_features",
    "build_ngram_counts",
    "count_bucket",
    "accent_bucket",
    "words_bucket",
    "UNK",
    "NA",
]
