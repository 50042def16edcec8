"""Task heads and the end-to-end pipeline.

Three predictors share one encoder architecture:

  pd    polyphone disambiguation - masked candidate classification at
        flagged positions, features ef1 (plus optional implicit vectors)
  apbp  accent phrase boundary prediction - CRF over {no-boundary,
        boundary}, features ef1-4 (optional ef7), first position forced to
        a boundary
  anpp  accent nucleus position prediction - CRF over the nucleus-change
        label set, features ef1-6, evaluated per phrase after resolution

At inference ANPP consumes APBP output, recomputing the phrase-dependent
features from predicted phrases; every stage can be bypassed with gold
inputs for ablation.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import SpanMismatch, UnknownLemma
from .features import (
    FeatureVocabulary,
    NgramCounts,
    extract_features,
    task_fields,
)
from .lexicon import AnnotatedCorpus, AnnotatedSentence, ConnectionMatrix, Lexicon, tokenize
from .nn.io import load_model_file, save_model_file
from .nn.model import CrfTagger, EncodedSentence, PdClassifier
from .rules import KEEP, NUCLEUS_LABELS, SandhiRuleTable, rule_apbp, rule_sandhi
from .text import (
    AccentPhrase,
    Morpheme,
    PitchSequence,
    Sentence,
    phrases_from_boundaries,
    render_pitch,
)

log = logging.getLogger(__name__)

BOUNDARY_LABELS = ("no_boundary", "boundary")
LABEL_TO_ID = {lab: i for i, lab in enumerate(NUCLEUS_LABELS)}

Provider = Optional[Callable[[Sentence], np.ndarray]]


@dataclass(frozen=True)
class PdInstance:
    """One polyphone decision: a flagged morpheme with its candidate set."""

    sentence: Sentence
    target: int
    candidates: Tuple[str, ...]
    gold: Optional[str] = None

    def __post_init__(self):
        if not self.sentence.morphemes[self.target].is_polyphone_target:
            raise ValueError(f"morpheme {self.target} is not a polyphone target")
        if len(self.candidates) < 2:
            raise ValueError("a polyphone needs at least two candidates")
        if self.gold is not None and self.gold not in self.candidates:
            raise ValueError(f"gold {self.gold!r} not among candidates")


def build_inventory(corpus: AnnotatedCorpus) -> Dict[str, List[str]]:
    """Candidate pronunciations per polyphone lemma, from gold annotations.

    Every flagged lemma must show at least two distinct pronunciations."""
    seen: Dict[str, set] = {}
    for ann in corpus:
        for m in ann.sentence.morphemes:
            if m.is_polyphone_target:
                seen.setdefault(m.polyphone_lemma or m.surface, set()).add(
                    m.pronunciation
                )
    inventory = {}
    for lemma, prons in sorted(seen.items()):
        if len(prons) < 2:
            raise ValueError(
                f"polyphone lemma {lemma!r} has a single candidate {prons!r}"
            )
        inventory[lemma] = sorted(prons)
    return inventory


@dataclass
class TaskConfig:
    task: str  # pd | apbp | anpp
    use_ef7: bool = False
    embed_dim: int = 8
    hidden: int = 32
    implicit: str = "none"  # none | file | charlm
    implicit_dim: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.task not in ("pd", "apbp", "anpp"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.implicit not in ("none", "file", "charlm"):
            raise ValueError(f"unknown implicit provider {self.implicit!r}")
        if self.implicit != "none" and self.implicit_dim <= 0:
            raise ValueError("implicit provider configured without a dimension")

    @property
    def fields(self) -> Tuple[str, ...]:
        return task_fields(self.task, self.use_ef7)


@dataclass
class TaskModel:
    """A trained head plus everything needed to featurize its inputs."""

    config: TaskConfig
    vocab: FeatureVocabulary
    model: Union[CrfTagger, PdClassifier]
    inventory: Dict[str, List[str]] = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        meta = {
            "config": {
                "task": self.config.task,
                "use_ef7": self.config.use_ef7,
                "embed_dim": self.config.embed_dim,
                "hidden": self.config.hidden,
                "implicit": self.config.implicit,
                "implicit_dim": self.config.implicit_dim,
                "seed": self.config.seed,
            },
            "vocab": self.vocab.to_dict(),
            "inventory": self.inventory,
        }
        save_model_file(path, self.config.task, meta, self.model.params())

    @classmethod
    def load(cls, path: str | Path) -> "TaskModel":
        task, meta, params = load_model_file(path)
        config = TaskConfig(**meta["config"])
        if config.task != task:
            raise ValueError(f"{path}: task tag {task!r} != config {config.task!r}")
        vocab = FeatureVocabulary.from_dict(meta["vocab"])
        tm = build_task_model(config, vocab, meta.get("inventory", {}))
        snap = tm.model.params()
        for name in snap:
            snap[name][...] = params[name]
        return tm


def build_task_model(
    config: TaskConfig,
    vocab: FeatureVocabulary,
    inventory: Optional[Dict[str, List[str]]] = None,
) -> TaskModel:
    sizes = [vocab.size(f) for f in config.fields]
    if config.task == "pd":
        model: Union[CrfTagger, PdClassifier] = PdClassifier(
            sizes,
            inventory or {},
            embed_dim=config.embed_dim,
            implicit_dim=config.implicit_dim,
            hidden=config.hidden,
            seed=config.seed,
        )
    else:
        n_labels = 2 if config.task == "apbp" else len(NUCLEUS_LABELS)
        model = CrfTagger(
            sizes,
            n_labels,
            embed_dim=config.embed_dim,
            implicit_dim=config.implicit_dim,
            hidden=config.hidden,
            seed=config.seed,
        )
    return TaskModel(config, vocab, model, inventory or {})


# ---------------------------------------------------------------------------
# Feature encoding
# ---------------------------------------------------------------------------


def encode_sentence(
    tm: TaskModel,
    sentence: Sentence,
    phrases: Optional[Sequence[AccentPhrase]] = None,
    ngram: Optional[NgramCounts] = None,
    rule_table: Optional[SandhiRuleTable] = None,
    provider: Provider = None,
    gold_labels: Optional[np.ndarray] = None,
    gold_targets: Optional[List[Tuple[int, str, int]]] = None,
) -> EncodedSentence:
    bundles = extract_features(sentence, phrases, ngram, rule_table)
    fields = tm.config.fields
    idx = np.array(
        [tm.vocab.lookup(b, fields) for b in bundles], dtype=np.int32
    ).reshape(len(bundles), len(fields))
    implicit = None
    if tm.config.implicit != "none":
        if provider is None:
            raise ValueError(
                f"model expects implicit provider {tm.config.implicit!r}"
            )
        implicit = np.asarray(provider(sentence), dtype=np.float32)
        if implicit.shape != (len(sentence), tm.config.implicit_dim):
            raise ValueError(
                f"provider returned {implicit.shape}, expected "
                f"({len(sentence)}, {tm.config.implicit_dim})"
            )
    return EncodedSentence(
        sent_id=sentence.id,
        feat_idx=idx,
        implicit=implicit,
        labels=gold_labels,
        targets=gold_targets or [],
    )


def _pd_targets(
    sentence: Sentence, model: PdClassifier, with_gold: bool
) -> List[Tuple[int, str, int]]:
    targets = []
    for i, m in enumerate(sentence.morphemes):
        if not m.is_polyphone_target:
            continue
        lemma = m.polyphone_lemma or m.surface
        if lemma not in model.lemma_slots:
            raise UnknownLemma(lemma)
        gold = model.candidate_id(m.pronunciation) if with_gold else 0
        targets.append((i, lemma, gold))
    return targets


def encode_corpus(
    tm: TaskModel,
    corpus: AnnotatedCorpus,
    ngram: Optional[NgramCounts] = None,
    rule_table: Optional[SandhiRuleTable] = None,
    provider: Provider = None,
) -> List[EncodedSentence]:
    """Training views: gold labels and, for ANPP features, gold phrases."""
    out = []
    for ann in corpus:
        sent = ann.sentence
        if tm.config.task == "pd":
            ex = encode_sentence(
                tm,
                sent,
                provider=provider,
                gold_targets=_pd_targets(sent, tm.model, with_gold=True),
            )
        elif tm.config.task == "apbp":
            labels = np.array([int(b) for b in ann.boundaries], dtype=np.int64)
            ex = encode_sentence(
                tm, sent, ngram=ngram, provider=provider, gold_labels=labels
            )
        else:
            phrases = phrases_from_boundaries(ann.boundaries)
            labels = np.array(
                [LABEL_TO_ID[lab] for lab in ann.nucleus_labels], dtype=np.int64
            )
            ex = encode_sentence(
                tm,
                sent,
                phrases=phrases,
                rule_table=rule_table,
                provider=provider,
                gold_labels=labels,
            )
        out.append(ex)
    return out


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def pd_predict(
    tm: TaskModel, sentence: Sentence, provider: Provider = None
) -> List[Tuple[int, str]]:
    """(position, pronunciation) per polyphone target; empty when the
    sentence has none."""
    assert isinstance(tm.model, PdClassifier)
    if len(sentence) == 0:
        return []
    targets = _pd_targets(sentence, tm.model, with_gold=False)
    if not targets:
        return []
    ex = encode_sentence(tm, sentence, provider=provider, gold_targets=targets)
    return tm.model.predict(ex)


def apbp_predict(
    tm: TaskModel,
    sentence: Sentence,
    ngram: Optional[NgramCounts] = None,
    provider: Provider = None,
) -> List[bool]:
    """Boundary-before-word flags; position 0 is always a boundary."""
    assert isinstance(tm.model, CrfTagger)
    if len(sentence) == 0:
        return []
    ex = encode_sentence(tm, sentence, ngram=ngram, provider=provider)
    path = tm.model.predict(ex)
    flags = [bool(v) for v in path]
    flags[0] = True
    return flags


def resolve_nucleus(
    morphemes: Sequence[Morpheme], labels: Sequence[str]
) -> int:
    """Phrase nucleus from per-word nucleus-change labels.

    Scanning left to right, the first word contributing a nucleus fixes it:
    KEEP with a non-flat lexical accent places it at the word's mora offset
    plus the accent; NUC(k) places it at offset plus k.  No contributor
    means a flat phrase (0).  Out-of-range results clamp to the phrase mora
    count with a warning.
    """
    if len(morphemes) != len(labels):
        raise SpanMismatch(
            f"{len(labels)} labels for {len(morphemes)} morphemes"
        )
    total = sum(m.mora_count for m in morphemes)
    offset = 0
    for m, lab in zip(morphemes, labels):
        nucleus = None
        if lab == KEEP and m.lexical_accent > 0:
            nucleus = offset + m.lexical_accent
        elif lab.startswith("NUC"):
            nucleus = offset + int(lab[3:])
        if nucleus is not None:
            if nucleus > total:
                warnings.warn(
                    f"nucleus {nucleus} clamped to phrase mora count {total}",
                    stacklevel=2,
                )
                nucleus = total
            return nucleus
        offset += m.mora_count
    return 0


def anpp_predict(
    tm: TaskModel,
    sentence: Sentence,
    phrases: Sequence[AccentPhrase],
    rule_table: Optional[SandhiRuleTable] = None,
    provider: Provider = None,
) -> Tuple[List[str], List[AccentPhrase]]:
    """Per-word nucleus-change labels plus phrases with resolved nuclei."""
    assert isinstance(tm.model, CrfTagger)
    if len(sentence) == 0:
        return [], []
    ex = encode_sentence(
        tm, sentence, phrases=phrases, rule_table=rule_table, provider=provider
    )
    path = tm.model.predict(ex)
    labels = [NUCLEUS_LABELS[int(v)] for v in path]
    resolved = _resolve_phrases(sentence, phrases, labels)
    return labels, resolved


def _resolve_phrases(
    sentence: Sentence,
    phrases: Sequence[AccentPhrase],
    labels: Sequence[str],
) -> List[AccentPhrase]:
    if len(labels) != len(sentence):
        raise SpanMismatch(f"{len(labels)} labels for {len(sentence)} morphemes")
    out = []
    for ph in phrases:
        nucleus = resolve_nucleus(
            ph.morphemes(sentence), labels[ph.start : ph.end]
        )
        out.append(AccentPhrase(ph.start, ph.end, nucleus))
    return out


def rule_anpp(
    sentence: Sentence,
    phrases: Sequence[AccentPhrase],
    table: SandhiRuleTable,
) -> Tuple[List[str], List[AccentPhrase]]:
    """Rule-based nucleus labels and resolution (the AP0 baseline)."""
    labels: List[str] = []
    for ph in phrases:
        labels.extend(rule_sandhi(ph.morphemes(sentence), table))
    return labels, _resolve_phrases(sentence, phrases, labels)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    sentence: Sentence
    pronunciations: List[str]
    boundaries: List[bool]
    phrases: List[AccentPhrase]
    nucleus_labels: List[str]
    pitch: PitchSequence


@dataclass
class Pipeline:
    """normalize -> tokenize -> PD -> APBP -> ANPP -> pitch rendering.

    Any stage can be swapped for gold inputs; rule-based baselines replace
    the neural heads when their models are absent.
    """

    lexicon: Lexicon
    conn: Optional[ConnectionMatrix] = None
    pd: Optional[TaskModel] = None
    apbp: Optional[TaskModel] = None
    anpp: Optional[TaskModel] = None
    rule_table: Optional[SandhiRuleTable] = None
    ngram: Optional[NgramCounts] = None
    pd_provider: Provider = None
    apbp_provider: Provider = None
    anpp_provider: Provider = None
    compound_exceptions: frozenset = frozenset()

    def mark_polyphones(self, sentence: Sentence) -> Sentence:
        """Flag tokens whose surface is a known polyphone lemma."""
        if self.pd is None or not self.pd.inventory:
            return sentence
        morphemes = []
        for m in sentence.morphemes:
            if m.surface in self.pd.inventory and not m.is_polyphone_target:
                m = replace(m, is_polyphone_target=True, polyphone_lemma=m.surface)
            morphemes.append(m)
        return Sentence(sentence.raw, tuple(morphemes), sentence.id)

    def run(
        self,
        text: str,
        sentence: Optional[Sentence] = None,
        gold_pronunciations: Optional[Sequence[str]] = None,
        gold_boundaries: Optional[Sequence[bool]] = None,
        gold_nucleus_labels: Optional[Sequence[str]] = None,
        sent_id: str = "",
    ) -> PipelineResult:
        if sentence is None:
            sentence = tokenize(text, self.lexicon, self.conn, sent_id=sent_id)
        sentence = self.mark_polyphones(sentence)

        # polyphone disambiguation rewrites target pronunciations
        if gold_pronunciations is not None:
            if len(gold_pronunciations) != len(sentence):
                raise SpanMismatch("gold pronunciations do not match tokens")
            morphemes = tuple(
                m if m.pronunciation == p else m.with_pronunciation(p)
                for m, p in zip(sentence.morphemes, gold_pronunciations)
            )
            sentence = Sentence(sentence.raw, morphemes, sentence.id)
        elif self.pd is not None and len(sentence):
            choices = pd_predict(self.pd, sentence, self.pd_provider)
            if choices:
                morphemes = list(sentence.morphemes)
                for pos, pron in choices:
                    morphemes[pos] = morphemes[pos].with_pronunciation(pron)
                sentence = Sentence(sentence.raw, tuple(morphemes), sentence.id)

        # accent phrase boundaries
        if gold_boundaries is not None:
            boundaries = list(gold_boundaries)
        elif self.apbp is not None:
            boundaries = apbp_predict(
                self.apbp, sentence, self.ngram, self.apbp_provider
            )
        else:
            boundaries = rule_apbp(sentence.morphemes, self.compound_exceptions)
        phrases = list(phrases_from_boundaries(boundaries))

        # nucleus labels and resolution
        if gold_nucleus_labels is not None:
            labels = list(gold_nucleus_labels)
            resolved = _resolve_phrases(sentence, phrases, labels)
        elif self.anpp is not None and len(sentence):
            labels, resolved = anpp_predict(
                self.anpp, sentence, phrases, self.rule_table, self.anpp_provider
            )
        elif len(sentence):
            table = self.rule_table or SandhiRuleTable([])
            labels, resolved = rule_anpp(sentence, phrases, table)
        else:
            labels, resolved = [], []

        pitch = render_pitch(resolved, sentence)
        return PipelineResult(
            sentence=sentence,
            pronunciations=[m.pronunciation for m in sentence.morphemes],
            boundaries=boundaries,
            phrases=resolved,
            nucleus_labels=labels,
            pitch=pitch,
        )


def gold_phrases(ann: AnnotatedSentence) -> List[AccentPhrase]:
    """Gold phrase spans with gold-resolved nuclei."""
    spans = phrases_from_boundaries(ann.boundaries)
    return _resolve_phrases(ann.sentence, spans, list(ann.nucleus_labels))


def gold_pitch(ann: AnnotatedSentence) -> PitchSequence:
    return render_pitch(gold_phrases(ann), ann.sentence)
