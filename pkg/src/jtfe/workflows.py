"""Glue between corpora, task models, the trainer and the metrics: build
feature vocabularies, encode corpora, train a head with the halving
schedule, and score predictions against gold annotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import evaluation
from .embeddings import CharLM, EmbeddingFile, charlm_embed
from .features import FeatureVocabulary, NgramCounts, extract_features
from .lexicon import AnnotatedCorpus
from .nn.train import TrainHistory, TrainSchedule, train
from .predictors import (
    TaskConfig,
    TaskModel,
    anpp_predict,
    apbp_predict,
    build_inventory,
    build_task_model,
    encode_corpus,
    gold_phrases,
    pd_predict,
)
from .rules import SandhiRuleTable
from .text import Sentence, phrases_from_boundaries


def make_provider(
    kind: str,
    embedding_file: Optional[EmbeddingFile] = None,
    charlm: Optional[CharLM] = None,
):
    """Provider closure mapping a Sentence to its implicit matrix."""
    if kind == "none":
        return None, 0
    if kind == "file":
        if embedding_file is None:
            raise ValueError("file provider needs an embedding file")

        def fetch(sentence: Sentence) -> np.ndarray:
            return embedding_file.fetch(sentence.id).vectors

        return fetch, embedding_file.dim
    if kind == "charlm":
        if charlm is None:
            raise ValueError("charlm provider needs a trained model")

        def embed(sentence: Sentence) -> np.ndarray:
            return charlm_embed(charlm, sentence).vectors

        return embed, charlm.dim
    raise ValueError(f"unknown provider kind {kind!r}")


def filter_to_embeddings(
    corpus: AnnotatedCorpus, embedding_file: EmbeddingFile
) -> Tuple[AnnotatedCorpus, List[str]]:
    """Drop sentences the embedding file does not cover (e.g. skipped by
    the exporter as unalignable); returns the kept corpus and dropped ids."""
    kept, dropped = [], []
    for ann in corpus:
        if ann.sentence.id in embedding_file:
            kept.append(ann)
        else:
            dropped.append(ann.sentence.id)
    return AnnotatedCorpus(tuple(kept)), dropped


def fit_vocabulary(
    corpus: AnnotatedCorpus,
    ngram: Optional[NgramCounts] = None,
    rule_table: Optional[SandhiRuleTable] = None,
) -> FeatureVocabulary:
    """Fit the per-field symbol maps on gold phrases of a training corpus."""
    bundle_lists = []
    for ann in corpus:
        phrases = phrases_from_boundaries(ann.boundaries)
        bundle_lists.append(
            extract_features(ann.sentence, phrases, ngram, rule_table)
        )
    return FeatureVocabulary().fit(bundle_lists)


@dataclass
class TaskAssets:
    """Everything a head needs besides its parameters."""

    ngram: Optional[NgramCounts] = None
    rule_table: Optional[SandhiRuleTable] = None
    provider: Optional[Callable[[Sentence], np.ndarray]] = None


def predict_corpus(tm: TaskModel, corpus: AnnotatedCorpus, assets: TaskAssets):
    """Task predictions over gold tokenizations, one entry per sentence."""
    task = tm.config.task
    out = []
    for ann in corpus:
        if task == "pd":
            out.append(pd_predict(tm, ann.sentence, assets.provider))
        elif task == "apbp":
            out.append(
                apbp_predict(tm, ann.sentence, assets.ngram, assets.provider)
            )
        else:
            spans = phrases_from_boundaries(ann.boundaries)
            _, resolved = anpp_predict(
                tm, ann.sentence, spans, assets.rule_table, assets.provider
            )
            out.append(resolved)
    return out


def gold_targets_corpus(corpus: AnnotatedCorpus):
    gold = []
    for ann in corpus:
        gold.append(
            [
                (i, m.pronunciation)
                for i, m in enumerate(ann.sentence.morphemes)
                if m.is_polyphone_target
            ]
        )
    return gold


def score_task(
    tm: TaskModel, corpus: AnnotatedCorpus, assets: TaskAssets
) -> Dict[Tuple[str, str], Optional[float]]:
    """All metrics of one head on one corpus, keyed by (name, subset)."""
    task = tm.config.task
    predictions = predict_corpus(tm, corpus, assets)
    if task == "pd":
        return {
            ("pd_accuracy", "all"): evaluation.pd_accuracy(
                predictions, gold_targets_corpus(corpus)
            )
        }
    if task == "apbp":
        gold = [list(ann.boundaries) for ann in corpus]
        sentences = [ann.sentence for ann in corpus]
        return {
            ("apbp_f1", "all"): evaluation.apbp_f1(predictions, gold),
            ("apbp_f1", "adjacent_nouns"): evaluation.apbp_f1(
                predictions, gold, sentences, subset="adjacent_nouns"
            ),
        }
    gold = [gold_phrases(ann) for ann in corpus]
    return {
        ("anpp_accuracy", "all"): evaluation.anpp_accuracy(predictions, gold),
        ("anpp_accuracy", "long_phrases"): evaluation.anpp_accuracy(
            predictions, gold, subset="long_phrases"
        ),
    }


def error_listing(
    tm: TaskModel, corpus: AnnotatedCorpus, assets: TaskAssets
) -> List[str]:
    """Human-readable mismatches, one line per wrong sentence."""
    predictions = predict_corpus(tm, corpus, assets)
    lines: List[str] = []
    for ann, pred in zip(corpus, predictions):
        sid = ann.sentence.id
        if tm.config.task == "pd":
            gold = [
                (i, m.pronunciation)
                for i, m in enumerate(ann.sentence.morphemes)
                if m.is_polyphone_target
            ]
            if pred != gold:
                lines.append(f"{sid}: predicted {pred}, gold {gold}")
        elif tm.config.task == "apbp":
            if list(pred) != list(ann.boundaries):
                got = "".join("1" if b else "0" for b in pred)
                want = "".join("1" if b else "0" for b in ann.boundaries)
                lines.append(f"{sid}: predicted {got}, gold {want}")
        else:
            gold = gold_phrases(ann)
            if list(pred) != gold:
                got = " ".join(f"{p.start}:{p.end}:{p.nucleus}" for p in pred)
                want = " ".join(f"{p.start}:{p.end}:{p.nucleus}" for p in gold)
                lines.append(f"{sid}: predicted {got}, gold {want}")
    return lines


def primary_metric(tm: TaskModel, corpus: AnnotatedCorpus, assets: TaskAssets) -> float:
    """The single validation number the schedule watches: accuracy for pd
    and anpp, boundary F1 for apbp."""
    scores = score_task(tm, corpus, assets)
    key = {
        "pd": ("pd_accuracy", "all"),
        "apbp": ("apbp_f1", "all"),
        "anpp": ("anpp_accuracy", "all"),
    }[tm.config.task]
    value = scores[key]
    return -1.0 if value is None else float(value)


def train_task(
    config: TaskConfig,
    train_corpus: AnnotatedCorpus,
    val_corpus: AnnotatedCorpus,
    schedule: TrainSchedule,
    assets: Optional[TaskAssets] = None,
    vocab: Optional[FeatureVocabulary] = None,
) -> Tuple[TaskModel, TrainHistory]:
    """Fit vocabulary (unless given), build the head, and train it with the
    halving schedule, validating with the task metric."""
    assets = assets or TaskAssets()
    if vocab is None:
        vocab = fit_vocabulary(train_corpus, assets.ngram, assets.rule_table)
    inventory = build_inventory(train_corpus) if config.task == "pd" else {}
    tm = build_task_model(config, vocab, inventory)
    train_data = encode_corpus(
        tm, train_corpus, assets.ngram, assets.rule_table, assets.provider
    )
    val_data = encode_corpus(
        tm, val_corpus, assets.ngram, assets.rule_table, assets.provider
    )

    def metric_fn(_model, _data) -> float:
        return primary_metric(tm, val_corpus, assets)

    history = train(tm.model, train_data, val_data, schedule, metric_fn)
    return tm, history
