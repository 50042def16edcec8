"""Synthetic polyphone corpora where the correct reading depends only on a
context word that part-of-speech features cannot see.

Every sentence shares one POS template, so a model over explicit features
alone is blind to the class; a per-sentence embedding file carries the
context word's class in a couple of dimensions, the way a contextual
encoder would."""

import numpy as np

from jtfe.embeddings import write_embedding_file
from jtfe.lexicon import AnnotatedCorpus, AnnotatedSentence
from jtfe.text import Morpheme, Sentence

TARGET_LEMMA = "辛"
READING_A = "カラ"  # class A contexts
READING_B = "ツラ"  # class B contexts

CTX_A = ["料理", "食堂", "香辛", "鍋物", "食卓", "厨房", "台所", "調味", "食事", "昼食"]
CTX_B = ["試練", "苦労", "悩み", "試験", "現実", "日々", "過去", "記憶", "別離", "孤独"]


def _word(surface, pos, pron, lemma=None):
    return Morpheme(
        surface=surface,
        pos=pos,
        pronunciation=pron,
        is_polyphone_target=lemma is not None,
        polyphone_lemma=lemma,
    )


def _sentence(ctx: str, reading: str, sent_id: str) -> AnnotatedSentence:
    # fixed POS template: noun particle noun particle TARGET particle verb
    morphemes = (
        _word(ctx, "noun", "アア"),
        _word("の", "particle", "ノ"),
        _word("話", "noun", "ハナシ"),
        _word("が", "particle", "ガ"),
        _word(TARGET_LEMMA, "noun", reading, lemma=TARGET_LEMMA),
        _word("に", "particle", "ニ"),
        _word("なる", "verb", "ナル"),
    )
    raw = "".join(m.surface for m in morphemes)
    sentence = Sentence(raw, morphemes, id=sent_id)
    boundaries = (True, False, True, False, True, False, True)
    labels = ("KEEP",) * 7
    return AnnotatedSentence(sentence, boundaries, labels)


def build_context_corpora() -> tuple[AnnotatedCorpus, AnnotatedCorpus]:
    """(train, held-out) corpora; held-out context words are unseen."""
    train, held = [], []
    for k, (ctx_a, ctx_b) in enumerate(zip(CTX_A, CTX_B)):
        sa = _sentence(ctx_a, READING_A, f"a{k:02d}")
        sb = _sentence(ctx_b, READING_B, f"b{k:02d}")
        if k < 7:
            train += [sa, sb]
        else:
            held += [sa, sb]
    return AnnotatedCorpus(tuple(train)), AnnotatedCorpus(tuple(held))


def write_context_embeddings(path, corpora, dim: int = 8, seed: int = 0) -> None:
    """Per-token vectors: deterministic noise everywhere, plus a class
    signal on the context word's row (dim 0 = +1 for class A, -1 for B)."""
    rng = np.random.default_rng(seed)
    records = []
    for corpus in corpora:
        for ann in corpus:
            sent = ann.sentence
            matrix = rng.normal(scale=0.1, size=(len(sent), dim)).astype(np.float32)
            sign = 1.0 if sent.id.startswith("a") else -1.0
            matrix[0, 0] += sign  # the context word sits at position 0
            records.append((sent.id, matrix))
    write_embedding_file(path, dim, records)
