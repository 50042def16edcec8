#!/usr/bin/env python3
"""Regenerate the bundled toy data under src/jtfe/data/.

The corpus is built from templates over a closed vocabulary.  Gold
boundaries follow a POS/combination-type scheme and gold nucleus-change
labels come from the shipped sandhi table, so every label is a
deterministic function of the word features.  All invariants are validated
by round-tripping through the package loaders.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from jtfe.lexicon import (  # noqa: E402
    AnnotatedCorpus,
    AnnotatedSentence,
    ConnectionMatrix,
    Lexicon,
    LexiconEntry,
    load_corpus,
    save_corpus,
)
from jtfe.rules import SandhiRule, SandhiRuleTable, rule_sandhi  # noqa: E402
from jtfe.text import Morpheme, Sentence, phrases_from_boundaries  # noqa: E402

DATA = ROOT / "src" / "jtfe" / "data"

# surface: (pos, pronunciation, accent, comb, conj_form, conj_type, word_type, cost)
VOCAB = {
    "京都": ("noun", "キョート", 1, "*", "*", "*", "sino", 100),
    "大阪": ("noun", "オーサカ", 0, "*", "*", "*", "sino", 100),
    "山": ("noun", "ヤマ", 2, "*", "*", "*", "native", 100),
    "町": ("noun", "マチ", 2, "*", "*", "*", "native", 100),
    "公園": ("noun", "コーエン", 0, "*", "*", "*", "sino", 100),
    "駅": ("noun", "エキ", 1, "C1", "*", "*", "sino", 100),
    "寺": ("noun", "テラ", 2, "C1", "*", "*", "native", 100),
    "空": ("noun", "ソラ", 1, "*", "*", "*", "native", 100),
    "雲": ("noun", "クモ", 1, "*", "*", "*", "native", 100),
    "前": ("noun", "マエ", 1, "*", "*", "*", "native", 100),
    "料理": ("noun", "リョーリ", 1, "*", "*", "*", "sino", 100),
    "先生": ("noun", "センセー", 3, "*", "*", "*", "sino", 100),
    "人": ("noun", "ヒト", 2, "C2", "*", "*", "native", 100),
    "過去": ("noun", "カコ", 1, "*", "*", "*", "sino", 100),
    "タワー": ("noun", "タワー", 1, "C1", "*", "*", "foreign", 100),
    "上空": ("noun", "ジョークー", 0, "*", "*", "*", "sino", 100),
    "京": ("noun", "キョー", 1, "*", "*", "*", "sino", 200),
    "都": ("noun", "ミヤコ", 0, "*", "*", "*", "native", 200),
    "の": ("particle", "ノ", 0, "F1", "*", "*", "native", 50),
    "に": ("particle", "ニ", 0, "F1", "*", "*", "native", 50),
    "が": ("particle", "ガ", 0, "F1", "*", "*", "native", 50),
    "を": ("particle", "オ", 0, "F1", "*", "*", "native", 50),
    "で": ("particle", "デ", 0, "F1", "*", "*", "native", 50),
    "は": ("particle", "ワ", 0, "F1", "*", "*", "native", 50),
    "も": ("particle", "モ", 0, "F1", "*", "*", "native", 50),
    "お": ("prefix", "オ", 0, "*", "*", "*", "native", 60),
    "行く": ("verb", "イク", 0, "*", "base", "godan", "native", 100),
    "ある": ("verb", "アル", 1, "*", "base", "godan", "native", 100),
    "歩く": ("verb", "アルク", 2, "*", "base", "godan", "native", 100),
    "作る": ("verb", "ツクル", 2, "*", "base", "godan", "native", 100),
    "話す": ("verb", "ハナス", 2, "*", "base", "godan", "native", 100),
    "忘れる": ("verb", "ワスレル", 0, "*", "base", "ichidan", "native", 100),
    "見える": ("verb", "ミエル", 2, "*", "base", "ichidan", "native", 100),
    "高い": ("adjective", "タカイ", 2, "*", "base", "i-adj", "native", 100),
    "白い": ("adjective", "シロイ", 2, "*", "base", "i-adj", "native", 100),
    "ゆっくり": ("adverb", "ユックリ", 3, "*", "*", "*", "native", 100),
}

# polyphone readings: (pronunciation, accent, cost)
POLYPHONES = {
    "方": [("ホー", 0, 100), ("カタ", 2, 110)],
    "辛い": [("カライ", 2, 100), ("ツライ", 0, 110)],
}

CONTENT = {"noun", "verb", "adjective", "adverb"}
COMPOUNDING = {"C1", "C2"}

SANDHI = SandhiRuleTable(
    [
        SandhiRule("C1", "*", "2", "NUC1"),
        SandhiRule("C1", "*", "3", "NUC1"),
        SandhiRule("C2", "*", "*", "FLAT"),
    ]
)

# 方 reading per sentence group; "@" marks the polyphone slot
HO_O = [  # direction reading: <noun> の 方 に <verb...>
    "京都 の @方=ホー に 行く",
    "大阪 の @方=ホー に 行く",
    "山 の @方=ホー に 行く",
    "町 の @方=ホー に 行く",
    "公園 の @方=ホー に 行く",
    "駅 の @方=ホー に 行く",
    "寺 の @方=ホー に 行く",
    "空 の @方=ホー に 雲 が ある",
    "京都 の @方=ホー に 雲 が ある",
    "公園 の @方=ホー に 歩く",
    "駅 の @方=ホー に 歩く",
    "寺 の @方=ホー に 歩く",
]
KATA = [  # person/way reading: <verb> 方 が <adjective>
    "作る @方=カタ が 高い",
    "話す @方=カタ が 高い",
    "忘れる @方=カタ が 高い",
    "行く @方=カタ が 高い",
    "作る @方=カタ が 白い",
    "話す @方=カタ が 白い",
    "歩く @方=カタ が 白い",
    "見える @方=カタ が 白い",
]
OTHERS = [
    "京都 タワー が 見える",
    "京都 タワー に 行く",
    "京都 駅 に 行く",
    "大阪 駅 に 行く",
    "大阪 タワー が 見える",
    "京都 タワー 上空 の @方=ホー に 雲 が ある",
    "お 寺 に 行く",
    "お 寺 の 前 に 雲 が ある",
    "京都 駅 の @方=ホー に 行く",
    "大阪 駅 の @方=ホー に 行く",
    "雲 が 上空 に ある",
    "雲 が 空 に ある",
    "白い 雲 が 見える",
    "高い タワー が 見える",
    "白い タワー が 見える",
    "ゆっくり 歩く",
    "ゆっくり 話す",
    "町 で 料理 を 作る",
    "京都 で 料理 を 作る",
    "先生 が 話す",
    "先生 が 歩く",
    "人 が 歩く",
    "人 が 町 を 歩く",
    "過去 を 忘れる",
    "山 が 見える",
    "雲 が 山 に ある",
    "公園 駅 に 行く",
    "町 駅 に 行く",
    "公園 駅 の @方=ホー に 歩く",
    "山 駅 が 見える",
]

SENTENCES = HO_O + KATA + OTHERS


def make_morpheme(token: str) -> Morpheme:
    if token.startswith("@"):
        surface, pron = token[1:].split("=")
        candidates = dict((p, (a, c)) for p, a, c in POLYPHONES[surface])
        accent, _ = candidates[pron]
        return Morpheme(
            surface=surface,
            pos="noun",
            pronunciation=pron,
            lexical_accent=accent,
            accent_combination_type="*",
            word_type="sino",
            is_polyphone_target=True,
            polyphone_lemma=surface,
        )
    spec = VOCAB[token]
    return Morpheme(
        surface=token,
        pos=spec[0],
        pronunciation=spec[1],
        lexical_accent=spec[2],
        accent_combination_type=spec[3],
        conjugation_form=spec[4],
        conjugation_type=spec[5],
        word_type=spec[6],
    )


def gold_boundaries(morphemes) -> list[bool]:
    flags = []
    for i, m in enumerate(morphemes):
        if i == 0:
            flags.append(True)
            continue
        prev = morphemes[i - 1]
        if m.pos in ("particle", "auxiliary"):
            flags.append(False)
        elif prev.pos == "prefix":
            flags.append(False)
        elif m.pos in CONTENT:
            compound = (
                prev.pos == "noun"
                and m.pos == "noun"
                and m.accent_combination_type in COMPOUNDING
            )
            flags.append(not compound)
        else:
            flags.append(False)
    return flags


def gold_labels(sentence: Sentence, boundaries) -> list[str]:
    labels = []
    for ph in phrases_from_boundaries(tuple(boundaries)):
        phrase = ph.morphemes(sentence)
        labels.extend(rule_sandhi(phrase, SANDHI))
    return labels


def build_corpus() -> AnnotatedCorpus:
    annotated = []
    for i, template in enumerate(SENTENCES, start=1):
        morphemes = tuple(make_morpheme(tok) for tok in template.split())
        raw = "".join(m.surface for m in morphemes)
        sentence = Sentence(raw=raw, morphemes=morphemes, id=f"toy{i:03d}")
        boundaries = gold_boundaries(morphemes)
        labels = gold_labels(sentence, boundaries)
        annotated.append(
            AnnotatedSentence(sentence, tuple(boundaries), tuple(labels))
        )
    return AnnotatedCorpus(tuple(annotated))


def build_lexicon() -> Lexicon:
    entries = []
    for surface, spec in VOCAB.items():
        entries.append(
            LexiconEntry(
                surface=surface,
                left_id=0,
                right_id=0,
                cost=spec[7],
                pos=spec[0],
                pronunciation=spec[1],
                lexical_accent=spec[2],
                accent_combination_type=spec[3],
                conjugation_form=spec[4],
                conjugation_type=spec[5],
                word_type=spec[6],
            )
        )
    for surface, readings in POLYPHONES.items():
        for pron, accent, cost in readings:
            entries.append(
                LexiconEntry(
                    surface=surface,
                    left_id=0,
                    right_id=0,
                    cost=cost,
                    pos="noun" if surface == "方" else "adjective",
                    pronunciation=pron,
                    lexical_accent=accent,
                    accent_combination_type="*",
                    conjugation_form="*",
                    conjugation_type="*",
                    word_type="sino" if surface == "方" else "native",
                )
            )
    return Lexicon(entries)


def main() -> None:
    corpus = build_corpus()
    assert len(corpus) == 50, len(corpus)
    save_corpus(corpus, DATA / "toy_corpus.txt")
    build_lexicon().save(DATA / "toy_lexicon.tsv")
    ConnectionMatrix.zeros(1, 1).save(DATA / "toy_conn.txt")
    SANDHI.save(DATA / "sandhi_rules.tsv")
    (DATA / "apbp_exceptions.tsv").write_text(
        "#prev_pos\tpos\n", encoding="utf-8"
    )

    # validate by round-tripping through the loaders
    reloaded = load_corpus(DATA / "toy_corpus.txt")
    assert len(reloaded) == 50
    targets = sum(
        m.is_polyphone_target
        for ann in reloaded
        for m in ann.sentence.morphemes
    )
    print(f"wrote 50 sentences, {targets} polyphone targets")


if __name__ == "__main__":
    main()
