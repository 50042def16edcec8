import random

import pytest

from jtfe.errors import DanglingBoundary, LabelOutOfRange, MissingField
from jtfe.lexicon import (
    AnnotatedCorpus,
    AnnotatedSentence,
    ConnectionMatrix,
    Lexicon,
    LexiconEntry,
    build_lattice,
    load_corpus,
    nbest,
    path_cost,
    save_corpus,
    tokenize,
)
from jtfe.text import Morpheme, Sentence


def entry(surface, cost, pron=None, left=0, right=0, pos="noun"):
    return LexiconEntry(
        surface=surface,
        left_id=left,
        right_id=right,
        cost=cost,
        pos=pos,
        pronunciation=pron if pron is not None else "ア" * len(surface),
    )


def enumerate_paths(text, lexicon, conn, unknown_cost=10000):
    """Oracle: depth-first enumeration of every complete lattice path with
    its cost and tie-break key."""
    nodes = build_lattice(text, lexicon, unknown_cost)
    by_start = {}
    for node in nodes:
        by_start.setdefault(node.start, []).append(node)

    results = []

    def walk(pos, acc):
        if pos == len(text):
            key = (
                path_cost(acc, conn),
                len(acc),
                tuple(n.entry.surface for n in acc),
            )
            results.append((key, tuple(acc)))
            return
        for node in by_start.get(pos, ()):
            walk(node.end, acc + [node])

    walk(0, [])
    return sorted(results, key=lambda kv: kv[0])


TOY = Lexicon(
    [
        entry("京都", 100, "キョート"),
        entry("京", 80, "キョー"),
        entry("都", 80, "ト"),
        entry("タワー", 100, "タワー"),
        entry("タ", 90, "タ"),
        entry("ワー", 90, "ワー"),
    ]
)


class TestTokenize:
    def test_empty_text(self):
        sent = tokenize("", TOY)
        assert len(sent) == 0

    def test_min_cost_path_vs_oracle(self):
        conn = ConnectionMatrix.zeros()
        sent = tokenize("京都タワー", TOY, conn)
        oracle = enumerate_paths("京都タワー", TOY, conn)
        assert [m.surface for m in sent.morphemes] == list(oracle[0][0][2])
        assert [m.surface for m in sent.morphemes] == ["京都", "タワー"]

    def test_unknown_characters_become_single_tokens(self):
        sent = tokenize("京都X", TOY)
        assert [m.surface for m in sent.morphemes] == ["京都", "X"]
        assert sent.morphemes[-1].pos == "unknown"

    def test_hiragana_unknown_gets_katakana_pronunciation(self):
        sent = tokenize("あ", TOY)
        assert sent.morphemes[0].pronunciation == "ア"

    def test_connection_costs_choose_the_path(self):
        lex = Lexicon(
            [
                entry("ab", 10, "ア", left=1, right=1),
                entry("a", 1, "ア", left=2, right=2),
                entry("b", 1, "ア", left=3, right=3),
            ]
        )
        # make a->b transition expensive so the compound wins
        costs = [[0, 0, 0, 0] for _ in range(4)]
        costs[2][3] = 100
        conn = ConnectionMatrix(costs)
        sent = tokenize("ab", lex, conn)
        assert [m.surface for m in sent.morphemes] == ["ab"]

    def test_tie_break_prefers_fewer_morphemes(self):
        lex = Lexicon([entry("ab", 20, "ア"), entry("a", 10, "ア"), entry("b", 10, "ア")])
        sent = tokenize("ab", lex)
        assert [m.surface for m in sent.morphemes] == ["ab"]

    def test_surface_concatenation_invariant(self):
        for text in ("京都タワー", "京タ都", "", "Xら京"):
            sent = tokenize(text, TOY)
            assert "".join(m.surface for m in sent.morphemes) == text


class TestNbest:
    def test_first_equals_tokenize(self):
        conn = ConnectionMatrix.zeros()
        assert [m.surface for m in nbest("京都タワー", TOY, conn, 3)[0].morphemes] == [
            m.surface for m in tokenize("京都タワー", TOY, conn).morphemes
        ]

    def test_matches_oracle_order(self):
        conn = ConnectionMatrix.zeros()
        results = nbest("京都タワー", TOY, conn, 3)
        oracle = enumerate_paths("京都タワー", TOY, conn)
        assert len(results) == 3
        for sent, (key, _) in zip(results, oracle[:3]):
            assert tuple(m.surface for m in sent.morphemes) == key[2]

    def test_n_larger_than_path_count_returns_all(self):
        lex = Lexicon([entry("a", 1, "ア")])
        results = nbest("a", lex, None, 50)
        # dictionary path plus the unknown-node path
        assert len(results) == 2

    def test_costs_non_decreasing_and_unique(self):
        conn = ConnectionMatrix.zeros()
        results = nbest("京都タワー", TOY, conn, 10)
        oracle = enumerate_paths("京都タワー", TOY, conn)
        costs = [key[0] for key, _ in oracle[: len(results)]]
        assert costs == sorted(costs)
        seen = {tuple(m.surface for m in s.morphemes) + tuple(m.pos for m in s.morphemes) for s in results}
        assert len(seen) == len(results)


def random_lexicon(rng):
    """Small random lexicon over a three-letter alphabet, with random ids
    into a random connection matrix; costs may be negative."""
    alphabet = "abc"
    ids = rng.randint(1, 3)
    surfaces = set()
    while len(surfaces) < rng.randint(2, 6):
        length = rng.randint(1, 3)
        surfaces.add("".join(rng.choice(alphabet) for _ in range(length)))
    entries = []
    for i, s in enumerate(sorted(surfaces)):
        for _ in range(rng.randint(1, 2)):
            entries.append(
                LexiconEntry(
                    surface=s,
                    left_id=rng.randint(0, ids),
                    right_id=rng.randint(0, ids),
                    cost=rng.randint(-20, 60),
                    pos=rng.choice(["noun", "verb"]),
                    pronunciation="ア",
                )
            )
    size = ids + 1
    conn = ConnectionMatrix(
        [[rng.randint(-5, 15) for _ in range(size)] for _ in range(size)]
    )
    return Lexicon(entries), conn


@pytest.mark.parametrize("trial", range(100))
def test_random_lattices_match_oracle(trial):
    rng = random.Random(1000 + trial)
    lexicon, conn = random_lexicon(rng)
    length = rng.randint(1, 5)
    text = "".join(rng.choice("abc") for _ in range(length))
    nodes = build_lattice(text, lexicon, 10000)
    if len(nodes) > 12:
        text = text[:3]
        nodes = build_lattice(text, lexicon, 10000)
    assert len(nodes) <= 12 or length <= 3

    oracle = enumerate_paths(text, lexicon, conn)
    got = nbest(text, lexicon, conn, 4)
    assert len(got) == min(4, len(oracle))
    for sent, (key, path) in zip(got, oracle[: len(got)]):
        assert tuple(m.surface for m in sent.morphemes) == key[2]
    # minimum cost agrees exactly
    best_key = oracle[0][0]
    got_surfaces = tuple(m.surface for m in got[0].morphemes)
    assert got_surfaces == best_key[2]


class TestConnectionMatrix:
    def test_round_trip(self, tmp_path):
        conn = ConnectionMatrix([[1, 2], [3, 4], [5, 6]])
        path = tmp_path / "conn.txt"
        conn.save(path)
        loaded = ConnectionMatrix.load(path)
        assert loaded.shape == (3, 2)
        assert loaded.cost(2, 1) == 6

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            ConnectionMatrix([[1, 2], [3]])

    def test_entry_bounds_checked(self):
        conn = ConnectionMatrix.zeros(1, 1)
        bad = entry("a", 1, "ア", left=5)
        with pytest.raises(ValueError):
            conn.check_entry(bad)


def make_annotated(sent_id, words, boundaries, labels, raw=None):
    morphemes = tuple(
        Morpheme(
            surface=s,
            pos=pos,
            pronunciation=pron,
            lexical_accent=acc,
            is_polyphone_target=lemma is not None,
            polyphone_lemma=lemma,
        )
        for (s, pos, pron, acc, lemma) in words
    )
    sentence = Sentence(
        raw=raw or "".join(m.surface for m in morphemes),
        morphemes=morphemes,
        id=sent_id,
    )
    return AnnotatedSentence(sentence, tuple(boundaries), tuple(labels))


class TestCorpusIO:
    def corpus(self):
        s1 = make_annotated(
            "s1",
            [
                ("京都", "noun", "キョート", 1, None),
                ("タワー", "noun", "タワー", 1, None),
            ],
            [True, False],
            ["FLAT", "NUC1"],
        )
        s2 = make_annotated(
            "s2",
            [("方", "noun", "ホー", 0, "方"), ("に", "particle", "ニ", 0, None)],
            [True, False],
            ["KEEP", "KEEP"],
        )
        return AnnotatedCorpus((s1, s2))

    def test_round_trip(self, tmp_path):
        path = tmp_path / "corpus.txt"
        save_corpus(self.corpus(), path)
        loaded = load_corpus(path)
        assert len(loaded) == 2
        assert loaded.sentences[0].sentence.morphemes[0].surface == "京都"
        assert loaded.sentences[0].nucleus_labels == ("FLAT", "NUC1")
        assert loaded.sentences[1].sentence.morphemes[0].is_polyphone_target
        assert loaded.sentences[1].sentence.id == "s2"
        # byte-stable writer
        path2 = tmp_path / "again.txt"
        save_corpus(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("", encoding="utf-8")
        assert len(load_corpus(path)) == 0

    def test_nucleus_label_out_of_range(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(
            "#id x\n"
            "方\n"
            "方\tnoun\tホー\t0\t*\t*\t*\t*\t1\tNUC5\t-\n",
            encoding="utf-8",
        )
        with pytest.raises(LabelOutOfRange) as exc:
            load_corpus(path)
        assert exc.value.line == 3

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#id x\n方\n方\tnoun\n", encoding="utf-8")
        with pytest.raises(MissingField):
            load_corpus(path)

    def test_dangling_boundary(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(
            "#id x\n方\n方\tnoun\tホー\t0\t*\t*\t*\t*\t0\tKEEP\t-\n",
            encoding="utf-8",
        )
        with pytest.raises(DanglingBoundary):
            load_corpus(path)


class TestLexiconIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "lex.tsv"
        TOY.save(path)
        loaded = Lexicon.load(path)
        assert len(loaded) == len(TOY)
        assert sorted(e.surface for e in loaded.entries) == sorted(
            e.surface for e in TOY.entries
        )
