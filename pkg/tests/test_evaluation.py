import random

import pytest

from jtfe.errors import AlignmentMismatch, LengthMismatch, SpanMismatch
from jtfe.evaluation import (
    anpp_accuracy,
    apbp_f1,
    multi_seed,
    overall_ap,
    pd_accuracy,
)
from jtfe.text import AccentPhrase, Morpheme, PitchSequence, Sentence


def pitch(s):
    return PitchSequence(tuple(s))


class TestPdAccuracy:
    def test_all_correct(self):
        preds = [[(0, "ホー")], [(2, "カタ")]]
        assert pd_accuracy(preds, preds) == 1.0

    def test_three_of_four(self):
        preds = [[(0, "a"), (1, "b")], [(0, "c"), (1, "d")]]
        gold = [[(0, "a"), (1, "b")], [(0, "c"), (1, "x")]]
        assert pd_accuracy(preds, gold) == 0.75

    def test_position_mismatch(self):
        with pytest.raises(AlignmentMismatch):
            pd_accuracy([[(0, "a")]], [[(1, "a")]])

    def test_no_targets_reported_absent(self):
        assert pd_accuracy([[]], [[]]) is None


def noun_sentence(n):
    ms = tuple(
        Morpheme(surface=f"n{i}", pos="noun", pronunciation="ア") for i in range(n)
    )
    return Sentence("".join(m.surface for m in ms), ms)


def mixed_sentence(pos_tags):
    ms = tuple(
        Morpheme(surface=f"w{i}", pos=p, pronunciation="ア")
        for i, p in enumerate(pos_tags)
    )
    return Sentence("".join(m.surface for m in ms), ms)


class TestApbpF1:
    def test_perfect(self):
        gold = [[True, True, False, True]]
        assert apbp_f1(gold, gold) == 1.0

    def test_formula(self):
        # slots 1..3: gold (1,0,1), pred (1,1,1): P=2/3, R=1, F1=0.8
        gold = [[True, True, False, True]]
        pred = [[True, True, True, True]]
        assert apbp_f1(pred, gold) == pytest.approx(0.8)

    def test_position_zero_excluded(self):
        # only slot 0 differs -> no effect
        gold = [[True, True]]
        pred = [[False, True]]
        assert apbp_f1(pred, gold) == 1.0

    def test_adjacent_nouns_subset_by_hand(self):
        # sentence 1: noun noun noun -> slots 1,2 count
        # sentence 2: noun verb noun -> no noun-noun slots
        s1, s2 = noun_sentence(3), mixed_sentence(["noun", "verb", "noun"])
        gold = [[True, False, True], [True, True, False]]
        pred = [[True, True, True], [True, False, False]]
        # noun-noun slots: s1 slot1 (gold 0, pred 1 -> FP), s1 slot2 (gold 1,
        # pred 1 -> TP); hand count: P = 1/2, R = 1/1 -> F1 = 2/3
        got = apbp_f1(pred, gold, [s1, s2], subset="adjacent_nouns")
        assert got == pytest.approx(2 / 3)

    def test_empty_denominator_absent(self):
        gold = [[True, False]]
        pred = [[True, False]]
        assert apbp_f1(pred, gold) is None

    def test_alignment_checked(self):
        with pytest.raises(AlignmentMismatch):
            apbp_f1([[True]], [[True, False]])


def phrases(*spans):
    return [AccentPhrase(s, e, n) for s, e, n in spans]


class TestAnppAccuracy:
    def test_all_matching(self):
        p = [phrases((0, 2, 1), (2, 3, 0))]
        assert anpp_accuracy(p, p) == 1.0

    def test_one_wrong_of_five(self):
        gold = [phrases((0, 1, 1), (1, 2, 0), (2, 3, 2), (3, 4, 0), (4, 5, 1))]
        pred = [phrases((0, 1, 1), (1, 2, 0), (2, 3, 2), (3, 4, 1), (4, 5, 1))]
        assert anpp_accuracy(pred, gold) == pytest.approx(0.8)

    def test_long_subset(self):
        gold = [phrases((0, 3, 1), (3, 4, 0))]
        pred = [phrases((0, 3, 2), (3, 4, 0))]
        assert anpp_accuracy(pred, gold) == pytest.approx(0.5)
        assert anpp_accuracy(pred, gold, subset="long_phrases") == 0.0

    def test_no_long_phrases_absent(self):
        gold = [phrases((0, 2, 1))]
        assert anpp_accuracy(gold, gold, subset="long_phrases") is None

    def test_span_mismatch(self):
        with pytest.raises(SpanMismatch):
            anpp_accuracy([phrases((0, 2, 1))], [phrases((0, 1, 1))])


class TestOverallAp:
    def test_perfect(self):
        seqs = [pitch("LHH"), pitch("HL")]
        result = overall_ap(seqs, seqs)
        assert result.snt_exact == 1.0 and result.mora_accuracy == 1.0

    def test_one_wrong_mora_of_ten(self):
        gold = [pitch("LHHHHHHHHH")]
        pred = [pitch("LHHHHHHHHL")]
        result = overall_ap(pred, gold)
        assert result.snt_exact == 0.0
        assert result.mora_accuracy == pytest.approx(0.9)

    def test_mismatched_sentences_excluded_and_counted(self):
        gold = [pitch("LH"), pitch("LHH")]
        pred = [pitch("LH"), pitch("LHHH")]
        result = overall_ap(pred, gold)
        assert result.excluded == 1
        assert result.snt_exact == 1.0

    def test_snt_exact_bounded_by_mora_accuracy_per_pair(self):
        """For any single prediction/gold pair, an exactly-matched sentence
        has every mora correct, so snt_exact <= mora_accuracy.  (The
        aggregate over a mixed-length corpus is NOT bounded this way: one
        exact 1-mora sentence plus a long mostly-wrong one breaks it, which
        random search here would find.)"""
        rng = random.Random(0)
        for _ in range(1000):
            n = rng.randint(1, 8)
            gold = [pitch("".join(rng.choice("LH") for _ in range(n)))]
            pred = [pitch("".join(rng.choice("LH") for _ in range(n)))]
            result = overall_ap(pred, gold)
            assert result.snt_exact <= result.mora_accuracy + 1e-12

    def test_snt_exact_bounded_on_fixed_length_corpus(self):
        """With equal sentence lengths the aggregate bound does hold."""
        rng = random.Random(2)
        for _ in range(200):
            n_sent = rng.randint(1, 6)
            length = rng.randint(1, 8)
            gold = [
                pitch("".join(rng.choice("LH") for _ in range(length)))
                for _ in range(n_sent)
            ]
            pred = [
                pitch("".join(rng.choice("LH") for _ in range(length)))
                for _ in range(n_sent)
            ]
            result = overall_ap(pred, gold)
            assert result.snt_exact <= result.mora_accuracy + 1e-12

    def test_nothing_alignable(self):
        with pytest.raises(LengthMismatch):
            overall_ap([pitch("LH")], [pitch("LHH")])


class TestMultiSeed:
    def test_single_seed_mean_is_value(self):
        report = multi_seed(lambda seed: {("m", "all"): 0.5}, [1])
        assert report.mean("m") == 0.5

    def test_mean_of_two(self):
        values = {1: 0.8, 2: 0.9}
        report = multi_seed(lambda seed: {("m", "all"): values[seed]}, [1, 2])
        assert report.mean("m") == pytest.approx(0.85)

    def test_zero_spread(self):
        report = multi_seed(lambda seed: {("m", "all"): 0.7}, [1, 2, 3])
        vals = report.values[("m", "all")]
        assert max(vals) - min(vals) == 0.0

    def test_report_serialization(self, tmp_path):
        report = multi_seed(
            lambda seed: {("m", "all"): 0.5 + seed / 10, ("m", "sub"): None}, [1, 2]
        )
        path = tmp_path / "report.tsv"
        report.write(path)
        text = path.read_text(encoding="utf-8")
        assert "m\tall\t1\t0.600000" in text
        assert "m\tall\tmean\t0.650000" in text
        assert "m\tsub\tmean\t-" in text
        assert "metric" in report.to_table()

    def test_reordering_invariance(self):
        """Metrics do not depend on sentence order."""
        gold = [[True, False], [True, True]]
        pred = [[True, True], [True, True]]
        a = apbp_f1(pred, gold)
        b = apbp_f1(list(reversed(pred)), list(reversed(gold)))
        assert a == b


class TestF1TwoFormulaOracle:
    def test_f1_equals_direct_counting(self):
        """2PR/(P+R) computed by the metric agrees with direct TP/FP/FN
        counting on random cases."""
        rng = random.Random(1)
        for _ in range(200):
            n_sent = rng.randint(1, 4)
            gold, pred = [], []
            for _ in range(n_sent):
                n = rng.randint(1, 6)
                gold.append([True] + [rng.random() < 0.5 for _ in range(n - 1)])
                pred.append([True] + [rng.random() < 0.5 for _ in range(n - 1)])
            tp = fp = fn = 0
            for g_s, p_s in zip(gold, pred):
                for i in range(1, len(g_s)):
                    tp += int(p_s[i] and g_s[i])
                    fp += int(p_s[i] and not g_s[i])
                    fn += int(g_s[i] and not p_s[i])
            got = apbp_f1(pred, gold)
            if tp + fp == 0 or tp + fn == 0:
                assert got is None
            else:
                expected = 2 * tp / (2 * tp + fp + fn)  # equivalent closed form
                assert got == pytest.approx(expected)
