"""Objective metrics with subset breakdowns and multi-seed aggregation.

All rates live in [0, 1]; subsets with an empty denominator are reported as
absent (None) rather than a fabricated zero.  Sentence-exact pitch match
never exceeds per-mora accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import AlignmentMismatch, LengthMismatch, SpanMismatch
from .text import AccentPhrase, PitchSequence, Sentence

PdPrediction = Sequence[Tuple[int, str]]  # (target position, pronunciation)


def pd_accuracy(
    predictions: Sequence[PdPrediction], gold: Sequence[PdPrediction]
) -> Optional[float]:
    """Correct polyphone targets over all targets."""
    if len(predictions) != len(gold):
        raise AlignmentMismatch(
            f"{len(predictions)} prediction sentences vs {len(gold)} gold"
        )
    correct = total = 0
    for pred, ref in zip(predictions, gold):
        if [p for p, _ in pred] != [p for p, _ in ref]:
            raise AlignmentMismatch(
                f"target positions differ: {pred} vs {ref}"
            )
        for (_, p), (_, g) in zip(pred, ref):
            total += 1
            correct += int(p == g)
    return correct / total if total else None


def apbp_f1(
    predictions: Sequence[Sequence[bool]],
    gold: Sequence[Sequence[bool]],
    sentences: Optional[Sequence[Sentence]] = None,
    subset: str = "all",
) -> Optional[float]:
    """F1 of the boundary class over word slots 1..T-1 (slot 0 is a
    boundary by construction and is excluded).

    subset="adjacent_nouns" keeps only slots flanked by nouns on both
    sides, which requires `sentences`.
    """
    if subset not in ("all", "adjacent_nouns"):
        raise ValueError(f"unknown subset {subset!r}")
    if subset == "adjacent_nouns" and sentences is None:
        raise ValueError("adjacent_nouns subset needs the sentences")
    if len(predictions) != len(gold):
        raise AlignmentMismatch(
            f"{len(predictions)} prediction sentences vs {len(gold)} gold"
        )
    tp = fp = fn = 0
    for si, (pred, ref) in enumerate(zip(predictions, gold)):
        if len(pred) != len(ref):
            raise AlignmentMismatch(
                f"sentence {si}: {len(pred)} labels vs {len(ref)} gold"
            )
        for i in range(1, len(ref)):
            if subset == "adjacent_nouns":
                morphemes = sentences[si].morphemes
                if not (morphemes[i - 1].pos == "noun" and morphemes[i].pos == "noun"):
                    continue
            p, g = bool(pred[i]), bool(ref[i])
            if p and g:
                tp += 1
            elif p and not g:
                fp += 1
            elif g and not p:
                fn += 1
    if tp + fp == 0 or tp + fn == 0:
        return None
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def anpp_accuracy(
    predictions: Sequence[Sequence[AccentPhrase]],
    gold: Sequence[Sequence[AccentPhrase]],
    subset: str = "all",
) -> Optional[float]:
    """Fraction of phrases whose resolved nucleus matches gold, on gold
    phrase spans; subset="long_phrases" keeps phrases of three or more
    words."""
    if subset not in ("all", "long_phrases"):
        raise ValueError(f"unknown subset {subset!r}")
    if len(predictions) != len(gold):
        raise SpanMismatch(
            f"{len(predictions)} prediction sentences vs {len(gold)} gold"
        )
    correct = total = 0
    for si, (pred, ref) in enumerate(zip(predictions, gold)):
        if [(p.start, p.end) for p in pred] != [(g.start, g.end) for g in ref]:
            raise SpanMismatch(f"sentence {si}: phrase spans differ")
        for p, g in zip(pred, ref):
            if subset == "long_phrases" and (g.end - g.start) < 3:
                continue
            total += 1
            correct += int(p.nucleus == g.nucleus)
    return correct / total if total else None


@dataclass
class OverallAp:
    snt_exact: float
    mora_accuracy: float
    excluded: int  # sentences dropped for mora-count mismatch

    def as_dict(self) -> Dict[str, float]:
        return {"snt_exact": self.snt_exact, "mora_accuracy": self.mora_accuracy}


def overall_ap(
    predictions: Sequence[PitchSequence], gold: Sequence[PitchSequence]
) -> OverallAp:
    """Sentence-exact rate and per-mora accuracy of pitch labels.

    Sentences whose mora counts disagree are excluded and counted, not
    scored."""
    if len(predictions) != len(gold):
        raise LengthMismatch(
            f"{len(predictions)} prediction sentences vs {len(gold)} gold"
        )
    exact = scored = 0
    correct_morae = total_morae = 0
    excluded = 0
    for pred, ref in zip(predictions, gold):
        if len(pred) != len(ref):
            excluded += 1
            continue
        scored += 1
        hits = sum(int(p == g) for p, g in zip(pred, ref))
        correct_morae += hits
        total_morae += len(ref)
        exact += int(hits == len(ref))
    if scored == 0:
        raise LengthMismatch("no alignable sentences to score")
    return OverallAp(
        snt_exact=exact / scored,
        mora_accuracy=correct_morae / total_morae if total_morae else 1.0,
        excluded=excluded,
    )


@dataclass
class EvalReport:
    """Per-seed metric values with their mean, one entry per (name, subset)."""

    metric: str
    seeds: List[int]
    values: Dict[Tuple[str, str], List[Optional[float]]]
    errors: List[str] = field(default_factory=list)

    def mean(self, name: str, subset: str = "all") -> Optional[float]:
        vals = [v for v in self.values[(name, subset)] if v is not None]
        if not vals:
            return None
        return sum(vals) / len(vals)

    def rows(self) -> List[Tuple[str, str, str, str]]:
        out = []
        for (name, subset), vals in sorted(self.values.items()):
            for seed, v in zip(self.seeds, vals):
                out.append(
                    (name, subset, str(seed), "-" if v is None else f"{v:.6f}")
                )
            m = self.mean(name, subset)
            out.append((name, subset, "mean", "-" if m is None else f"{m:.6f}"))
        return out

    def to_tsv(self) -> str:
        lines = ["#metric\tsubset\tseed\tvalue"]
        lines += ["\t".join(row) for row in self.rows()]
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        width = max(
            [len("metric")] + [len(name) for (name, _), _ in self.values.items()]
        )
        lines = [f"{'metric':<{width}}  {'subset':<15} {'seed':>6}  value"]
        for name, subset, seed, value in self.rows():
            lines.append(f"{name:<{width}}  {subset:<15} {seed:>6}  {value}")
        if self.errors:
            lines.append("")
            lines.extend(f"! {e}" for e in self.errors)
        return "\n".join(lines)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


RunFn = Callable[[int], Dict[Tuple[str, str], Optional[float]]]


def multi_seed(run_fn: RunFn, seeds: Sequence[int], metric: str = "metric") -> EvalReport:
    """Run a seeded train/evaluate function per seed and aggregate means."""
    values: Dict[Tuple[str, str], List[Optional[float]]] = {}
    for seed in seeds:
        result = run_fn(seed)
        for key, value in result.items():
            values.setdefault(key, []).append(value)
    return EvalReport(metric=metric, seeds=list(seeds), values=values)
