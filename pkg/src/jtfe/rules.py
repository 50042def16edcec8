"""Rule-based accent machinery: the nucleus-change (sandhi) rule table and
the POS-driven phrase-boundary rules.

The sandhi table is ordered data, not hard-coded truth: each rule keys on
the following word's accent-combination type, the POS pair, and the
following word's mora-count bucket, and yields a nucleus-change label for
that following word (the preceding word is flattened).  The first matching
rule wins; a catch-all KEEP rule guarantees totality.  The labels double as
the EF6 feature and as the rule-based ANPP baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Set, Tuple

from .text import Morpheme

KEEP = "KEEP"
FLAT = "FLAT"
MAX_NUCLEUS_SHIFT = 10

NUCLEUS_LABELS: Tuple[str, ...] = (KEEP, FLAT) + tuple(
    f"NUC{k}" for k in range(1, MAX_NUCLEUS_SHIFT + 1)
)

CONTENT_POS = frozenset({"noun", "verb", "adjective", "adverb"})
FUNCTION_POS = frozenset({"particle", "auxiliary"})


def mora_bucket(count: int) -> str:
    return str(count) if count < 6 else "6+"


@dataclass(frozen=True)
class SandhiRule:
    combination_type: str  # of the following word, or "*"
    pos_pair: str          # "leftpos+rightpos", or "*"
    mora_bucket: str       # of the following word, or "*"
    outcome: str           # nucleus label for the following word

    def matches(self, left: Morpheme, right: Morpheme) -> bool:
        if self.combination_type not in ("*", right.accent_combination_type):
            return False
        if self.pos_pair not in ("*", f"{left.pos}+{right.pos}"):
            return False
        if self.mora_bucket not in ("*", mora_bucket(right.mora_count)):
            return False
        return True


class SandhiRuleTable:
    """Ordered first-match-wins rules with a guaranteed default."""

    def __init__(self, rules: Sequence[SandhiRule]):
        rules = list(rules)
        if not rules or rules[-1] != SandhiRule("*", "*", "*", KEEP):
            rules.append(SandhiRule("*", "*", "*", KEEP))
        self.rules: Tuple[SandhiRule, ...] = tuple(rules)

    @classmethod
    def load(cls, path: str | Path) -> "SandhiRuleTable":
        rules = []
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns")
            if cols[3] not in NUCLEUS_LABELS:
                raise ValueError(f"{path}:{lineno}: unknown outcome {cols[3]!r}")
            rules.append(SandhiRule(cols[0], cols[1], cols[2], cols[3]))
        return cls(rules)

    def save(self, path: str | Path) -> None:
        lines = ["#combination_type\tpos_pair\tmora_bucket\toutcome"]
        for r in self.rules:
            lines.append(f"{r.combination_type}\t{r.pos_pair}\t{r.mora_bucket}\t{r.outcome}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def first_match(self, left: Morpheme, right: Morpheme) -> SandhiRule:
        for rule in self.rules:
            if rule.matches(left, right):
                return rule
        raise AssertionError("default rule must match")  # unreachable


def rule_sandhi(
    phrase: Sequence[Morpheme], table: SandhiRuleTable
) -> List[str]:
    """Nucleus-change labels for one accent phrase.

    Adjacent pairs are visited right to left; a non-default match labels the
    following word with the rule outcome and flattens the preceding word.
    A label set by a righter pair stands (the rightmost compound member
    keeps its outcome); unmatched words keep their lexical accent (KEEP).
    """
    labels = [KEEP] * len(phrase)
    for i in range(len(phrase) - 2, -1, -1):
        rule = table.first_match(phrase[i], phrase[i + 1])
        if rule.outcome == KEEP:
            continue  # no sandhi for this pair
        if labels[i + 1] == KEEP:  # a righter pair's outcome stands
            labels[i + 1] = rule.outcome
        labels[i] = FLAT
    return labels


def load_pos_pair_exceptions(path: str | Path) -> Set[Tuple[str, str]]:
    pairs = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ValueError(f"bad POS-pair line {line!r}")
        pairs.add((cols[0], cols[1]))
    return pairs


def rule_apbp(
    morphemes: Sequence[Morpheme],
    compound_exceptions: Set[Tuple[str, str]] = frozenset(),
) -> List[bool]:
    """POS-driven phrase boundaries: a boundary opens before content words
    unless the previous word is a prefix or the POS pair is listed as a
    compound exception; never before particles or auxiliaries."""
    labels: List[bool] = []
    for i, m in enumerate(morphemes):
        if i == 0:
            labels.append(True)
            continue
        prev = morphemes[i - 1]
        if m.pos in FUNCTION_POS:
            labels.append(False)
        elif m.pos in CONTENT_POS:
            if prev.pos == "prefix" or (prev.pos, m.pos) in compound_exceptions:
                labels.append(False)
            else:
                labels.append(True)
        else:
            labels.append(False)
    return labels
