"""Core linguistic data types: morae, morphemes, sentences, accent phrases,
and mora-level pitch rendering.

All types are immutable after construction and safe to share across threads.
Pitch follows the Tokyo-dialect convention: within one accent phrase the
pitch rises once and falls at most once, the fall happening right after the
accent nucleus.  Nucleus position 0 denotes a flat (heiban) phrase.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

from .errors import InvalidNucleus, InvalidPronunciation

LOW = "L"
HIGH = "H"

SMALL_GLIDES = frozenset("ャュョ")
LONG_VOWEL = "ー"
SOKUON = "ッ"
MORAIC_NASAL = "ン"

# Characters a mora may not start with: attach to the preceding base kana.
_STANDALONE = frozenset((LONG_VOWEL, SOKUON, MORAIC_NASAL))


def _is_katakana(ch: str) -> bool:
    return "ァ" <= ch <= "ヺ" or ch == LONG_VOWEL


def normalize_text(text: str) -> str:
    """Canonical text normalization: NFKC folding, which also unifies
    half-width and full-width variants.  No verbalization of numbers."""
    return unicodedata.normalize("NFKC", text)


def hiragana_to_katakana(text: str) -> str:
    return "".join(
        chr(ord(ch) + 0x60) if "ぁ" <= ch <= "ゖ" else ch for ch in text
    )


@dataclass(frozen=True)
class Mora:
    """One timing unit: a base kana optionally carrying a small ya/yu/yo
    glide, or a standalone long-vowel mark, sokuon, or moraic nasal."""

    text: str

    def __post_init__(self):
        if not (1 <= len(self.text) <= 2):
            raise InvalidPronunciation(self.text, 0)


def segment_morae(pronunciation: str) -> Tuple[Mora, ...]:
    """Split a katakana pronunciation into morae.

    Small ya/yu/yo glides attach to the preceding base kana; the long-vowel
    mark, sokuon, and moraic nasal each stand alone.  Raises
    InvalidPronunciation for non-katakana input or a glide with nothing to
    attach to.
    """
    morae: list[str] = []
    for offset, ch in enumerate(pronunciation):
        if not _is_katakana(ch):
            raise InvalidPronunciation(ch, offset)
        if ch in SMALL_GLIDES:
            if not morae or len(morae[-1]) != 1 or morae[-1] in _STANDALONE:
                raise InvalidPronunciation(ch, offset)
            morae[-1] += ch
        else:
            morae.append(ch)
    return tuple(Mora(m) for m in morae)


@dataclass(frozen=True)
class Morpheme:
    """One dictionary word: the unit of sequence labeling.

    `morae` is always the mora segmentation of `pronunciation` and is
    computed at construction; `lexical_accent` 0 means flat (heiban).
    """

    surface: str
    pos: str
    pronunciation: str
    lexical_accent: int = 0
    accent_combination_type: str = "*"
    conjugation_form: str = "*"
    conjugation_type: str = "*"
    word_type: str = "*"
    is_polyphone_target: bool = False
    polyphone_lemma: Optional[str] = None
    morae: Tuple[Mora, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "morae", segment_morae(self.pronunciation))
        if self.lexical_accent < 0 or self.lexical_accent > len(self.morae):
            raise ValueError(
                f"lexical accent {self.lexical_accent} exceeds mora count "
                f"{len(self.morae)} of {self.surface!r}"
            )

    @property
    def mora_count(self) -> int:
        return len(self.morae)

    def with_pronunciation(self, pronunciation: str) -> "Morpheme":
        """Copy with a new pronunciation (morae are re-segmented); the
        lexical accent is clamped to the new mora count."""
        accent = min(self.lexical_accent, len(segment_morae(pronunciation)))
        return replace(self, pronunciation=pronunciation, lexical_accent=accent)


@dataclass(frozen=True)
class Sentence:
    raw: str
    morphemes: Tuple[Morpheme, ...]
    id: str = ""

    def __post_init__(self):
        joined = "".join(m.surface for m in self.morphemes)
        if joined != normalize_text(self.raw):
            raise ValueError(
                f"morpheme surfaces {joined!r} do not spell the normalized "
                f"text {normalize_text(self.raw)!r}"
            )

    def __len__(self) -> int:
        return len(self.morphemes)

    @property
    def mora_count(self) -> int:
        return sum(m.mora_count for m in self.morphemes)


@dataclass(frozen=True)
class AccentPhrase:
    """Half-open morpheme index range carrying one accent nucleus.

    `nucleus` is a 1-based mora index within the phrase; 0 means flat.
    """

    start: int
    end: int
    nucleus: int = 0

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"empty phrase span [{self.start}, {self.end})")
        if self.nucleus < 0:
            raise InvalidNucleus(f"negative nucleus {self.nucleus}")

    def morphemes(self, sentence: Sentence) -> Tuple[Morpheme, ...]:
        return sentence.morphemes[self.start : self.end]

    def mora_count(self, sentence: Sentence) -> int:
        return sum(m.mora_count for m in self.morphemes(sentence))


@dataclass(frozen=True)
class PitchSequence:
    """Per-mora Low/High labels for a whole sentence."""

    labels: Tuple[str, ...]

    def __post_init__(self):
        bad = set(self.labels) - {LOW, HIGH}
        if bad:
            raise ValueError(f"pitch labels must be L or H, got {bad}")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)


def check_partition(phrases: Sequence[AccentPhrase], n_morphemes: int) -> None:
    """Phrases must tile [0, n_morphemes) left to right without gaps."""
    expected = 0
    for ph in phrases:
        if ph.start != expected:
            raise ValueError(
                f"phrase starting at {ph.start} leaves a gap (expected {expected})"
            )
        expected = ph.end
    if expected != n_morphemes:
        raise ValueError(f"phrases cover [0, {expected}) of {n_morphemes} morphemes")


def render_phrase(n_morae: int, nucleus: int) -> Tuple[str, ...]:
    """L/H pattern of a single phrase: flat phrases rise after the first
    mora and stay high; otherwise pitch falls right after the nucleus."""
    if nucleus > n_morae:
        raise InvalidNucleus(
            f"nucleus {nucleus} exceeds phrase mora count {n_morae}"
        )
    if n_morae == 0:
        return ()
    if nucleus == 0:
        return (LOW,) + (HIGH,) * (n_morae - 1)
    if nucleus == 1:
        return (HIGH,) + (LOW,) * (n_morae - 1)
    return (LOW,) + (HIGH,) * (nucleus - 1) + (LOW,) * (n_morae - nucleus)


def render_pitch(
    phrases: Sequence[AccentPhrase], sentence: Sentence
) -> PitchSequence:
    """Concatenate per-phrase L/H patterns over a phrase partition of the
    sentence."""
    check_partition(phrases, len(sentence))
    labels: list[str] = []
    for ph in phrases:
        labels.extend(render_phrase(ph.mora_count(sentence), ph.nucleus))
    return PitchSequence(tuple(labels))


def phrases_from_boundaries(boundaries: Sequence[bool]) -> Tuple[AccentPhrase, ...]:
    """Turn per-morpheme "boundary before this word" flags into phrase spans
    (nucleus left at 0)."""
    if not boundaries:
        return ()
    if not boundaries[0]:
        raise ValueError("first boundary flag must be true")
    starts = [i for i, b in enumerate(boundaries) if b]
    ends = starts[1:] + [len(boundaries)]
    return tuple(AccentPhrase(s, e) for s, e in zip(starts, ends))


def boundaries_from_phrases(
    phrases: Sequence[AccentPhrase], n_morphemes: int
) -> Tuple[bool, ...]:
    check_partition(phrases, n_morphemes)
    starts = {ph.start for ph in phrases}
    return tuple(i in starts for i in range(n_morphemes))
