"""Japanese TTS front-end: text normalization, lattice tokenization,
polyphone disambiguation, and mora-level pitch accent prediction."""

from .text import (
    AccentPhrase,
    Mora,
    Morpheme,
    PitchSequence,
    Sentence,
    normalize_text,
    render_pitch,
    segment_morae,
)

__version__ = "0.1.0"

__all__ = [
    "AccentPhrase",
    "Mora",
    "Morpheme",
    "PitchSequence",
    "Sentence",
    "normalize_text",
    "render_pitch",
    "segment_morae",
    "__version__",
]
