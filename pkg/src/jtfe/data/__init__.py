"""Bundled toy data: a small lexicon, connection matrix, annotated corpus,
sandhi rule table, and boundary-rule exception list."""

from pathlib import Path

_HERE = Path(__file__).parent

TOY_LEXICON = _HERE / "toy_lexicon.tsv"
TOY_CONN = _HERE / "toy_conn.txt"
TOY_CORPUS = _HERE / "toy_corpus.txt"
SANDHI_RULES = _HERE / "sandhi_rules.tsv"
APBP_EXCEPTIONS = _HERE / "apbp_exceptions.tsv"
