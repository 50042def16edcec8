"""Command-line surface.

Subcommands: tokenize, train, predict, eval, pipeline, build-ngrams,
train-charlm.  Options may come from a JSON config file (--config);
command-line flags override file values, and path-valued options accept
environment overrides named JTFE_<OPTION> (e.g. JTFE_LEXICON).

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import evaluation
from .embeddings import CharLmConfig, EmbeddingFile, load_charlm, save_charlm, train_charlm
from .errors import JtfeError
from .features import NgramCounts, build_ngram_counts
from .lexicon import ConnectionMatrix, Lexicon, load_corpus, nbest
from .nn.train import TrainSchedule
from .predictors import Pipeline, TaskConfig, TaskModel, gold_pitch
from .rules import SandhiRuleTable, load_pos_pair_exceptions
from .text import phrases_from_boundaries
from .workflows import (
    TaskAssets,
    error_listing,
    filter_to_embeddings,
    make_provider,
    predict_corpus,
    score_task,
    train_task,
)

log = logging.getLogger("jtfe")

PATH_OPTIONS = {
    "lexicon",
    "conn",
    "corpus",
    "train_corpus",
    "val_corpus",
    "embeddings",
    "charlm",
    "rules",
    "exceptions",
    "ngrams",
    "model",
    "out",
    "report",
    "pd_model",
    "apbp_model",
    "anpp_model",
    "input",
}


class UsageError(Exception):
    pass


def _apply_overrides(args: argparse.Namespace) -> argparse.Namespace:
    """Layer config-file values under flags, then env overrides for paths."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    for key, value in config.items():
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise UsageError(f"config key {key!r} is not a known option")
        if getattr(args, key) is None:
            setattr(args, key, value)
    for key in PATH_OPTIONS:
        env = os.environ.get(f"JTFE_{key.upper()}")
        if env and getattr(args, key, None) is None:
            setattr(args, key, env)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _check_paths(args: argparse.Namespace) -> None:
    for name in PATH_OPTIONS - {"out", "report"}:
        value = getattr(args, name, None)
        if value is not None and not Path(str(value)).exists():
            raise FileNotFoundError(
                f"--{name.replace('_', '-')}: no such file: {value}"
            )


def _load_assets(args: argparse.Namespace) -> TaskAssets:
    ngram = NgramCounts.load(args.ngrams) if getattr(args, "ngrams", None) else None
    rules = (
        SandhiRuleTable.load(args.rules) if getattr(args, "rules", None) else None
    )
    provider = None
    implicit = getattr(args, "implicit", None) or "none"
    if implicit == "file":
        _require(args, "embeddings")
        embedding_file = EmbeddingFile.load(args.embeddings)
        provider, dim = make_provider("file", embedding_file=embedding_file)
        args.implicit_dim = dim
        args._embedding_file = embedding_file
    elif implicit == "charlm":
        _require(args, "charlm")
        provider, dim = make_provider("charlm", charlm=load_charlm(args.charlm))
        args.implicit_dim = dim
    else:
        args.implicit_dim = 0
    return TaskAssets(ngram=ngram, rule_table=rules, provider=provider)


def _log_run(args: argparse.Namespace) -> None:
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if v is not None and k != "func"
    }
    log.info("resolved config: %s", json.dumps(resolved, ensure_ascii=False, default=str))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_tokenize(args: argparse.Namespace) -> int:
    _require(args, "lexicon")
    lexicon = Lexicon.load(args.lexicon)
    conn = ConnectionMatrix.load(args.conn) if args.conn else None
    texts = (
        Path(args.input).read_text(encoding="utf-8").splitlines()
        if args.input
        else [args.text or ""]
    )
    for text in texts:
        if not text.strip():
            continue
        for rank, sent in enumerate(nbest(text, lexicon, conn, args.nbest), start=1):
            for m in sent.morphemes:
                print(
                    f"{rank}\t{m.surface}\t{m.pos}\t{m.pronunciation}\t{m.lexical_accent}"
                )
            print()
    return 0


def _schedule_from_args(args: argparse.Namespace, seed: int) -> TrainSchedule:
    return TrainSchedule(
        lr=args.lr,
        batch_size=args.batch_size,
        patience=args.patience,
        stop_lr=args.stop_lr,
        max_epochs=args.max_epochs,
        seed=seed,
    )


def cmd_train(args: argparse.Namespace) -> int:
    """Train one head; with several --seeds, train once per seed, save
    per-seed models, and report per-seed metrics with their mean."""
    _require(args, "task", "train_corpus", "out")
    train_c = load_corpus(args.train_corpus)
    val_c = load_corpus(args.val_corpus) if args.val_corpus else train_c
    assets = _load_assets(args)
    embedding_file = getattr(args, "_embedding_file", None)
    if embedding_file is not None:
        train_c, dropped = filter_to_embeddings(train_c, embedding_file)
        val_c, dropped_val = filter_to_embeddings(val_c, embedding_file)
        if dropped or dropped_val:
            log.info(
                "excluded %d train / %d validation sentences without embeddings: %s",
                len(dropped), len(dropped_val),
                " ".join(dropped + dropped_val),
            )
    seeds = args.seeds or [0]

    def run(seed: int) -> Dict[Tuple[str, str], Optional[float]]:
        config = TaskConfig(
            task=args.task,
            use_ef7=args.ef7,
            embed_dim=args.embed_dim,
            hidden=args.hidden,
            implicit=args.implicit or "none",
            implicit_dim=args.implicit_dim,
            seed=seed,
        )
        tm, history = train_task(
            config, train_c, val_c, _schedule_from_args(args, seed), assets
        )
        out = args.out if len(seeds) == 1 else f"{args.out}.seed{seed}"
        tm.save(out)
        log.info(
            "trained %s seed %d: best %.4f at epoch %d (%d epochs); saved to %s",
            args.task, seed, history.best_metric, history.best_epoch,
            len(history.records), out,
        )
        return score_task(tm, val_c, assets)

    report = evaluation.multi_seed(run, seeds, metric=args.task)
    print(report.to_tsv())
    print(report.to_table())
    if args.report:
        report.write(args.report)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    _require(args, "model", "corpus")
    tm = TaskModel.load(args.model)
    args.implicit = tm.config.implicit
    corpus = load_corpus(args.corpus)
    assets = _load_assets(args)
    corpus = _drop_uncovered(args, corpus)
    predictions = predict_corpus(tm, corpus, assets)
    out = sys.stdout if not args.out else open(args.out, "w", encoding="utf-8")
    try:
        for ann, pred in zip(corpus, predictions):
            sid = ann.sentence.id
            if tm.config.task == "pd":
                for pos, pron in pred:
                    print(f"{sid}\t{pos}\t{pron}", file=out)
            elif tm.config.task == "apbp":
                flags = "".join("1" if b else "0" for b in pred)
                print(f"{sid}\t{flags}", file=out)
            else:
                spans = " ".join(f"{p.start}:{p.end}:{p.nucleus}" for p in pred)
                print(f"{sid}\t{spans}", file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    """Score a trained head (deterministic, single pass) or the overall
    pipeline pairing."""
    _require(args, "task", "corpus")
    corpus = load_corpus(args.corpus)
    if args.task == "overall":
        return _eval_overall(args, corpus)
    _require(args, "model")
    tm = TaskModel.load(args.model)
    args.implicit = tm.config.implicit
    assets = _load_assets(args)
    corpus = _drop_uncovered(args, corpus)
    report = evaluation.multi_seed(
        lambda _seed: score_task(tm, corpus, assets), [0], metric=args.task
    )
    report.errors = error_listing(tm, corpus, assets)
    print(report.to_tsv())
    print(report.to_table())
    if args.report:
        report.write(args.report)
    return 0


def _eval_overall(args: argparse.Namespace, corpus) -> int:
    """Pipeline-style overall accent evaluation: predicted boundaries feed
    nucleus prediction unless --gold-boundaries is set."""
    _require(args, "apbp_model", "anpp_model")
    apbp_tm = TaskModel.load(args.apbp_model)
    anpp_tm = TaskModel.load(args.anpp_model)
    from .predictors import anpp_predict, apbp_predict

    assets_apbp = _assets_for_model(args, apbp_tm)
    assets_anpp = _assets_for_model(args, anpp_tm)
    preds, golds = [], []
    from .text import render_pitch

    for ann in corpus:
        if args.gold_boundaries:
            spans = list(phrases_from_boundaries(ann.boundaries))
        else:
            flags = apbp_predict(
                apbp_tm, ann.sentence, assets_apbp.ngram, assets_apbp.provider
            )
            spans = list(phrases_from_boundaries(tuple(flags)))
        _, resolved = anpp_predict(
            anpp_tm, ann.sentence, spans, assets_anpp.rule_table, assets_anpp.provider
        )
        preds.append(render_pitch(resolved, ann.sentence))
        golds.append(gold_pitch(ann))
    result = evaluation.overall_ap(preds, golds)
    print(
        f"snt_exact\t{result.snt_exact:.6f}\n"
        f"mora_accuracy\t{result.mora_accuracy:.6f}\n"
        f"excluded\t{result.excluded}"
    )
    if args.report:
        Path(args.report).write_text(
            f"snt_exact\tall\t0\t{result.snt_exact:.6f}\n"
            f"mora_accuracy\tall\t0\t{result.mora_accuracy:.6f}\n",
            encoding="utf-8",
        )
    return 0


def _drop_uncovered(args: argparse.Namespace, corpus):
    embedding_file = getattr(args, "_embedding_file", None)
    if embedding_file is None:
        return corpus
    corpus, dropped = filter_to_embeddings(corpus, embedding_file)
    if dropped:
        log.info(
            "excluded %d sentences without embeddings: %s",
            len(dropped), " ".join(dropped),
        )
    return corpus


def _assets_for_model(args: argparse.Namespace, tm: TaskModel) -> TaskAssets:
    local = argparse.Namespace(**vars(args))
    local.implicit = tm.config.implicit
    return _load_assets(local)


def cmd_pipeline(args: argparse.Namespace) -> int:
    _require(args, "lexicon")
    lexicon = Lexicon.load(args.lexicon)
    conn = ConnectionMatrix.load(args.conn) if args.conn else None
    rules = SandhiRuleTable.load(args.rules) if args.rules else None
    exceptions = (
        load_pos_pair_exceptions(args.exceptions) if args.exceptions else frozenset()
    )

    def load_head(path):
        if not path:
            return None, None
        tm = TaskModel.load(path)
        assets = _assets_for_model(args, tm)
        return tm, assets.provider

    pd_tm, pd_prov = load_head(args.pd_model)
    apbp_tm, apbp_prov = load_head(args.apbp_model)
    anpp_tm, anpp_prov = load_head(args.anpp_model)
    ngram = NgramCounts.load(args.ngrams) if args.ngrams else None
    pipe = Pipeline(
        lexicon=lexicon,
        conn=conn,
        pd=pd_tm,
        apbp=apbp_tm,
        anpp=anpp_tm,
        rule_table=rules,
        ngram=ngram,
        pd_provider=pd_prov,
        apbp_provider=apbp_prov,
        anpp_provider=anpp_prov,
        compound_exceptions=frozenset(exceptions),
    )

    gold_by_text = {}
    if args.gold_corpus:
        for ann in load_corpus(args.gold_corpus):
            gold_by_text[ann.sentence.raw] = ann

    texts = (
        Path(args.input).read_text(encoding="utf-8").splitlines()
        if args.input
        else [args.text or ""]
    )
    for text in texts:
        if not text.strip():
            continue
        kwargs = {}
        ann = gold_by_text.get(text)
        if ann is not None:
            kwargs["sentence"] = ann.sentence
            if args.gold_boundaries:
                kwargs["gold_boundaries"] = ann.boundaries
            if args.gold_nuclei:
                kwargs["gold_nucleus_labels"] = ann.nucleus_labels
            if args.gold_pronunciations:
                kwargs["gold_pronunciations"] = [
                    m.pronunciation for m in ann.sentence.morphemes
                ]
        elif args.gold_boundaries or args.gold_nuclei or args.gold_pronunciations:
            raise UsageError(
                f"gold bypass requested but {text!r} is not in --gold-corpus"
            )
        result = pipe.run(text, **kwargs)
        surfaces = " ".join(m.surface for m in result.sentence.morphemes)
        prons = " ".join(result.pronunciations)
        phrase_str = " ".join(
            f"[{p.start}:{p.end} n={p.nucleus}]" for p in result.phrases
        )
        print(f"text\t{text}")
        print(f"tokens\t{surfaces}")
        print(f"pronunciation\t{prons}")
        print(f"phrases\t{phrase_str}")
        print(f"pitch\t{''.join(result.pitch.labels)}")
        print()
    return 0


def cmd_build_ngrams(args: argparse.Namespace) -> int:
    _require(args, "corpus", "lexicon", "out")
    lexicon = Lexicon.load(args.lexicon)
    conn = ConnectionMatrix.load(args.conn) if args.conn else None
    from .lexicon import tokenize

    counts = build_ngram_counts(args.corpus, lambda t: tokenize(t, lexicon, conn))
    counts.save(args.out)
    print(f"{len(counts.unigrams)} unigrams, {len(counts.bigrams)} bigrams")
    return 0


def cmd_train_charlm(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out")
    seed = args.seeds[0] if args.seeds else 0
    config = CharLmConfig(
        embed_dim=args.embed_dim,
        hidden=args.hidden,
        epochs=args.max_epochs or 20,
        lr=args.lr,
        seed=seed,
    )
    model, history = train_charlm(args.corpus, config)
    save_charlm(model, args.out)
    print(
        f"initial loss {history.initial_loss:.4f} final {history.final_loss:.4f}"
    )
    if history.final_loss >= history.initial_loss:
        log.warning("character LM loss did not decrease")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jtfe",
        description="Japanese TTS front-end: tokenization, polyphone "
        "disambiguation, and pitch accent prediction.",
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--lexicon")
        p.add_argument("--conn")
        p.add_argument("--rules")
        p.add_argument("--exceptions")
        p.add_argument("--ngrams")
        p.add_argument("--embeddings")
        p.add_argument("--charlm")
        p.add_argument("--seeds", type=_int_list)
        p.add_argument("--report")

    p = sub.add_parser("tokenize", help="lattice tokenization")
    common(p)
    p.add_argument("--text")
    p.add_argument("--input")
    p.add_argument("--nbest", type=int, default=1)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("train", help="train a task head")
    common(p)
    p.add_argument("--task", choices=["pd", "apbp", "anpp"])
    p.add_argument("--train-corpus", dest="train_corpus")
    p.add_argument("--val-corpus", dest="val_corpus")
    p.add_argument("--out")
    p.add_argument("--implicit", choices=["none", "file", "charlm"])
    p.add_argument("--ef7", action="store_true")
    p.add_argument("--embed-dim", type=int, default=8)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--patience", type=int, default=4)
    p.add_argument("--stop-lr", type=float, default=1e-4)
    p.add_argument("--max-epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="run a trained head over a corpus")
    common(p)
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score a head or the overall pipeline")
    common(p)
    p.add_argument("--task", choices=["pd", "apbp", "anpp", "overall"])
    p.add_argument("--corpus")
    p.add_argument("--model")
    p.add_argument("--apbp-model", dest="apbp_model")
    p.add_argument("--anpp-model", dest="anpp_model")
    p.add_argument("--gold-boundaries", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="text to pitch labels end to end")
    common(p)
    p.add_argument("--text")
    p.add_argument("--input")
    p.add_argument("--pd-model", dest="pd_model")
    p.add_argument("--apbp-model", dest="apbp_model")
    p.add_argument("--anpp-model", dest="anpp_model")
    p.add_argument("--gold-corpus", dest="gold_corpus")
    p.add_argument("--gold-boundaries", action="store_true")
    p.add_argument("--gold-nuclei", action="store_true")
    p.add_argument("--gold-pronunciations", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("build-ngrams", help="count unigrams/bigrams")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_ngrams)

    p = sub.add_parser("train-charlm", help="train the character LM provider")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--max-epochs", type=int)
    p.set_defaults(func=cmd_train_charlm)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_overrides(args)
        _check_paths(args)
        _log_run(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (JtfeError, ValueError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
