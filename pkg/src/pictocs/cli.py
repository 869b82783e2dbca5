"""Command-line entry points for the whole pipeline.

Subcommands: generate-corpus, train, encode-board, predict, eval, serve.
Exit codes: 0 success, 1 operational failure (diagnostic on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import checkpoint as ckpt_io
from . import evaluation, pipeline
from .board import board_from_grammar, load_board, sample_board, save_board
from .corpus import (
    default_grammar,
    generate_corpus,
    load_corpus,
    load_grammar,
    save_corpus,
)
from .prediction import (
    Query,
    build_decoder,
    load_decoder,
    predict_cards,
    prediction_items,
    save_decoder,
)
from .roles import Role
from .tokenizer import save_vocab
from .training import TrainConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picto",
        description="Communication-card prediction with role-tagged sentences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-corpus", help="sample a train/test corpus")
    p.add_argument("--grammar", default="default", help="grammar file or 'default'")
    p.add_argument("--train", type=int, default=2000, dest="n_train")
    p.add_argument("--test", type=int, default=200, dest="n_test")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-train", default="corpus.train")
    p.add_argument("--out-test", default="corpus.test")

    p = sub.add_parser("train", help="train a model on a corpus file")
    p.add_argument("--corpus", required=True, help="training corpus (JSON lines)")
    p.add_argument("--mode", choices=["cs", "flat"], required=True)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")
    p.add_argument("--vocab-size", type=int, default=pipeline.DEFAULT_VOCAB_SIZE)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--ff", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--vocab-out", help="also write the vocabulary as a text file")

    p = sub.add_parser("encode-board", help="build a card decoder from a board")
    p.add_argument("--model", required=True)
    p.add_argument("--board", required=True, help="board file or 'sample'")
    p.add_argument("--out", required=True, help="decoder output path")

    p = sub.add_parser("predict", help="rank cards for a masked slot")
    p.add_argument("--model", required=True)
    p.add_argument("--board", required=True, help="board file or 'sample'")
    p.add_argument("--decoder", help="reuse a decoder built by encode-board")
    p.add_argument("--mode", choices=["cs", "flat"])
    p.add_argument(
        "--slot",
        action="append",
        default=[],
        metavar="ROLE=TEXT",
        help="filled slot, repeatable (cs mode)",
    )
    p.add_argument("--mask", help="role to predict (cs mode)")
    p.add_argument("--prefix", default="", help="context words (flat mode)")
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--json", action="store_true", help="print the ranking as JSON")

    p = sub.add_parser("eval", help="compare two models on a test corpus")
    p.add_argument("--model-cs", required=True)
    p.add_argument("--model-flat", required=True)
    p.add_argument("--test", required=True, help="test corpus (JSON lines)")
    p.add_argument("--board", required=True, help="board file or 'sample'")
    p.add_argument("--k", default="1,9,18,25,36", help="comma-separated K list")
    p.add_argument("--report-json", help="write the full report as JSON")
    p.add_argument("--dump-rankings", help="write per-case top-K rankings")

    p = sub.add_parser("serve", help="serve board and prediction endpoints")
    p.add_argument("--model", required=True)
    p.add_argument("--board", required=True, help="board file or 'sample'")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--mode", choices=["cs", "flat"], default="cs")
    p.add_argument("--k", type=int, default=12, help="default prediction size")
    p.add_argument("--assets", help="static directory for the UI bundle")

    p = sub.add_parser("export-board", help="write a board derived from a grammar")
    p.add_argument("--grammar", default="default")
    p.add_argument("--name", default="sample")
    p.add_argument("--out", required=True)
    return parser


def _load_grammar_arg(arg: str):
    return default_grammar() if arg == "default" else load_grammar(arg)


def _load_board_arg(arg: str):
    return sample_board() if arg == "sample" else load_board(arg)


def _cmd_generate_corpus(args) -> int:
    grammar = _load_grammar_arg(args.grammar)
    split = generate_corpus(grammar, args.n_train, args.n_test, args.seed)
    save_corpus(split.train, args.out_train)
    save_corpus(split.test, args.out_test)
    print(
        f"wrote {len(split.train)} train -> {args.out_train}, "
        f"{len(split.test)} test -> {args.out_test}"
    )
    return 0


def _cmd_train(args) -> int:
    sentences = load_corpus(args.corpus)
    if args.preset == "paper":
        config = TrainConfig.paper_recipe(seed=args.seed)
    else:
        config = TrainConfig.desk(seed=args.seed)
    overrides = {}
    for field_name, value in (
        ("epochs", args.epochs),
        ("learning_rate", args.lr),
        ("batch_size", args.batch_size),
    ):
        if value is not None:
            overrides[field_name] = value
    if overrides:
        import dataclasses

        config = dataclasses.replace(config, **overrides)
    model_overrides = {}
    for field_name, value in (
        ("hidden", args.hidden),
        ("n_layers", args.layers),
        ("n_heads", args.heads),
        ("ff_size", args.ff),
        ("dropout", args.dropout),
    ):
        if value is not None:
            model_overrides[field_name] = value
    from .corpus import CorpusSplit

    split = CorpusSplit(train=sentences, test=[])
    ckpt, trace = pipeline.train_from_split(
        split,
        args.mode,
        seed=args.seed,
        vocab_size=args.vocab_size,
        model_overrides=model_overrides or None,
        train_config=config,
    )
    ckpt_io.save_checkpoint(ckpt, args.out)
    if args.vocab_out:
        save_vocab(ckpt.vocab, args.vocab_out)
    print(
        f"trained {args.mode} model: final loss {trace[-1]:.4f}, "
        f"fingerprint {ckpt_io.fingerprint(ckpt)} -> {args.out}"
    )
    return 0


def _cmd_encode_board(args) -> int:
    ckpt = ckpt_io.load_checkpoint(args.model)
    board = _load_board_arg(args.board)
    decoder = build_decoder(board, ckpt)
    save_decoder(decoder, args.out)
    print(
        f"encoded {len(board.cards)} cards ({decoder.matrix.shape[0]}x"
        f"{decoder.matrix.shape[1]}) -> {args.out}"
    )
    return 0


def _parse_slots(pairs: list[str]) -> dict[Role, str]:
    filled = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--slot expects ROLE=TEXT, got {pair!r}")
        role_name, text = pair.split("=", 1)
        filled[Role.from_name(role_name)] = text.strip()
    return filled


def _cmd_predict(args) -> int:
    ckpt = ckpt_io.load_checkpoint(args.model)
    board = _load_board_arg(args.board)
    decoder = (
        load_decoder(args.decoder) if args.decoder else build_decoder(board, ckpt)
    )
    mode = args.mode or ckpt.meta.get("mode") or "cs"
    if mode == "cs":
        if not args.mask:
            raise ValueError("cs mode needs --mask ROLE")
        query = Query(
            mode="cs",
            filled=_parse_slots(args.slot),
            mask_role=Role.from_name(args.mask),
            k=args.k,
        )
    else:
        query = Query(mode="flat", prefix=args.prefix, k=args.k)
    prediction = predict_cards(query, ckpt, decoder)
    items = prediction_items(prediction, board)
    if args.json:
        print(json.dumps(items, ensure_ascii=False))
    else:
        for i, item in enumerate(items, 1):
            role = item["role"] or "-"
            print(f"{i:3d}. {item['caption']:<24} {item['prob']:.4f}  {role}")
    return 0


def _cmd_eval(args) -> int:
    ckpt_cs = ckpt_io.load_checkpoint(args.model_cs)
    ckpt_flat = ckpt_io.load_checkpoint(args.model_flat)
    sentences = load_corpus(args.test)
    board = _load_board_arg(args.board)
    k_list = [int(x) for x in args.k.split(",") if x]
    report = evaluation.compare(ckpt_cs, ckpt_flat, sentences, board, k_list)
    print(evaluation.render_tables(report))
    if args.report_json:
        Path(args.report_json).write_text(
            json.dumps(evaluation.report_to_dict(report), ensure_ascii=False, indent=2)
            + "\n",
            encoding="utf-8",
        )
    if args.dump_rankings:
        mode = ckpt_cs.meta.get("mode", "cs")
        cases, _ = evaluation.build_eval_cases(sentences, board, mode)
        decoder = build_decoder(board, ckpt_cs)
        results = evaluation.evaluate_cases(ckpt_cs, decoder, cases)
        evaluation.dump_rankings(args.dump_rankings, cases, results, max(k_list))
    return 0


def _cmd_serve(args) -> int:
    from .server import ServiceConfig, serve_forever

    port = int(os.environ.get("PICTO_PORT", args.port))
    config = ServiceConfig(
        host=args.host,
        port=port,
        checkpoint_path=args.model,
        board_path=args.board,
        mode=args.mode,
        default_k=args.k,
        assets_dir=args.assets,
    )
    serve_forever(config)
    return 0


def _cmd_export_board(args) -> int:
    grammar = _load_grammar_arg(args.grammar)
    board = board_from_grammar(grammar, name=args.name)
    save_board(board, args.out)
    print(f"wrote board with {len(board.cards)} cards -> {args.out}")
    return 0


_HANDLERS = {
    "generate-corpus": _cmd_generate_corpus,
    "train": _cmd_train,
    "encode-board": _cmd_encode_board,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "export-board": _cmd_export_board,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # operational failures -> exit 1 with diagnostic
        print(f"picto {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
