"""Command-line entry points: train, sample, eval, serve, synth."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .diagnostics import (
    DivergenceKind,
    divergence_trace,
    enforcement_rate,
    oracle_constrained_distribution,
    ratio_report,
)
from .encoding import parse_corpus, serialize_corpus
from .errors import AnticipationRnnError, GuardError
from .model import ModelConfig
from .sampler import ConstraintSet, generate, parse_constraint_pairs
from .synthetic import default_chain, tiny_chain
from .trainer import TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GUARD = 3

_KINDS = {k.value: k for k in DivergenceKind}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anticipation-rnn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-policy", default="uniform", choices=("uniform", "none", "all"))
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--embed", type=int, default=20)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--augment", action="store_true", help="add in-range transpositions")

    p = sub.add_parser("sample", help="generate one sequence from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--constraints", default="", help='e.g. "1:D4,9:G4" (1-based positions)')
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", default="learned", choices=("learned", "clamped"))

    p = sub.add_parser("eval", help="diagnostics over a checkpoint")
    esub = p.add_subparsers(dest="eval_command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--checkpoint", required=True)
    common.add_argument("--constraints", default="")
    common.add_argument("--length", type=int, default=32)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="report file path")

    e = esub.add_parser("enforce", parents=[common], help="constraint satisfaction rate")
    e.add_argument("--samples", type=int, default=1000)
    e.add_argument("--mode", default="learned", choices=("learned", "clamped"))

    e = esub.add_parser("ratio", parents=[common], help="log-log proportionality regression")
    e.add_argument("--samples", type=int, default=2000)
    e.add_argument("--plot", default=None, help="write a scatter plot image")

    e = esub.add_parser("trace", parents=[common], help="per-step divergence trace")
    e.add_argument("--kind", default="reversed-kl", choices=sorted(_KINDS))
    e.add_argument("--sequence", default=None, help="token line; sampled if omitted")
    e.add_argument("--plot", default=None, help="write a trace plot image")

    e = esub.add_parser("oracle", parents=[common], help="exact enumeration oracle")
    e.add_argument("--alphabet", default=None, help="comma-separated token surfaces to enumerate")
    e.add_argument("--end-padded", action="store_true", help="fix the final position to END")

    p = sub.add_parser("serve", help="HTTP service over one checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="directory of UI assets served at /")

    p = sub.add_parser("synth", help="write a synthetic Markov-chain corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--sequences", type=int, default=2000)
    p.add_argument("--notes", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chain", default="default", choices=("default", "tiny"))

    return parser


def _write_report(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_train(args) -> int:
    corpus_path = Path(args.corpus)
    if not corpus_path.exists():
        print(f"error: corpus file {corpus_path} does not exist", file=sys.stderr)
        print("usage: anticipation-rnn train --corpus PATH --out PATH [options]", file=sys.stderr)
        return EXIT_USAGE
    corpus = parse_corpus(corpus_path.read_text(encoding="utf-8"), name=corpus_path.stem)
    model_cfg = ModelConfig(
        vocab_size=5,  # replaced by the trainer with the real vocabulary size
        token_embed_dim=args.embed,
        constraint_embed_dim=args.embed,
        constraint_hidden=args.hidden,
        token_hidden=args.hidden,
        dropout=args.dropout,
    )
    train_cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        window=args.window,
        mask_policy=args.mask_policy,
        learning_rate=args.lr,
        validation_fraction=args.val_fraction,
        seed=args.seed,
        augment_corpus=args.augment,
        checkpoint_path=args.out,
    )
    model, report = train(corpus, model_cfg, train_cfg)
    report_path = Path(args.out).with_suffix(Path(args.out).suffix + ".report.txt")
    report_path.write_text(report.to_text(), encoding="utf-8")
    if report.epochs:
        last = report.epochs[-1]
        print(
            f"trained {last.epoch} epochs; best epoch {report.best_epoch}; "
            f"final val_nll {last.val_nll:.6f}; checkpoint {args.out}"
        )
    else:
        print(f"wrote initial checkpoint {args.out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    model = load_checkpoint(args.checkpoint)
    cs = ConstraintSet.of(parse_constraint_pairs(args.constraints), args.length)
    cs.validate_tokens(model.vocab)
    record = generate(
        model, cs, temperature=args.temperature, seed=args.seed, mode=args.mode
    )
    print(record.to_line())
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    cs = ConstraintSet.of(parse_constraint_pairs(args.constraints), args.length)
    cs.validate_tokens(model.vocab)

    if args.eval_command == "enforce":
        rate = enforcement_rate(model, cs, args.samples, seed=args.seed, mode=args.mode)
        _write_report(args.out, f"samples {args.samples}\nrate {rate!r}\n")
        print(f"enforce: rate {rate:.3f} over {args.samples} samples")
        return EXIT_OK

    if args.eval_command == "ratio":
        rep = ratio_report(model, cs, args.samples, seed=args.seed)
        _write_report(args.out, rep.to_text())
        if args.plot:
            _plot_ratio(rep, args.plot)
        print(f"ratio: slope {rep.slope:.3f} intercept {rep.intercept:.3f} over {rep.sample_count} samples")
        return EXIT_OK

    if args.eval_command == "trace":
        if args.sequence:
            ids = np.array([model.vocab.id_of(s) for s in args.sequence.split()], dtype=np.int64)
            if ids.shape[0] != cs.length:
                print("error: sequence length differs from --length", file=sys.stderr)
                return EXIT_USAGE
        else:
            ids = generate(model, cs, seed=args.seed).token_ids
        kind = _KINDS[args.kind]
        values = divergence_trace(model, cs, ids, kind)
        lines = [f"# t sqrt_{args.kind}"] + [f"{t + 1} {v!r}" for t, v in enumerate(values)]
        _write_report(args.out, "\n".join(lines) + "\n")
        if args.plot:
            _plot_trace(values, cs, args.kind, args.plot)
        peak = int(np.argmax(values)) + 1
        print(f"trace: {args.kind} peak {values.max():.4f} at position {peak}")
        return EXIT_OK

    if args.eval_command == "oracle":
        alphabet = args.alphabet.split(",") if args.alphabet else None
        result = oracle_constrained_distribution(
            model, cs, end_padded=args.end_padded, alphabet=alphabet
        )
        top = np.argsort(result.probs)[::-1][:10]
        lines = ["# sequence probability"]
        for k in top:
            if result.probs[k] == 0.0:
                break
            surfaces = " ".join(model.vocab.surface_of(i) for i in result.sequences[k])
            lines.append(f"{surfaces} {result.probs[k]!r}")
        lines.append(f"# alpha {result.alpha!r}")
        _write_report(args.out, "\n".join(lines) + "\n")
        print(f"oracle: alpha {result.alpha:.6f} over {len(result.probs)} sequences")
        return EXIT_OK

    raise AssertionError("unreachable")


def _plot_ratio(rep, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(rep.log_p_unconstrained, rep.log_p_constrained, s=4, alpha=0.4)
    lo = min(rep.log_p_unconstrained.min(), rep.log_p_constrained.min())
    hi = max(rep.log_p_unconstrained.max(), rep.log_p_constrained.max())
    ax.plot([lo, hi], [lo, hi], "b-", label="identity")
    ax.plot(
        [lo, hi],
        [rep.slope * lo + rep.intercept, rep.slope * hi + rep.intercept],
        "g-",
        label=f"fit slope={rep.slope:.3f}",
    )
    ax.set_xlabel("log p unconstrained")
    ax.set_ylabel("log p constrained")
    ax.legend()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def _plot_trace(values, cs, kind: str, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(range(1, len(values) + 1), values, marker="o", ms=3)
    for pos, _ in cs.pairs:
        ax.axvline(pos, color="green", alpha=0.4)
    ax.set_xlabel("t")
    ax.set_ylabel(f"sqrt {kind}")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.checkpoint, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _cmd_synth(args) -> int:
    chain = default_chain() if args.chain == "default" else tiny_chain()
    corpus = chain.sample_corpus(args.sequences, args.notes, args.seed)
    Path(args.out).write_text(serialize_corpus(corpus), encoding="utf-8")
    print(
        f"wrote {len(corpus)} sequences of {chain.tokens_per_sequence(args.notes)} tokens to {args.out}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "synth":
            return _cmd_synth(args)
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (AnticipationRnnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
