"""Command-line entry point for training toy quadratic-activation models.

Exit codes: 0 success, 1 training diverged, 2 bad usage/config, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .train import ConfigError, DivergenceError, TrainConfig, train_toy_model

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _parse_widths(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"widths must be a comma-separated list of integers; got {text!r}"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safetynets-train",
        description="Train a small quadratic-activation network and export it "
        "as a float-model JSON file.",
    )
    parser.add_argument(
        "--dataset",
        default="digits",
        choices=("digits", "blobs"),
        help="bundled dataset to train on (default: digits)",
    )
    parser.add_argument(
        "--widths",
        type=_parse_widths,
        default=None,
        help="full layer chain, e.g. 64,32,10 (default depends on dataset)",
    )
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument(
        "--lr", type=float, default=0.01, dest="learning_rate", help="learning rate"
    )
    parser.add_argument(
        "--clip", type=float, default=1.0, dest="clip_norm", help="global grad-norm cap"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--samples-per-class", type=int, default=100, dest="samples_per_class"
    )
    parser.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    parser.add_argument(
        "--weight-range",
        type=float,
        default=8.0,
        dest="weight_range",
        help="rescale exported layers to this max |weight| "
        "(argmax-preserving; 0 exports raw weights)",
    )
    parser.add_argument(
        "--out", required=True, help="path for the exported float-model JSON"
    )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress per-epoch progress lines"
    )
    return parser


def _default_widths(dataset: str) -> tuple[int, ...]:
    return (64, 32, 10) if dataset == "digits" else (2, 8, 2)


def run_cli(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 on --help; preserve both.
        return int(exc.code or 0)

    widths = args.widths if args.widths is not None else _default_widths(args.dataset)
    cfg = TrainConfig(
        dataset=args.dataset,
        widths=widths,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        clip_norm=args.clip_norm,
        seed=args.seed,
        out_path=args.out,
        samples_per_class=args.samples_per_class,
        batch_size=args.batch_size,
        weight_range=args.weight_range if args.weight_range > 0 else None,
    )
    try:
        _, metrics = train_toy_model(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    if not args.quiet:
        for m in metrics:
            print(
                f"epoch {m.epoch:3d}: loss {m.loss:.4f}  "
                f"train {m.train_accuracy * 100:.1f}%  "
                f"val {m.val_accuracy * 100:.1f}%  "
                f"grad norm {m.grad_norm_max:.3f}"
            )
    last = metrics[-1]
    print(
        f"trained {args.dataset} model {'-'.join(str(w) for w in cfg.widths)}: "
        f"train {last.train_accuracy * 100:.1f}%  val {last.val_accuracy * 100:.1f}%"
    )
    print(f"exported model to {args.out}")
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
