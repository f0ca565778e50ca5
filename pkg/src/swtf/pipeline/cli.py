"""Command-line interface.

Subcommands: synth (generate a dataset), train, eval, fuse (visualization
dump), gradcheck (backward certification), bench (sparse-vs-dense cost).
"""

from __future__ import annotations

import argparse
import json
import sys

from ..dataio.synth import SynthSpec, synth_generate
from .bench import bench, format_table, write_json
from .config import ConfigError, RunConfig, dataclass_from_dict, load_config
from .dumps import fuse_dump
from .gradcheck import format_report, run_gradcheck
from .train import evaluate, train


def _parse_resolutions(text: str) -> list[tuple[int, int]]:
    out = []
    for token in text.split(","):
        h, sep, w = token.strip().partition("x")
        if not sep or not h.isdigit() or not w.isdigit():
            raise ConfigError(f"bad resolution {token!r}; expected e.g. 64x64")
        out.append((int(h), int(w)))
    return out


def _load_or_default(path: str | None) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swtf",
        description="Sparse weighted temporal fusion: training and tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic motion dataset")
    p.add_argument("--spec", help="JSON file of generator parameters")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--resume", help="checkpoint to continue from")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test")

    p = sub.add_parser("fuse", help="dump fusion map and fused frames as PPMs")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--snippet", required=True, help="snippet directory")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gradcheck", help="finite-difference backward checks")
    p.add_argument("--scope", default="all", help="one check name, or 'all'")

    p = sub.add_parser("bench", help="sparse vs dense flow cost")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--resolutions", default="64x64,128x128")
    p.add_argument("--json-out", help="also write rows as JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            if args.spec:
                with open(args.spec, encoding="utf-8") as f:
                    spec = dataclass_from_dict(SynthSpec, json.load(f), "synth spec")
            else:
                spec = SynthSpec()
            root = synth_generate(spec, seed=args.seed, out_dir=args.out)
            print(f"dataset written to {root}")
            return 0

        if args.command == "train":
            config = _load_or_default(args.config)
            result = train(config, resume=args.resume)
            print(f"checkpoint: {result.last_checkpoint}")
            if result.best_checkpoint is not None:
                print(
                    f"best checkpoint: {result.best_checkpoint} "
                    f"(test_acc={result.best_test_accuracy:.4f})"
                )
            return 0

        if args.command == "eval":
            report = evaluate(args.checkpoint, split=args.split)
            print(f"accuracy: {report.accuracy:.4f}")
            print(
                "per-class accuracy: "
                + " ".join(f"{a:.4f}" for a in report.per_class_accuracy)
            )
            print("confusion (rows true, cols predicted):")
            for row in report.confusion:
                print("  " + " ".join(f"{int(n):4d}" for n in row))
            return 0

        if args.command == "fuse":
            config = _load_or_default(args.config)
            out = fuse_dump(config, args.snippet, args.out)
            print(f"wrote {out}/xF.ppm and fused frames")
            return 0

        if args.command == "gradcheck":
            results = run_gradcheck(args.scope)
            print(format_report(results))
            return 0 if all(r.passed for r in results) else 1

        if args.command == "bench":
            config = _load_or_default(args.config)
            rows = bench(config, _parse_resolutions(args.resolutions))
            print(format_table(rows))
            if args.json_out:
                write_json(rows, args.json_out)
            return 0
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
