"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .autodiff import ContractError, DimensionError
from .config import DESK, ConfigError, TrainConfig, model_config_for
from .models import CheckpointError, FopaModel, SopaModel, TransferError, load_model, save_model
from .scene import DataError, InputError, Placement, compose, generate_corpus, load_corpus, save_corpus
from .scene.netpbm import NetpbmError, write_heatmap, write_image
from .training import EpochLog, NumericError, TrainingError, train_fopa, train_sopa

log = logging.getLogger("fopa")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _on_off(v: str) -> bool:
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on or off, got {v!r}")
    return v == "on"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fopa", description="Dense object placement scoring on a synthetic scene corpus.")
    p.add_argument("--version", action="version", version=f"fopa {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate a synthetic corpus directory")
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--n-bg", type=int, default=16)
    g.add_argument("--n-fg", type=int, default=16)
    g.add_argument("--scales", type=int, default=2, help="scales per foreground/background combination")

    def train_common(sp):
        sp.add_argument("--data", type=Path, required=True)
        sp.add_argument("--out", type=Path, required=True)
        sp.add_argument("--epochs", type=int, default=20)
        sp.add_argument("--lr", type=float, default=0.0005)
        sp.add_argument("--lr-period", type=int, default=2, help="epochs between learning-rate halvings")
        sp.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
        sp.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train-sopa", help="train the per-composite classifier")
    train_common(t)

    t = sub.add_parser("train-fopa", help="train the dense assessor from a trained SOPA checkpoint")
    train_common(t)
    t.add_argument("--sopa", type=Path, help="SOPA checkpoint (needed for transfer or mimicking)")
    t.add_argument("--lambda", dest="lam", type=float, default=16.0)
    t.add_argument("--freeze-encoder", type=_on_off, default=True, metavar="on|off")
    t.add_argument("--transfer", type=_on_off, default=True, metavar="on|off")
    t.add_argument("--fusion", choices=("dynamic", "concat"), default="dynamic")
    t.add_argument("--scales", type=int, choices=(1, 2), default=2)
    t.add_argument("--mimic", type=_on_off, default=True, metavar="on|off")
    t.add_argument("--onehot-bins", type=int, choices=(0, 8, 16, 32), default=0)

    e = sub.add_parser("eval", help="F1 and bAcc on annotated pixels")
    e.add_argument("--model", type=Path, required=True)
    e.add_argument("--data", type=Path, required=True)
    e.add_argument("--split", choices=("train", "test"), default="test")
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--out", type=Path)

    b = sub.add_parser("bench", help="time enumeration against dense scoring")
    b.add_argument("--sopa", type=Path, required=True)
    b.add_argument("--fopa", type=Path, required=True)
    b.add_argument("--data", type=Path, required=True)
    b.add_argument("--pair", help="pair id to time on (default: first test pair)")
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--warmup", type=int, default=3)
    b.add_argument("--skip-enumeration", action="store_true", help="do not time a full enumeration map")
    b.add_argument("--no-scores", action="store_true", help="leave F1/bAcc out of the table")
    b.add_argument("--out", type=Path)

    h = sub.add_parser("heatmap", help="write a pair's score map as PGM (and PNG)")
    h.add_argument("--model", type=Path, required=True)
    h.add_argument("--data", type=Path, required=True)
    h.add_argument("--pair", required=True)
    h.add_argument("--out", type=Path, required=True)

    c = sub.add_parser("compose", help="write a composite at a location or at the best/worst score")
    c.add_argument("--data", type=Path, required=True)
    c.add_argument("--pair", required=True)
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--x", type=int)
    c.add_argument("--y", type=int)
    c.add_argument("--pick", choices=("best", "worst"))
    c.add_argument("--model", type=Path, help="model used to score locations for --pick")
    return p


def write_run_cfg(out: Path, args: argparse.Namespace) -> None:
    out.mkdir(parents=True, exist_ok=True)
    items = {"version": __version__}
    items.update({k: v for k, v in sorted(vars(args).items()) if k != "verbose"})
    (out / "run.cfg").write_text("".join(f"{k}={v}\n" for k, v in items.items()), encoding="utf-8")


def _model_size(corpus) -> int:
    return corpus.spec.image_size


def _score_map(model, bg, fg, scale):
    from .evaluation import fopa_map, sopa_enumerate_map

    if isinstance(model, SopaModel):
        return sopa_enumerate_map(bg, fg, scale, model)
    return fopa_map(model, bg, fg, scale)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    corpus = generate_corpus(args.seed, args.n_bg, args.n_fg, args.scales)
    save_corpus(corpus, args.out)
    write_run_cfg(args.out, args)
    print(f"train_pairs\t{len(corpus.train)}\ntest_pairs\t{len(corpus.test)}")
    return EXIT_OK


def _train_config(args, **extra) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        lr_halving_period_epochs=args.lr_period,
        batch_size=args.batch_size,
        seed=args.seed,
        **extra,
    )


def cmd_train_sopa(args) -> int:
    corpus = load_corpus(args.data)
    cfg = _train_config(args)
    write_run_cfg(args.out, args)
    with open(args.out / "train.log", "w", encoding="utf-8") as fh:
        model = train_sopa(corpus, cfg, DESK.with_(size=_model_size(corpus)), EpochLog(sys.stdout, fh))
    save_model(model, args.out / "sopa.ckpt")
    return EXIT_OK


def cmd_train_fopa(args) -> int:
    corpus = load_corpus(args.data)
    cfg = _train_config(
        args,
        lambda_mimic=args.lam,
        freeze_encoder=args.freeze_encoder,
        mimic_enabled=args.mimic,
        fusion_mode=args.fusion,
        n_scales=args.scales,
        onehot_bins=args.onehot_bins,
        transfer=args.transfer,
    )
    sopa = None
    if args.sopa is not None:
        sopa = load_model(args.sopa)
        if not isinstance(sopa, SopaModel):
            raise UsageError(f"{args.sopa} is not a SOPA checkpoint")
    elif cfg.transfer or cfg.effective_lambda > 0:
        raise UsageError("--sopa is required unless both --transfer off and --mimic off (or --lambda 0)")
    write_run_cfg(args.out, args)
    model_cfg = model_config_for(cfg, DESK.with_(size=_model_size(corpus)))
    with open(args.out / "train.log", "w", encoding="utf-8") as fh:
        model = train_fopa(corpus, sopa, cfg, model_cfg, EpochLog(sys.stdout, fh))
    save_model(model, args.out / "fopa.ckpt")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import evaluate

    model = load_model(args.model)
    corpus = load_corpus(args.data)
    f1, bacc = evaluate(model, corpus, args.split, args.threshold)
    name = "SOPA" if isinstance(model, SopaModel) else "FOPA"
    text = f"Method\tF1\tbAcc\n{name}\t{f1:.3f}\t{bacc:.3f}\n"
    sys.stdout.write(text)
    if args.out is not None:
        write_run_cfg(args.out, args)
        (args.out / "eval.tsv").write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .evaluation import benchmark, evaluate
    from .evaluation.bench import enumeration_agreement, speedup
    from .evaluation.report import key_values, table_rows
    from .plotting import save_bench_figure

    sopa, fopa = load_model(args.sopa), load_model(args.fopa)
    if not isinstance(sopa, SopaModel) or not isinstance(fopa, FopaModel):
        raise UsageError("--sopa must be a SOPA checkpoint and --fopa a FOPA checkpoint")
    corpus = load_corpus(args.data)
    pair = corpus.pair(args.pair) if args.pair else corpus.test[0]
    bg, fg = corpus.backgrounds[pair.bg_id], corpus.foregrounds[pair.fg_id]
    reports = list(
        benchmark(sopa, fopa, bg, fg, pair.scale, args.reps, args.warmup, not args.skip_enumeration)
    )
    scores = None if args.no_scores else {"SOPA": evaluate(sopa, corpus), "FOPA": evaluate(fopa, corpus)}
    lines = table_rows(reports, scores)
    sys.stdout.write("\n".join(lines) + "\n")
    extra = {
        "pair": pair.pair_id,
        "speedup_computed": speedup(reports[0], reports[1], measured=False),
        "speedup_measured": speedup(reports[0], reports[1]) if not args.skip_enumeration else "nan",
        "enumeration_time_gap": enumeration_agreement(reports[0]),
    }
    kv = key_values(reports, extra)
    sys.stdout.write("\n".join("# " + line for line in kv[-4:]) + "\n")
    if args.out is not None:
        write_run_cfg(args.out, args)
        (args.out / "bench.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (args.out / "bench.kv").write_text("\n".join(kv) + "\n", encoding="utf-8")
        save_bench_figure(args.out / "bench.png", reports)
    return EXIT_OK


def cmd_heatmap(args) -> int:
    from .evaluation import select_composites
    from .plotting import save_heatmap

    model = load_model(args.model)
    corpus = load_corpus(args.data)
    pair = corpus.pair(args.pair)
    bg, fg = corpus.backgrounds[pair.bg_id], corpus.foregrounds[pair.fg_id]
    scores = _score_map(model, bg, fg, pair.scale)
    best, worst = select_composites(scores, bg, fg, pair.scale)
    write_run_cfg(args.out, args)
    write_heatmap(args.out / "heatmap.pgm", scores)
    np.save(args.out / "scores.npy", scores)
    save_heatmap(args.out / "heatmap.png", bg.pixels, scores, (best.x, best.y), (worst.x, worst.y), pair.pair_id)
    print(f"best\t{best.x}\t{best.y}\t{best.score:.6f}\nworst\t{worst.x}\t{worst.y}\t{worst.score:.6f}")
    return EXIT_OK


def cmd_compose(args) -> int:
    from .evaluation import select_composites

    corpus = load_corpus(args.data)
    pair = corpus.pair(args.pair)
    bg, fg = corpus.backgrounds[pair.bg_id], corpus.foregrounds[pair.fg_id]
    if args.pick is not None:
        if args.model is None or args.x is not None or args.y is not None:
            raise UsageError("--pick needs --model and excludes --x/--y")
        scores = _score_map(load_model(args.model), bg, fg, pair.scale)
        best, worst = select_composites(scores, bg, fg, pair.scale)
        chosen = best if args.pick == "best" else worst
        x, y, rgb, mask = chosen.x, chosen.y, chosen.rgb, chosen.mask
    else:
        if args.x is None or args.y is None:
            raise UsageError("compose needs --x and --y, or --pick best|worst")
        if not (0 <= args.x < bg.width and 0 <= args.y < bg.height):
            raise UsageError(f"location ({args.x}, {args.y}) is outside the {bg.width}×{bg.height} grid")
        x, y = args.x, args.y
        rgb, mask = compose(bg, fg, Placement(pair.scale, x, y))
    write_run_cfg(args.out, args)
    write_image(args.out / "composite.ppm", rgb)
    write_image(args.out / "composite_mask.pgm", (mask * 255).astype(np.uint8))
    print(f"location\t{x}\t{y}")
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-sopa": cmd_train_sopa,
    "train-fopa": cmd_train_fopa,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "heatmap": cmd_heatmap,
    "compose": cmd_compose,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return COMMANDS[args.command](args)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except (UsageError, ConfigError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (
        DataError,
        InputError,
        NetpbmError,
        CheckpointError,
        TransferError,
        TrainingError,
        DimensionError,
        ContractError,
        FileNotFoundError,
        NotADirectoryError,
        KeyError,
    ) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
