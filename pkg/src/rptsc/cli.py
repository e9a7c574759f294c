"""Command-line entry point: encode, train, baseline and inspect runs.

Every flag can also come from a ``--config`` file holding flat ``key = value``
lines (keys match the flag names).  Precedence is CLI flag, then config file,
then built-in default.  Each run writes a manifest.txt with every option
fully resolved, so an output directory documents how to reproduce itself.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Any

from . import __version__
from .baseline import DtwParams, dtw_metric, euclidean_distance, one_nn_error
from .cnn import load_checkpoint, save_checkpoint
from .rp_encode import NORMS, EmbeddingParams, encode_dataset, write_png
from .report import (
    save_kernel_sheet,
    save_kernel_tiles,
    save_learning_curves,
)
from .train import (
    GRID_BATCH_SIZES,
    GRID_EPOCHS,
    TrainConfig,
    default_grid,
    evaluate,
    grid_evaluate,
    select_cell,
    train_model,
)
from .ucr_data import UcrFormatError, load_ucr_file, znormalize


@dataclass(frozen=True)
class Option:
    name: str                 # flag name (no leading dashes) and config key
    kind: str                 # int | optint | float | optfloat | str | flag
    default: Any
    help: str
    choices: tuple[str, ...] | None = None


_EMBED_OPTIONS = (
    Option("m", "int", 3, "embedding dimension"),
    Option("tau", "int", 4, "embedding delay"),
    Option("norm", "str", "l2", "state-distance norm", NORMS),
    Option("invert", "flag", False, "map small distances to white"),
    Option("threshold", "optfloat", None,
           "epsilon for binary recurrence plots (default: gray-level)"),
    Option("znorm", "flag", False, "z-normalize each series first"),
    Option("global-scale", "flag", False,
           "share one gray scale across the whole dataset"),
)

# encode keeps the native plot size unless asked; training must resize to a
# supported network input
ENCODE_OPTIONS = _EMBED_OPTIONS + (
    Option("size", "optint", None, "resize images to this side length"),
)

TRAIN_OPTIONS = _EMBED_OPTIONS + (
    Option("size", "int", 28, "network input side length"),
    Option("batch-size", "int", 20, "mini-batch size"),
    Option("epochs", "int", 250, "training epochs"),
    Option("optimizer", "str", "adam", "parameter update rule", ("sgd", "adam")),
    Option("learning-rate", "float", 1e-3, "optimizer step size"),
    Option("kernel-size", "int", 3, "conv kernel side (odd)"),
    Option("channels", "int", 32, "feature maps per conv stage"),
    Option("hidden", "int", 128, "fully-connected layer width"),
    Option("seed", "int", 0, "run seed"),
    Option("validation-fraction", "float", 0.2,
           "fraction of each class held out for model selection"),
    Option("grid", "flag", False,
           "sweep batch sizes %s x epochs %s before the final run"
           % (set(GRID_BATCH_SIZES), set(GRID_EPOCHS))),
    Option("threads", "optint", None, "worker cap (default: RPTSC_THREADS)"),
)

BASELINE_OPTIONS = (
    Option("metric", "str", "dtw", "distance to evaluate",
           ("euclidean", "dtw", "both")),
    Option("window", "optint", None,
           "Sakoe-Chiba band half-width (default: unconstrained)"),
    Option("znorm", "flag", False, "z-normalize each series first"),
    Option("threads", "optint", None, "worker cap (default: RPTSC_THREADS)"),
)

INSPECT_OPTIONS = (
    Option("scale", "int", 8, "integer upscaling factor for kernel tiles"),
    Option("columns", "int", 8, "contact sheet columns"),
)

_PARSERS = {"int": int, "optint": int, "float": float, "optfloat": float,
            "str": str}


def _dest(option: Option) -> str:
    return option.name.replace("-", "_")


def _add_options(parser: argparse.ArgumentParser, options) -> None:
    for opt in options:
        flag = "--" + opt.name
        if opt.kind == "flag":
            parser.add_argument(flag, dest=_dest(opt), action="store_const",
                                const=True, default=None, help=opt.help)
        else:
            parser.add_argument(flag, dest=_dest(opt), type=_PARSERS[opt.kind],
                                default=None, choices=opt.choices, help=opt.help)


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and '#' comments skipped."""
    values: dict[str, str] = {}
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip()] = value.strip()
    return values


def _parse_value(opt: Option, text: str, where: str) -> Any:
    if opt.kind in ("optint", "optfloat") and text.lower() == "none":
        return None
    if opt.kind == "flag":
        lowered = text.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"{where}: bad boolean {text!r} for {opt.name!r}")
    if opt.kind == "str":
        if opt.choices and text not in opt.choices:
            raise ValueError(
                f"{where}: {opt.name!r} must be one of {opt.choices}, got {text!r}"
            )
        return text
    try:
        return _PARSERS[opt.kind](text)
    except ValueError:
        raise ValueError(
            f"{where}: bad {opt.kind.removeprefix('opt')} {text!r} for {opt.name!r}"
        ) from None


def resolve_options(args, options, config_values: dict[str, str]) -> dict[str, Any]:
    known = {opt.name for opt in options}
    unknown = sorted(set(config_values) - known)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    resolved = {}
    for opt in options:
        from_cli = getattr(args, _dest(opt))
        if from_cli is not None:
            resolved[opt.name] = from_cli
        elif opt.name in config_values:
            resolved[opt.name] = _parse_value(
                opt, config_values[opt.name], args.config or "config"
            )
        else:
            resolved[opt.name] = opt.default
    return resolved


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_manifest(args, options, resolved, inputs) -> str:
    """manifest.txt: the fully resolved run, one key = value per line."""
    lines = [
        f"tool = rptsc {__version__}",
        f"command = {args.command}",
        f"config_file = {args.config or 'none'}",
        f"out = {args.out}",
    ]
    lines += [f"{label} = {path}" for label, path in inputs]
    lines += [f"{opt.name} = {_format_value(resolved[opt.name])}" for opt in options]
    path = os.path.join(args.out, "manifest.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _prepare(args, options, inputs) -> dict[str, Any]:
    config_values = parse_config_file(args.config) if args.config else {}
    resolved = resolve_options(args, options, config_values)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(args, options, resolved, inputs)
    return resolved


def _embedding(opts) -> EmbeddingParams:
    return EmbeddingParams(m=opts["m"], tau=opts["tau"])


def _encode_kwargs(opts) -> dict[str, Any]:
    return dict(
        norm=opts["norm"],
        size=opts["size"],
        invert=opts["invert"],
        epsilon=opts["threshold"],
        znorm=opts["znorm"],
        global_scale=opts["global-scale"],
    )


def cmd_encode(args) -> int:
    opts = _prepare(args, ENCODE_OPTIONS, [("train_file", args.train_file)])
    dataset = load_ucr_file(args.train_file)
    images, _ = encode_dataset(dataset, _embedding(opts), **_encode_kwargs(opts))

    image_dir = os.path.join(args.out, "images")
    os.makedirs(image_dir, exist_ok=True)
    index_lines = ["series,label,path"]
    for i in range(images.shape[0]):
        rel = os.path.join("images", f"series_{i:05d}.png")
        write_png(images[i, 0], os.path.join(args.out, rel))
        index_lines.append(f"{i},{dataset.series[i].raw_label},{rel}")
    with open(os.path.join(args.out, "index.csv"), "w") as fh:
        fh.write("\n".join(index_lines) + "\n")
    print(f"encoded {images.shape[0]} series from {dataset.name!r} to {image_dir}")
    return 0


def _train_config(opts) -> TrainConfig:
    return TrainConfig(
        batch_size=opts["batch-size"],
        epochs=opts["epochs"],
        optimizer=opts["optimizer"],
        learning_rate=opts["learning-rate"],
        input_size=opts["size"],
        kernel_size=opts["kernel-size"],
        channels=opts["channels"],
        hidden=opts["hidden"],
        seed=opts["seed"],
        validation_fraction=opts["validation-fraction"],
        embedding=_embedding(opts),
        norm=opts["norm"],
        invert=opts["invert"],
        znorm=opts["znorm"],
        epsilon=opts["threshold"],
        global_scale=opts["global-scale"],
    )


def _write_grid_csv(cells, path) -> None:
    lines = ["batch_size,epochs,val_error,val_loss,best_epoch,status"]
    for cell in cells:
        if cell.error is None:
            lines.append(
                f"{cell.config.batch_size},{cell.config.epochs},"
                f"{cell.val_error:.6f},{cell.val_loss:.6f},{cell.best_epoch},ok"
            )
        else:
            status = cell.error.replace(",", ";")
            lines.append(
                f"{cell.config.batch_size},{cell.config.epochs},,,0,{status}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_train(args) -> int:
    opts = _prepare(
        args, TRAIN_OPTIONS,
        [("train_file", args.train_file), ("test_file", args.test_file)],
    )
    train_set = load_ucr_file(args.train_file)
    test_set = load_ucr_file(args.test_file)
    config = _train_config(opts)
    threads = opts["threads"]

    if opts["grid"]:
        cells = grid_evaluate(train_set, default_grid(config), threads=threads)
        for cell in cells:
            tag = (f"val_error={cell.val_error:.4f} best_epoch={cell.best_epoch}"
                   if cell.error is None else f"failed: {cell.error}")
            print(f"grid batch={cell.config.batch_size} "
                  f"epochs={cell.config.epochs} {tag}")
        _write_grid_csv(cells, os.path.join(args.out, "grid.csv"))
        config = select_cell(cells).config
        print(f"selected batch={config.batch_size} epochs={config.epochs}")

    net, report = train_model(train_set, config)
    report.test_error = evaluate(net, test_set, config)

    report.to_csv(os.path.join(args.out, "report.csv"))
    save_checkpoint(net, os.path.join(args.out, "model.ckpt"))
    save_learning_curves(report, os.path.join(args.out, "learning_curves.png"))
    image_dir = os.path.join(args.out, "images")
    save_kernel_tiles(net, image_dir, stage=0)
    save_kernel_sheet(net, os.path.join(image_dir, "sheet.png"), stage=0)

    print(f"architecture {net.architecture()}")
    if report.best_epoch:
        print(f"best epoch {report.best_epoch} of {report.epochs_run}")
    print(f"{report.test_error:.4f}")
    return 0


def cmd_baseline(args) -> int:
    opts = _prepare(
        args, BASELINE_OPTIONS,
        [("train_file", args.train_file), ("test_file", args.test_file)],
    )
    train_set = load_ucr_file(args.train_file)
    test_set = load_ucr_file(args.test_file)
    if opts["znorm"]:
        for ds in (train_set, test_set):
            ds.series = [znormalize(ts) for ts in ds.series]

    names = ("euclidean", "dtw") if opts["metric"] == "both" else (opts["metric"],)
    params = DtwParams(window=opts["window"])
    results_path = os.path.join(args.out, "results.csv")
    new_file = not os.path.exists(results_path)
    with open(results_path, "a") as fh:
        if new_file:
            fh.write("dataset,metric,window,error\n")
        for name in names:
            metric = euclidean_distance if name == "euclidean" else dtw_metric(params)
            error = one_nn_error(train_set, test_set, metric,
                                 threads=opts["threads"])
            window = "" if opts["window"] is None else str(opts["window"])
            fh.write(f"{train_set.name},{name},{window},{error:.6f}\n")
            print(f"{name} {error:.4f}")
    return 0


def cmd_inspect(args) -> int:
    opts = _prepare(args, INSPECT_OPTIONS, [("checkpoint", args.checkpoint)])
    net, _ = load_checkpoint(args.checkpoint)
    image_dir = os.path.join(args.out, "images")
    total = 0
    for stage in (0, 1):
        tiles = save_kernel_tiles(
            net, os.path.join(image_dir, f"stage{stage + 1}"),
            stage=stage, scale=opts["scale"],
        )
        save_kernel_sheet(
            net, os.path.join(args.out, f"kernels_stage{stage + 1}.png"),
            stage=stage, columns=opts["columns"],
        )
        total += len(tiles)
    print(f"exported {total} kernel tiles and 2 sheets to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rptsc",
        description="Recurrence-plot time-series classification toolkit.",
    )
    parser.add_argument("--version", action="version",
                        version=f"rptsc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    encode = sub.add_parser(
        "encode", help="write one recurrence-plot PNG per series")
    encode.add_argument("train_file", help="UCR text file")
    train = sub.add_parser(
        "train", help="train the classifier and report test error")
    train.add_argument("train_file", help="UCR training file")
    train.add_argument("test_file", help="UCR test file")
    baseline = sub.add_parser(
        "baseline", help="1-NN Euclidean / DTW error rates")
    baseline.add_argument("train_file", help="UCR training file")
    baseline.add_argument("test_file", help="UCR test file")
    inspect = sub.add_parser(
        "inspect", help="export kernel images from a checkpoint")
    inspect.add_argument("checkpoint", help="model.ckpt written by train")

    for command, options, func in (
        (encode, ENCODE_OPTIONS, cmd_encode),
        (train, TRAIN_OPTIONS, cmd_train),
        (baseline, BASELINE_OPTIONS, cmd_baseline),
        (inspect, INSPECT_OPTIONS, cmd_inspect),
    ):
        command.add_argument("--out", required=True, help="output directory")
        command.add_argument("--config", default=None,
                             help="key = value file supplying flag defaults")
        _add_options(command, options)
        command.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UcrFormatError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
