"""Command-line surface: train, retrieve, encode, decode, eval, heatmap.

Conventions shared by every command: long-form flags only; an optional
``key=value`` config file whose entries are overridden by explicit
flags; one ``--seed`` feeding all randomness; ``--threads`` capping
parallelism (numerical kernels always run single-threaded so results
are identical for every thread budget, extra threads only spread
independent images across workers); errors exit non-zero with a single
``error: ...`` line on stderr. No command modifies its input files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import codec, metrics
from .blockdct import blockwise_forward, quant_table_from_qf, split
from .dataset import build_training_set, list_pgm_files
from .errors import SignCodecError
from .network import load_weights, model_digest, retrieve_signs, save_weights
from .pgm import read_pgm, write_pgm
from .subband import pack
from .training import TrainConfig, format_loss_log, train

DESK_CROP = 64
DESK_CROPS = 64
DESK_BATCH = 8
DESK_EPOCHS = 200

# full-scale preset; impractical on desk hardware, provided for completeness
PAPER_CROP = 512
PAPER_CROPS = 6056
PAPER_BATCH = 256
PAPER_EPOCHS = 15000


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line, machine-parsable
        self.exit(2, f"error: {message}\n")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value file; flags override its entries")
    sub.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    sub.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker threads for independent images (kernels stay single-threaded)",
    )


def build_parser():
    parser = _Parser(prog="signcodec", allow_abbrev=False)
    parser.add_argument("--version", action="version", version="signcodec 0.1.0")
    commands = parser.add_subparsers(dest="command", required=True)
    subs = {}

    sub = commands.add_parser("train", help="train sign-prediction weights")
    sub.add_argument("--images", required=True, help="directory of training PGMs")
    sub.add_argument("--out", required=True, help="output weights file (SRW1)")
    sub.add_argument("--qf", type=int, default=75, help="quality factor for training")
    sub.add_argument("--depth", type=int, default=2, help="convolution count minus one")
    sub.add_argument("--hidden", type=int, default=128, help="hidden channel width")
    sub.add_argument("--variant", choices=("subband", "naive"), default="subband")
    sub.add_argument("--learning-rate", type=float, default=2e-4)
    sub.add_argument("--batch-size", type=int, default=DESK_BATCH)
    sub.add_argument("--epochs", type=int, default=DESK_EPOCHS)
    sub.add_argument("--crop-size", type=int, default=DESK_CROP)
    sub.add_argument("--crops", type=int, default=DESK_CROPS)
    sub.add_argument("--log", help="loss log path (default: <out>.log)")
    sub.add_argument(
        "--paper-scale",
        action="store_true",
        help="512x512 crops, 6056 of them, batch 256, 15000 epochs "
        "(not expected to finish in reasonable time on desk hardware)",
    )
    _add_common(sub)
    sub.set_defaults(func=cmd_train)
    subs["train"] = sub

    sub = commands.add_parser("retrieve", help="predict signs and report recovery")
    sub.add_argument("--weights", required=True)
    sub.add_argument("--images", required=True, nargs="+", help="PGM files or a directory")
    sub.add_argument("--qf", type=int, default=75)
    sub.add_argument("--out", help="write the CSV report here instead of stdout")
    _add_common(sub)
    sub.set_defaults(func=cmd_retrieve)
    subs["retrieve"] = sub

    sub = commands.add_parser("encode", help="compress one PGM into a container")
    sub.add_argument("--weights", required=True)
    sub.add_argument("--image", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--qf", type=int, default=75)
    _add_common(sub)
    sub.set_defaults(func=cmd_encode)
    subs["encode"] = sub

    sub = commands.add_parser("decode", help="reconstruct a PGM from a container")
    sub.add_argument("--weights", required=True)
    sub.add_argument("--container", required=True)
    sub.add_argument("--out", required=True)
    _add_common(sub)
    sub.set_defaults(func=cmd_decode)
    subs["decode"] = sub

    sub = commands.add_parser("eval", help="recovery/bit-cost/timing table")
    sub.add_argument("--weights", required=True, nargs="+")
    sub.add_argument("--images", required=True, help="directory of test PGMs")
    sub.add_argument(
        "--qf",
        type=int,
        nargs="+",
        default=[75],
        help="one per weights file, or a single value for all",
    )
    sub.add_argument("--out", help="write the CSV table here instead of stdout")
    sub.add_argument("--heatmap-prefix", help="also write per-QF heat-map PGMs")
    sub.add_argument("--timing-runs", type=int, default=5)
    _add_common(sub)
    sub.set_defaults(func=cmd_eval)
    subs["eval"] = sub

    sub = commands.add_parser("heatmap", help="per-block worst/variance maps")
    sub.add_argument("--weights", required=True)
    sub.add_argument("--images", required=True, help="directory of test PGMs")
    sub.add_argument("--qf", type=int, default=75)
    sub.add_argument("--out-prefix", required=True)
    _add_common(sub)
    sub.set_defaults(func=cmd_heatmap)
    subs["heatmap"] = sub

    return parser, subs


def _load_config(path: Path, sub: argparse.ArgumentParser) -> dict:
    actions = {
        a.dest: a
        for a in sub._actions
        if a.dest not in ("help", "config") and a.option_strings
    }
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        action = actions.get(key)
        if action is None:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            lowered = value.lower()
            if lowered not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(f"{path}:{lineno}: {key} must be a boolean")
            values[key] = lowered in ("1", "true", "yes")
        elif action.nargs in ("+", "*"):
            convert = action.type or str
            values[key] = [convert(v) for v in value.split()]
        else:
            convert = action.type or str
            if action.choices and value not in action.choices:
                raise ValueError(
                    f"{path}:{lineno}: {key} must be one of {sorted(action.choices)}"
                )
            values[key] = convert(value)
    return values


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _write_meta(path: Path, config: TrainConfig, qf: int, crop_size: int, crops: int):
    lines = [
        f"qf={qf}",
        f"variant={config.variant}",
        f"depth={config.depth}",
        f"hidden={config.hidden}",
        f"learning_rate={config.learning_rate}",
        f"batch_size={config.batch_size}",
        f"epochs={config.epochs}",
        f"seed={config.seed}",
        f"crop_size={crop_size}",
        f"crops={crops}",
    ]
    path.write_text("".join(line + "\n" for line in lines))


def _read_meta(weights_path: str) -> dict:
    meta_path = Path(str(weights_path) + ".meta")
    if not meta_path.is_file():
        return {}
    values = {}
    for raw in meta_path.read_text().splitlines():
        line = raw.strip()
        if line and "=" in line:
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _load_model_for_qf(weights_path: str, qf: int):
    model = load_weights(weights_path)
    meta = _read_meta(weights_path)
    trained_qf = meta.get("qf")
    if trained_qf is not None and trained_qf.isdigit() and int(trained_qf) != qf:
        _warn(
            f"weights {weights_path} were trained at qf={trained_qf}, "
            f"evaluating at qf={qf}"
        )
    return model


def _image_paths(spec_list) -> list[Path]:
    if len(spec_list) == 1 and Path(spec_list[0]).is_dir():
        paths = list_pgm_files(spec_list[0])
        if not paths:
            raise ValueError(f"no PGM files in directory {spec_list[0]}")
        return paths
    return [Path(p) for p in spec_list]


def _analyze_plane(model, plane, qf: int):
    grid = blockwise_forward(plane, quant_table_from_qf(qf))
    amp_grid, sign_grid = split(grid)
    amps = pack(amp_grid)
    signs = pack(sign_grid)
    predicted = retrieve_signs(model, amps, signs[0])
    return amps, signs, predicted


def _map_ordered(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- commands ----------------------------------------------------------------


def cmd_train(args) -> int:
    crop_size, crops = args.crop_size, args.crops
    batch_size, epochs = args.batch_size, args.epochs
    if args.paper_scale:
        crop_size, crops = PAPER_CROP, PAPER_CROPS
        batch_size, epochs = PAPER_BATCH, PAPER_EPOCHS
    config = TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=batch_size,
        epochs=epochs,
        seed=args.seed,
        depth=args.depth,
        hidden=args.hidden,
        variant=args.variant,
    )
    pairs, skipped = build_training_set(args.images, crop_size, crops, args.qf, args.seed)
    for path, reason in skipped:
        _warn(f"skipped {path}: {reason}")
    model, losses = train(pairs, config)
    out = Path(args.out)
    save_weights(model, out)
    _write_meta(Path(str(out) + ".meta"), config, args.qf, crop_size, crops)
    log_path = Path(args.log) if args.log else Path(str(out) + ".log")
    log_path.write_text(format_loss_log(losses))
    print(
        f"trained {config.variant} depth={config.depth} on {len(pairs)} crops "
        f"({crop_size}x{crop_size}, qf={args.qf}); final loss {losses[-1]:.6g}"
    )
    print(f"wrote {out} and {log_path}")
    return 0


def cmd_retrieve(args) -> int:
    model = _load_model_for_qf(args.weights, args.qf)
    paths = _image_paths(args.images)

    def analyze(path):
        plane = read_pgm(path)
        amps, signs, predicted = _analyze_plane(model, plane, args.qf)
        return metrics.recovery_rate(signs, predicted, amps)

    reports = _map_ordered(analyze, paths, args.threads)
    lines = ["image,significant,correct,recovery_rate,vacuous"]
    for path, report in zip(paths, reports):
        lines.append(f"{path.name},{report.csv_row()}")
    total = metrics.pooled_recovery(reports)
    lines.append(f"TOTAL,{total.csv_row()}")
    text = "".join(line + "\n" for line in lines)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_encode(args) -> int:
    model = _load_model_for_qf(args.weights, args.qf)
    plane = read_pgm(args.image)
    container = codec.encode_image(plane, args.qf, model)
    codec.write_container(args.out, container)
    amps = pack(split(blockwise_forward(plane, quant_table_from_qf(args.qf)))[0])
    cost = metrics.bits_per_sign(container, amps)
    bits = f"{cost.bits_per_sign:.4f}" if cost.defined else "undefined"
    print(
        f"wrote {args.out}: {container.width}x{container.height} qf={container.qf}, "
        f"amplitudes {len(container.amp_payload)} B, dc {len(container.dc_payload)} B, "
        f"residual {len(container.residual_payload)} B "
        f"({cost.significant} significant AC signs, {bits} bits/sign)"
    )
    return 0


def cmd_decode(args) -> int:
    model = load_weights(args.weights)
    container = codec.read_container(args.container)
    plane, _ = codec.decode_image(container, model)
    write_pgm(args.out, plane)
    print(f"wrote {args.out}: {container.width}x{container.height} qf={container.qf}")
    return 0


def _eval_pairs(weights_list, qf_list):
    if len(qf_list) == 1 and len(weights_list) > 1:
        qf_list = qf_list * len(weights_list)
    if len(weights_list) == 1 and len(qf_list) > 1:
        weights_list = weights_list * len(qf_list)
    if len(weights_list) != len(qf_list):
        raise ValueError(
            f"{len(weights_list)} weights files cannot pair with {len(qf_list)} QFs"
        )
    return list(zip(weights_list, qf_list))


def cmd_eval(args) -> int:
    paths = list_pgm_files(args.images)
    if not paths:
        raise ValueError(f"no PGM files in directory {args.images}")
    header = (
        "qf,weights,images,significant,correct,recovery_per_sign,"
        "recovery_block_mean,bits_per_sign,time_median_s,time_variance"
    )
    rows = [header]
    for weights_path, qf in _eval_pairs(args.weights, args.qf):
        model = _load_model_for_qf(weights_path, qf)

        def analyze(path):
            plane = read_pgm(path)
            amps, signs, predicted = _analyze_plane(model, plane, qf)
            report = metrics.recovery_rate(signs, predicted, amps)
            res = codec.residual(signs, predicted, amps)
            payload = codec.encode_residual(res, amps)
            return amps, signs, predicted, report, len(payload) * 8

        results = _map_ordered(analyze, paths, args.threads)
        reports = [r[3] for r in results]
        total = metrics.pooled_recovery(reports)
        payload_bits = sum(r[4] for r in results)
        bits = payload_bits / total.significant if total.significant else float("nan")
        triples = [(signs, predicted, amps) for amps, signs, predicted, _, _ in results]
        hm = metrics.per_block_heatmap(triples)
        block_mean = float(np.nanmean(hm.per_image))
        timing = metrics.time_retrieval(model, results[0][0], runs=args.timing_runs)
        rows.append(
            f"{qf},{Path(weights_path).name},{len(paths)},{total.significant},"
            f"{total.correct},{total.recovery_rate:.6f},{block_mean:.6f},"
            f"{bits:.6f},{timing.median_seconds:.6g},{timing.variance:.6g}"
        )
        if args.heatmap_prefix:
            _write_heatmaps(args.heatmap_prefix + f"qf{qf:02d}_", hm)
    text = "".join(row + "\n" for row in rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _write_heatmaps(prefix: str, hm: metrics.HeatMap) -> None:
    write_pgm(prefix + "worst.pgm", metrics.heatmap_to_plane(hm.worst, scale=1.0))
    write_pgm(prefix + "variance.pgm", metrics.heatmap_to_plane(hm.variance, scale=0.25))


def cmd_heatmap(args) -> int:
    model = _load_model_for_qf(args.weights, args.qf)
    paths = list_pgm_files(args.images)
    if not paths:
        raise ValueError(f"no PGM files in directory {args.images}")

    def analyze(path):
        plane = read_pgm(path)
        amps, signs, predicted = _analyze_plane(model, plane, args.qf)
        return signs, predicted, amps

    triples = _map_ordered(analyze, paths, args.threads)
    hm = metrics.per_block_heatmap(triples)
    _write_heatmaps(args.out_prefix, hm)
    print(f"wrote {args.out_prefix}worst.pgm and {args.out_prefix}variance.pgm")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            defaults = _load_config(Path(args.config), subs[args.command])
            subs[args.command].set_defaults(**defaults)
            args = parser.parse_args(argv)
        with threadpool_limits(limits=1):
            return args.func(args)
    except (SignCodecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
