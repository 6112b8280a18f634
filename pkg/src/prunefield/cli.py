"""Command-line pipeline: train, prune, retrain, eval, experiment.

Configuration comes from an optional JSON file (``--config``) overridden
by command-line flags. Exit codes: 0 on success, 2 on usage errors, 1 on
runtime or data errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

# Bound internal (BLAS) parallelism before numpy first loads; the package
# __init__ defers its imports so this really does run first for CLI use.
_threads = os.environ.get("PRNFLD_THREADS", "1")
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, _threads)

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import load_image_dataset, save_ppm
from .metrics import ExperimentReport, emit_report, model_size_bytes, mse, param_count, psnr_from_mse
from .model import init_model, proxy_arch, render_image
from .pruning import prune_edges, prune_model
from .tensor import RngStream
from .training import TrainConfig, train


@dataclass
class RunConfig:
    """Merged settings for one command invocation."""

    image: str | None = None
    seed: int = 0
    out_dir: str = "out"
    label: str | None = None
    # architecture of freshly trained models
    width: int = 256
    depth: int = 8
    n_freqs: int = 10
    skip_at: int = 4
    # training
    iterations: int = 20000
    batch_size: int = 128
    learning_rate: float = 5e-4
    lr_decay: float = 1.0
    weight_decay: float = 0.0
    l1_penalty: float = 0.0
    log_every: int = 500
    # pruning
    strategy: str | None = None
    criterion: str = "product"
    threshold: float | None = None
    target_width: int | None = None
    beta: float = 3.0
    reweight: bool = True
    # experiment grid
    retrain_iterations: int = 2000
    strategies: list[str] = field(default_factory=lambda: ["uniform", "importance_out", "coreset"])
    widths: list[int] = field(default_factory=lambda: [128, 64])
    timing: bool = False


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if getattr(args, "config", None):
        loaded = json.loads(Path(args.config).read_text())
        for key, value in loaded.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for key in known:  # flags win over the config file
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "no_reweight", None):
        cfg.reweight = False
    return cfg


def _train_config(cfg: RunConfig, iterations: int | None = None) -> TrainConfig:
    return TrainConfig(
        iterations=cfg.iterations if iterations is None else iterations,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        lr_decay=cfg.lr_decay,
        weight_decay=cfg.weight_decay,
        l1_penalty=cfg.l1_penalty,
        seed=cfg.seed,
        log_every=cfg.log_every,
    )


def _eval_row(label: str, strategy: str, model, reference, sec_per_iter=None, remaining_edge_pct=None) -> ExperimentReport:
    render = render_image(model, reference.shape[1], reference.shape[0])
    # score the 8-bit artifact that gets written, so evaluating a model
    # against its own emitted render is an exact match
    render = np.round(render * 255.0) / 255.0
    err = mse(reference, render)
    return ExperimentReport(
        label=label,
        strategy=strategy,
        params=param_count(model),
        size_bytes=model_size_bytes(model),
        psnr=psnr_from_mse(err),
        mse=err,
        sec_per_iter=sec_per_iter,
        remaining_edge_pct=remaining_edge_pct,
    )


def _write_reports(rows: list[ExperimentReport], out_dir: Path, stem: str) -> None:
    emit_report(rows, "csv", out_dir / f"{stem}.csv")
    emit_report(rows, "json", out_dir / f"{stem}.json")


def _require(cfg: RunConfig, attr: str, flag: str):
    value = getattr(cfg, attr)
    if value is None:
        raise ValueError(f"missing {flag} (set it on the command line or in the config file)")
    return value


def cmd_train(cfg: RunConfig) -> int:
    dataset = load_image_dataset(_require(cfg, "image", "--image"))
    arch = proxy_arch(width=cfg.width, depth=cfg.depth, skip_at=cfg.skip_at, n_freqs=cfg.n_freqs)
    model = init_model(arch, RngStream(cfg.seed).substream(0))
    result = train(model, dataset, _train_config(cfg))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, out_dir / "model.prnfld")
    render = render_image(result.model, dataset.width, dataset.height)
    save_ppm(out_dir / "render.ppm", render)
    row = _eval_row(cfg.label or "train", "baseline", result.model, dataset.image(), sec_per_iter=result.sec_per_iter)
    _write_reports([row], out_dir, "report")
    print(f"trained {cfg.iterations} iterations: psnr={row.psnr:.2f} dB, {row.params} params")
    print(f"wrote {out_dir / 'model.prnfld'}, {out_dir / 'render.ppm'}, {out_dir / 'report.csv'}")
    return 0


def _strategy_parts(name: str, cfg: RunConfig) -> tuple[str, str]:
    if name.startswith("importance_"):
        return "importance", name.split("_", 1)[1]
    if name == "importance":
        return "importance", cfg.criterion
    return name, cfg.criterion


def _structural_prune(model, name: str, width: int, cfg: RunConfig, rng: RngStream):
    strategy, criterion = _strategy_parts(name, cfg)
    return prune_model(model, strategy, width, beta=cfg.beta, rng=rng, criterion=criterion, reweight=cfg.reweight)


def cmd_prune(cfg: RunConfig, checkpoint_in: str) -> int:
    model = load_checkpoint(checkpoint_in)
    strategy = _require(cfg, "strategy", "--strategy")
    if strategy == "edge":
        threshold = _require(cfg, "threshold", "--threshold")
        pruned, report = prune_edges(model, threshold)
    else:
        width = _require(cfg, "target_width", "--target-width")
        pruned, report = _structural_prune(model, strategy, width, cfg, RngStream(cfg.seed).substream(2))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(pruned, out_dir / "pruned.prnfld")
    summary = {
        "strategy": report.strategy,
        "threshold": report.threshold,
        "target_width": report.target_width,
        "edges_before": report.edges_before,
        "edges_after": report.edges_after,
        "remaining_edge_pct": report.remaining_edge_pct,
        "params_before": report.params_before,
        "params_after": report.params_after,
    }
    (out_dir / "prune_report.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(
        f"pruned ({report.strategy}): params {report.params_before} -> {report.params_after}, "
        f"edges {report.remaining_edge_pct:.1f}% remaining"
    )
    print(f"wrote {out_dir / 'pruned.prnfld'}, {out_dir / 'prune_report.json'}")
    return 0


def cmd_retrain(cfg: RunConfig, checkpoint_in: str) -> int:
    model = load_checkpoint(checkpoint_in)
    dataset = load_image_dataset(_require(cfg, "image", "--image"))
    if model.arch.input_dim != 2:
        raise ValueError("checkpoint is not a 2-D coordinate model; cannot retrain on an image")
    result = train(model, dataset, _train_config(cfg))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, out_dir / "retrained.prnfld")
    row = _eval_row(cfg.label or "retrain", "retrain", result.model, dataset.image(), sec_per_iter=result.sec_per_iter)
    _write_reports([row], out_dir, "report")
    print(f"retrained {cfg.iterations} iterations: psnr={row.psnr:.2f} dB")
    print(f"wrote {out_dir / 'retrained.prnfld'}, {out_dir / 'report.csv'}")
    return 0


def cmd_eval(cfg: RunConfig, checkpoint_in: str, image: str) -> int:
    model = load_checkpoint(checkpoint_in)
    dataset = load_image_dataset(image)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    render = render_image(model, dataset.width, dataset.height)
    save_ppm(out_dir / "eval_render.ppm", render)
    row = _eval_row(cfg.label or "eval", "eval", model, dataset.image())
    _write_reports([row], out_dir, "report")
    psnr_text = "inf" if row.psnr is not None and row.psnr == float("inf") else f"{row.psnr:.2f}"
    print(f"eval: psnr={psnr_text} dB, mse={row.mse:.6g}, params={row.params}, size={row.size_bytes} bytes")
    print(f"wrote {out_dir / 'eval_render.ppm'}, {out_dir / 'report.csv'}")
    return 0


def cmd_experiment(cfg: RunConfig) -> int:
    """Baseline plus the full strategy/width grid with shared seeds.

    The consolidated report leaves ``sec_per_iter`` empty unless
    ``--timing`` is set, so that rerunning with the same seed rewrites the
    report files byte for byte.
    """
    dataset = load_image_dataset(_require(cfg, "image", "--image"))
    reference = dataset.image()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[ExperimentReport] = []
    failed = None

    arch = proxy_arch(width=cfg.width, depth=cfg.depth, skip_at=cfg.skip_at, n_freqs=cfg.n_freqs)
    baseline = init_model(arch, RngStream(cfg.seed).substream(0))
    result = train(baseline, dataset, _train_config(cfg))
    baseline = result.model
    save_checkpoint(baseline, out_dir / "baseline.prnfld")
    rows.append(
        _eval_row("baseline", "baseline", baseline, reference, sec_per_iter=result.sec_per_iter if cfg.timing else None)
    )
    print(f"baseline: psnr={rows[0].psnr:.2f} dB")

    for name in cfg.strategies:
        for width in cfg.widths:
            label = f"{name}-{width}"
            try:
                # the same selection stream per width keeps strategies comparable
                pruned, report = _structural_prune(baseline, name, width, cfg, RngStream(cfg.seed).substream(2, width))
                retrained = train(pruned, dataset, _train_config(cfg, iterations=cfg.retrain_iterations))
                save_checkpoint(retrained.model, out_dir / f"{label}.prnfld")
                rows.append(
                    _eval_row(
                        label,
                        report.strategy,
                        retrained.model,
                        reference,
                        sec_per_iter=retrained.sec_per_iter if cfg.timing else None,
                        remaining_edge_pct=report.remaining_edge_pct,
                    )
                )
                print(f"{label}: psnr={rows[-1].psnr:.2f} dB, params={rows[-1].params}")
            except Exception as exc:  # preserve partial results, marked
                rows.append(ExperimentReport(label=label, strategy=f"failed:{name}", params=0, size_bytes=0, psnr=None, mse=None))
                failed = f"{label}: {exc}"
                break
        if failed:
            break

    _write_reports(rows, out_dir, "experiment")
    print(f"wrote {out_dir / 'experiment.csv'}, {out_dir / 'experiment.json'}")
    if failed:
        print(f"experiment aborted at {failed}", file=sys.stderr)
        return 1
    return 0


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _str_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int, help="root seed for initialization, batching, and selection")
    common.add_argument("--out-dir", dest="out_dir", help="directory for checkpoints, renders, and reports")
    common.add_argument("--label", help="label used in report rows")

    training_flags = argparse.ArgumentParser(add_help=False)
    training_flags.add_argument("--image", help="training image (binary PPM, P6)")
    training_flags.add_argument("--iterations", type=int)
    training_flags.add_argument("--batch-size", dest="batch_size", type=int)
    training_flags.add_argument("--learning-rate", dest="learning_rate", type=float)
    training_flags.add_argument("--lr-decay", dest="lr_decay", type=float)
    training_flags.add_argument("--weight-decay", dest="weight_decay", type=float)
    training_flags.add_argument("--l1-penalty", dest="l1_penalty", type=float,
                                help="proximal L1 on weights; drives unused weights to exact zero")
    training_flags.add_argument("--log-every", dest="log_every", type=int)

    arch_flags = argparse.ArgumentParser(add_help=False)
    arch_flags.add_argument("--width", type=int)
    arch_flags.add_argument("--depth", type=int)
    arch_flags.add_argument("--n-freqs", dest="n_freqs", type=int)
    arch_flags.add_argument("--skip-at", dest="skip_at", type=int)

    parser = argparse.ArgumentParser(prog="prunefield", description="Train, prune, retrain, and evaluate coordinate MLPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train", parents=[common, training_flags, arch_flags], help="train a fresh model on an image")

    p_prune = sub.add_parser("prune", parents=[common], help="compress a checkpoint")
    p_prune.add_argument("checkpoint")
    p_prune.add_argument("--strategy", choices=["edge", "uniform", "importance", "coreset"])
    p_prune.add_argument("--criterion", choices=["in", "out", "product"])
    p_prune.add_argument("--threshold", type=float, help="magnitude threshold for edge pruning")
    p_prune.add_argument("--target-width", dest="target_width", type=int, help="kept neurons per hidden layer")
    p_prune.add_argument("--beta", type=float, help="upper-bound controller of the sampling numerators")
    p_prune.add_argument("--no-reweight", dest="no_reweight", action="store_true", default=None,
                         help="skip the importance-sampling rescale of kept outgoing weights")

    p_retrain = sub.add_parser("retrain", parents=[common, training_flags], help="continue training a checkpoint")
    p_retrain.add_argument("checkpoint")

    p_eval = sub.add_parser("eval", parents=[common], help="render a checkpoint and score it against an image")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("image")

    p_exp = sub.add_parser("experiment", parents=[common, training_flags, arch_flags],
                           help="baseline + strategy grid, one consolidated report")
    p_exp.add_argument("--retrain-iterations", dest="retrain_iterations", type=int)
    p_exp.add_argument("--strategies", type=_str_list, help="comma-separated subset of uniform,importance_in,importance_out,importance_product,coreset")
    p_exp.add_argument("--widths", type=_int_list, help="comma-separated target widths")
    p_exp.add_argument("--beta", type=float)
    p_exp.add_argument("--no-reweight", dest="no_reweight", action="store_true", default=None)
    p_exp.add_argument("--timing", action="store_true", default=None,
                       help="include measured sec/iteration (makes report files non-reproducible)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "prune":
            return cmd_prune(cfg, args.checkpoint)
        if args.command == "retrain":
            return cmd_retrain(cfg, args.checkpoint)
        if args.command == "eval":
            return cmd_eval(cfg, args.checkpoint, args.image)
        if args.command == "experiment":
            return cmd_experiment(cfg)
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
