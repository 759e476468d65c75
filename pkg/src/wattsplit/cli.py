"""Command line interface.

Subcommands: synth, states, train, disaggregate, evaluate. Settings merge
as defaults < --config file < explicit flags, and every command that
writes to an output directory echoes the merged settings there as
effective_config.json so runs can be reproduced from the echo plus the
input files.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .metrics import ApplianceMetrics, MetricReport, evaluate_pair
from .model import ConvLayerSpec, DisaggNet, NetConfig
from .postprocess import FilterConfig
from .series import PowerSeries, fill_gaps, load_csv, save_csv
from .states import cluster_states, load_state_model, save_state_model
from .synth import generate, load_scenario
from .trainer import TrainConfig, disaggregate, train
from .windows import WindowConfig, make_windows

VARIANT_FLAGS = {"plain": "plain", "median": "median", "hard": "hard",
                 "hard-median": "hard_median"}

TRAIN_DEFAULTS = {
    "period": 6,
    "window_s": 32,
    "window_w": 200,
    "stride": None,
    "batch_size": 16,
    "learning_rate": 1e-3,
    "epochs": 10,
    "lambda_power": 0.0,
    "variant": "plain",
    "seed": 0,
    "shuffle": True,
    "hidden": 1024,
    "conv_stack": [[30, 10, 1], [30, 8, 1], [40, 6, 1], [50, 5, 1], [50, 5, 1]],
    "tau": 1.0,
    "median_window": 5,
    "mains": None,
    "appliance": None,
    "state_model": None,
}


def _parse_conv_stack(value):
    """Accept [[f,k,s],...] (config file) or "16x9,16x7@2" (flag)."""
    if isinstance(value, str):
        layers = []
        for part in value.split(","):
            part = part.strip()
            stride = 1
            if "@" in part:
                part, stride_text = part.split("@", 1)
                stride = int(stride_text)
            filters_text, kernel_text = part.split("x", 1)
            layers.append([int(filters_text), int(kernel_text), stride])
        value = layers
    return tuple(ConvLayerSpec(*[int(x) for x in layer]) for layer in value)


def _load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - set(TRAIN_DEFAULTS)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    return doc


def _merge_settings(args, keys) -> dict:
    merged = {k: TRAIN_DEFAULTS[k] for k in keys}
    if getattr(args, "config", None):
        file_doc = _load_config_file(args.config)
        for k, v in file_doc.items():
            if k in merged:
                merged[k] = v
    for k in keys:
        flag = getattr(args, k, None)
        if flag is not None:
            merged[k] = flag
    return merged


def _echo_config(out_dir: str, command: str, settings: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    doc = {"command": command}
    for k, v in sorted(settings.items()):
        if isinstance(v, tuple):
            v = [list(x) if isinstance(x, (tuple, ConvLayerSpec)) else x for x in v]
        if isinstance(v, ConvLayerSpec):
            v = [v.filters, v.kernel, v.stride]
        doc[k] = v
    with open(os.path.join(out_dir, "effective_config.json"), "w",
              encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, default=lambda o: [o.filters, o.kernel, o.stride])
        fh.write("\n")


def _load_series(path, period: int) -> PowerSeries:
    return fill_gaps(load_csv(path, period))


def cmd_synth(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace
        scenario = replace(scenario, seed=args.seed)
    mains, traces, state_seqs = generate(scenario)
    os.makedirs(args.out, exist_ok=True)
    save_csv(mains, os.path.join(args.out, "mains.csv"))
    for spec, trace, states in zip(scenario.appliances, traces, state_seqs):
        save_csv(trace, os.path.join(args.out, f"{spec.name}.csv"))
        stamps = trace.timestamps()
        with open(os.path.join(args.out, f"{spec.name}.states"), "w",
                  encoding="utf-8") as fh:
            for t, s in zip(stamps, states):
                fh.write(f"{int(t)},{int(s)}\n")
    _echo_config(args.out, "synth",
                 {"scenario": os.path.abspath(args.scenario), "seed": scenario.seed})
    print(f"wrote mains.csv and {len(scenario.appliances)} appliance traces to {args.out}")
    return 0


def cmd_states(args) -> int:
    series = _load_series(args.appliance, args.period)
    model = cluster_states(series, args.state_count, on_threshold=args.threshold,
                           seed=args.seed or 0, name=args.name)
    save_state_model(model, args.out)
    print(f"{model.name}: centroids "
          f"{[round(float(c), 2) for c in model.centroids]} W -> {args.out}")
    return 0


def cmd_train(args) -> int:
    keys = ["period", "window_s", "window_w", "stride", "batch_size",
            "learning_rate", "epochs", "lambda_power", "variant", "seed",
            "shuffle", "hidden", "conv_stack", "tau", "mains", "appliance",
            "state_model"]
    st = _merge_settings(args, keys)
    for required in ("mains", "appliance", "state_model"):
        if st[required] is None:
            raise ValueError(f"train: --{required.replace('_', '-')} is required "
                             "(flag or config file)")
    variant = VARIANT_FLAGS.get(st["variant"], st["variant"])
    state_model = load_state_model(st["state_model"])
    mains = _load_series(st["mains"], st["period"])
    appliance = _load_series(st["appliance"], st["period"])
    window = WindowConfig(st["window_s"], st["window_w"])
    conv_stack = _parse_conv_stack(st["conv_stack"])
    # echo the canonical form so the echo file can be reused as a --config
    st["conv_stack"] = [[c.filters, c.kernel, c.stride] for c in conv_stack]
    net = DisaggNet(NetConfig(
        window=window,
        state_count=state_model.state_count,
        conv_stack=conv_stack,
        hidden=st["hidden"],
        tau=st["tau"],
        seed=st["seed"],
    ))
    net.dataset_tag = os.path.basename(str(st["mains"]))
    examples = make_windows(mains, appliance, state_model, window,
                            stride=st["stride"])
    cfg = TrainConfig(batch_size=st["batch_size"], learning_rate=st["learning_rate"],
                      epochs=st["epochs"], lambda_power=st["lambda_power"],
                      variant=variant, seed=st["seed"], shuffle=st["shuffle"])
    centroid_targets = None
    if cfg.lambda_power > 0:
        centroid_targets = (state_model.centroids - state_model.norm_mean) / state_model.norm_std
    net, rep = train(net, examples, cfg, centroid_targets=centroid_targets)
    os.makedirs(args.out, exist_ok=True)
    ckpt = os.path.join(args.out, "checkpoint.ddnn")
    save_checkpoint(net, ckpt)
    rep.checkpoint_path = ckpt
    rep.to_csv(os.path.join(args.out, "train_report.csv"))
    _echo_config(args.out, "train", st)
    last = rep.epochs[-1] if rep.epochs else None
    tail = f", final loss {last.loss_total:.6f}" if last else ""
    print(f"trained {cfg.epochs} epochs in {rep.wall_time_s:.1f}s{tail} -> {ckpt}")
    return 0


def cmd_disaggregate(args) -> int:
    model = load_checkpoint(args.checkpoint)
    state_model = load_state_model(args.state_model)
    mains = _load_series(args.mains, args.period)
    variant = VARIANT_FLAGS[args.variant]
    filter_cfg = FilterConfig(median_window=args.median_window)
    result = disaggregate(model, mains, state_model, variant=variant,
                          stride=args.stride, filter_cfg=filter_cfg)
    os.makedirs(args.out, exist_ok=True)
    save_csv(result.estimate, os.path.join(args.out, "estimate.csv"))
    stamps = result.estimate.timestamps()
    indices = np.argmax(result.states, axis=1)
    with open(os.path.join(args.out, "states.csv"), "w", encoding="utf-8") as fh:
        for t, s in zip(stamps, indices):
            fh.write(f"{int(t)},{int(s)}\n")
    _echo_config(args.out, "disaggregate", {
        "checkpoint": os.path.abspath(args.checkpoint),
        "state_model": os.path.abspath(args.state_model),
        "mains": os.path.abspath(args.mains),
        "variant": args.variant,
        "stride": args.stride,
        "median_window": args.median_window,
        "period": args.period,
    })
    print(f"wrote estimate.csv and states.csv to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    truth = _load_series(args.truth, args.period)
    estimate = _load_series(args.estimate, args.period)
    row = evaluate_pair(args.name, truth, estimate)
    rep = MetricReport([row])
    if args.out:
        rep.to_csv(args.out)
    print(str(rep))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wattsplit",
                                     description="appliance-level energy disaggregation")
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON settings file")
    shared.add_argument("--seed", type=int, help="override the random seed")

    p = sub.add_parser("synth", parents=[shared],
                       help="generate a synthetic scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("states", parents=[shared],
                       help="build an appliance state model from a CSV")
    p.add_argument("--appliance", required=True, help="appliance CSV")
    p.add_argument("--state-count", type=int, required=True, dest="state_count")
    p.add_argument("--out", required=True, help="state model JSON path")
    p.add_argument("--threshold", type=float, default=15.0, help="ON threshold, W")
    p.add_argument("--period", type=int, default=6, help="grid period, s")
    p.add_argument("--name", default="appliance")
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("train", parents=[shared], help="train a net")
    p.add_argument("--mains")
    p.add_argument("--appliance")
    p.add_argument("--state-model", dest="state_model")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--period", type=int)
    p.add_argument("--window-s", type=int, dest="window_s")
    p.add_argument("--window-w", type=int, dest="window_w")
    p.add_argument("--stride", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lambda-power", type=float, dest="lambda_power")
    p.add_argument("--variant", choices=sorted(VARIANT_FLAGS))
    p.add_argument("--hidden", type=int)
    p.add_argument("--conv-stack", dest="conv_stack",
                   help='e.g. "16x9,16x7,24x5" (filters x kernel[@stride])')
    p.add_argument("--tau", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("disaggregate", parents=[shared],
                       help="run a trained net over a mains CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mains", required=True)
    p.add_argument("--state-model", required=True, dest="state_model")
    p.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="plain")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stride", type=int)
    p.add_argument("--median-window", type=int, default=5, dest="median_window")
    p.add_argument("--period", type=int, default=6)
    p.set_defaults(func=cmd_disaggregate)

    p = sub.add_parser("evaluate", parents=[shared],
                       help="score an estimate CSV against ground truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="metric CSV path")
    p.add_argument("--period", type=int, default=6)
    p.add_argument("--name", default="appliance")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
