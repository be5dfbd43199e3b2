"""Config-driven command line: run experiments, parameter sweeps, dual-oracle
self-checks, and dataset dumps.

Experiments are described by a JSON config (see README for the schema);
flags only pick the subcommand and paths. Exit codes: 0 success, 1 runtime
failure (including a failed oracle check), 2 config/schema error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregator import AggregationConfig, dual_gap_suite
from .data import (DirichletPartition, Rect4Config, blobs_train_test,
                   dirichlet_partition, gen_rect4, load_idx, rect4_train_test)
from .errors import FedomgError
from .federation import ExperimentConfig, run_fdg_experiment, run_fl_experiment
from .metrics import export
from .models import ModelSpec
from .simplex import InnerOptConfig

ORACLE_GAP_LIMIT = 1e-3


class ConfigError(ValueError):
    """Schema violation; the message names the offending field."""


def _check_keys(obj: dict, allowed: set, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key '{_join(path, key)}'")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _get(obj: dict, key: str, typ, path: str, default=None, required: bool = False):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required field '{_join(path, key)}'")
        return default
    value = obj[key]
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, typ) or isinstance(value, bool):
        raise ConfigError(
            f"field '{_join(path, key)}' must be {typ.__name__}, got {type(value).__name__}"
        )
    return value


def _parse_model(obj: dict, path: str = "model") -> ModelSpec:
    _check_keys(obj, {"kind", "input_dim", "num_classes", "hidden_dim"}, path)
    kind = _get(obj, "kind", str, path, required=True)
    if kind not in ("linear_binary", "logistic", "mlp1"):
        raise ConfigError(f"field '{path}.kind' must be linear_binary, logistic or mlp1")
    spec = dict(
        kind=kind,
        input_dim=_get(obj, "input_dim", int, path, required=True),
        num_classes=_get(obj, "num_classes", int, path, required=True),
    )
    if kind == "mlp1":
        spec["hidden_dim"] = _get(obj, "hidden_dim", int, path, required=True)
    elif "hidden_dim" in obj:
        raise ConfigError(f"field '{path}.hidden_dim' only applies to mlp1")
    try:
        return ModelSpec(**spec)
    except FedomgError as exc:
        raise ConfigError(f"in '{path}': {exc}") from exc


def _parse_partition(obj: dict, seed: int, path: str) -> DirichletPartition:
    _check_keys(obj, {"alpha", "num_clients"}, path)
    try:
        return DirichletPartition(
            alpha=_get(obj, "alpha", float, path, required=True),
            num_clients=_get(obj, "num_clients", int, path, required=True),
            seed=seed,
        )
    except FedomgError as exc:
        raise ConfigError(f"in '{path}': {exc}") from exc


def _parse_inner(obj: dict, path: str = "inner") -> InnerOptConfig:
    _check_keys(obj, {"learning_rate", "iterations", "momentum"}, path)
    defaults = InnerOptConfig()
    try:
        return InnerOptConfig(
            learning_rate=_get(obj, "learning_rate", float, path, default=defaults.learning_rate),
            iterations=_get(obj, "iterations", int, path, default=defaults.iterations),
            momentum=_get(obj, "momentum", float, path, default=defaults.momentum),
        )
    except FedomgError as exc:
        raise ConfigError(f"in '{path}': {exc}") from exc


_TOP_KEYS = {
    "dataset", "model", "aggregator", "kappa", "global_lr", "inner", "reference",
    "rounds", "local_epochs", "local_lr", "batch_size", "participation_ratio",
    "seed", "eval_stride", "output", "format",
}

_DATASET_KEYS = {
    "rect4": {"kind", "points_per_domain", "noise_fraction", "held_out"},
    "blobs": {"kind", "num_classes", "input_dim", "train_per_class", "test_per_class",
              "spread", "center_scale", "partition"},
    "idx": {"kind", "train_images", "train_labels", "test_images", "test_labels",
            "partition"},
}


def parse_run_config(raw: dict) -> dict:
    """Validate the full run config; returns a plan dict for _execute_run."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "")

    aggregator = _get(raw, "aggregator", str, "", default="fedomg")
    if aggregator not in ("fedavg", "fedomg"):
        raise ConfigError("field 'aggregator' must be 'fedavg' or 'fedomg'")
    kappa = _get(raw, "kappa", float, "", default=(0.0 if aggregator == "fedavg" else 0.5))
    if aggregator == "fedavg" and kappa != 0.0:
        raise ConfigError("field 'kappa' must be 0 (or omitted) for aggregator 'fedavg'")
    reference = _get(raw, "reference", str, "", default="weighted")
    if reference not in ("weighted", "uniform"):
        raise ConfigError("field 'reference' must be 'weighted' or 'uniform'")

    seed = _get(raw, "seed", int, "", default=0)
    fmt = _get(raw, "format", str, "", default="csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("field 'format' must be 'csv' or 'json'")

    try:
        aggregation = AggregationConfig(
            kappa=kappa,
            global_lr=_get(raw, "global_lr", float, "", default=1.0),
            inner=_parse_inner(_get(raw, "inner", dict, "", default={})),
            reference=reference,
        )
        experiment = ExperimentConfig(
            rounds=_get(raw, "rounds", int, "", required=True),
            local_lr=_get(raw, "local_lr", float, "", required=True),
            batch_size=_get(raw, "batch_size", int, "", required=True),
            model=_parse_model(_get(raw, "model", dict, "", required=True)),
            aggregation=aggregation,
            local_epochs=_get(raw, "local_epochs", int, "", default=5),
            participation_ratio=_get(raw, "participation_ratio", float, "", default=1.0),
            seed=seed,
            eval_stride=_get(raw, "eval_stride", int, "", default=1),
        )
    except FedomgError as exc:
        raise ConfigError(str(exc)) from exc

    dataset = _get(raw, "dataset", dict, "", required=True)
    kind = _get(dataset, "kind", str, "dataset", required=True)
    if kind not in _DATASET_KEYS:
        raise ConfigError("field 'dataset.kind' must be 'rect4', 'blobs' or 'idx'")
    _check_keys(dataset, _DATASET_KEYS[kind], "dataset")
    if kind == "rect4":
        try:
            rect = Rect4Config(
                points_per_domain=_get(dataset, "points_per_domain", int, "dataset", required=True),
                noise_fraction=_get(dataset, "noise_fraction", float, "dataset", default=0.1),
                seed=seed,
            )
        except FedomgError as exc:
            raise ConfigError(f"in 'dataset': {exc}") from exc
        held_out = _get(dataset, "held_out", int, "dataset", default=4)
        if held_out not in (1, 2, 3, 4):
            raise ConfigError("field 'dataset.held_out' must be 1, 2, 3 or 4")
        plan = {"kind": "rect4", "rect": rect, "held_out": held_out}
    elif kind == "blobs":
        plan = {
            "kind": "blobs",
            "num_classes": _get(dataset, "num_classes", int, "dataset", required=True),
            "input_dim": _get(dataset, "input_dim", int, "dataset", required=True),
            "train_per_class": _get(dataset, "train_per_class", int, "dataset", required=True),
            "test_per_class": _get(dataset, "test_per_class", int, "dataset", required=True),
            "spread": _get(dataset, "spread", float, "dataset", default=1.0),
            "center_scale": _get(dataset, "center_scale", float, "dataset", default=4.0),
            "partition": _parse_partition(
                _get(dataset, "partition", dict, "dataset", required=True), seed,
                "dataset.partition"),
        }
    else:
        plan = {
            "kind": "idx",
            "train_images": _get(dataset, "train_images", str, "dataset", required=True),
            "train_labels": _get(dataset, "train_labels", str, "dataset", required=True),
            "test_images": _get(dataset, "test_images", str, "dataset", required=True),
            "test_labels": _get(dataset, "test_labels", str, "dataset", required=True),
            "partition": _parse_partition(
                _get(dataset, "partition", dict, "dataset", required=True), seed,
                "dataset.partition"),
        }
    return {
        "experiment": experiment,
        "dataset": plan,
        "output": _get(raw, "output", str, "", required=True),
        "format": fmt,
    }


def _execute_run(plan: dict) -> dict:
    """Run the experiment described by a validated plan; returns a summary."""
    cfg: ExperimentConfig = plan["experiment"]
    ds = plan["dataset"]
    if ds["kind"] == "rect4":
        domains = rect4_train_test(ds["rect"])
        reports = run_fdg_experiment(domains, ds["held_out"], cfg)
    elif ds["kind"] == "blobs":
        train, test = blobs_train_test(
            ds["num_classes"], ds["input_dim"], ds["train_per_class"],
            ds["test_per_class"], cfg.seed, ds["spread"], ds["center_scale"],
        )
        clients = dirichlet_partition(train, ds["partition"])
        reports = run_fl_experiment(clients, test, cfg)
    else:
        train = load_idx(ds["train_images"], ds["train_labels"])
        test = load_idx(ds["test_images"], ds["test_labels"])
        clients = dirichlet_partition(train, ds["partition"])
        reports = run_fl_experiment(clients, test, cfg)
    export(reports, plan["format"], plan["output"])
    final = next((r.metrics for r in reversed(reports) if r.metrics is not None), None)
    return {
        "output": plan["output"],
        "rounds": len(reports),
        "final_source_acc": None if final is None else final.source_accuracy,
        "final_target_acc": None if final is None else final.target_accuracy,
        "final_gen_gap": None if final is None else final.generalization_gap,
    }


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


def _cmd_run(args) -> int:
    plan = parse_run_config(_load_config_file(args.config))
    summary = _execute_run(plan)
    print(f"wrote {summary['output']} ({summary['rounds']} rounds)")
    if summary["final_source_acc"] is not None:
        line = f"final source acc {summary['final_source_acc']:.4f}"
        if summary["final_target_acc"] is not None:
            line += f", target acc {summary['final_target_acc']:.4f}"
        print(line)
    return 0


_SWEEP_PARAMS = {
    "kappa": ("kappa", float),
    "global_lr": ("global_lr", float),
    "local_lr": ("local_lr", float),
    "epochs": ("local_epochs", int),
}


def _cmd_sweep(args) -> int:
    raw = _load_config_file(args.config)
    key, cast = _SWEEP_PARAMS[args.param]
    try:
        values = [cast(float(v)) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be a comma list of numbers: {exc}") from exc
    if not values:
        raise ConfigError("--values is empty")
    parse_run_config(raw)  # validate the base config before any work
    base_output = Path(raw.get("output", "sweep.csv"))
    summary = []
    for value in values:
        variant = dict(raw)
        variant[key] = value
        variant["output"] = str(
            base_output.with_name(f"{base_output.stem}_{args.param}={value}{base_output.suffix}")
        )
        plan = parse_run_config(variant)
        result = _execute_run(plan)
        result["param"] = args.param
        result["value"] = value
        summary.append(result)
        print(f"{args.param}={value}: wrote {result['output']}")
    summary_path = base_output.with_name(f"{base_output.stem}_{args.param}_sweep.json")
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"sweep summary: {summary_path}")
    return 0


def _cmd_oracle_check(args) -> int:
    gap = dual_gap_suite(args.instances, args.seed, samples=args.samples)
    print(f"max dual-oracle gap over {args.instances} instances: {gap:.3e}")
    if gap > ORACLE_GAP_LIMIT:
        print(f"FAIL: gap exceeds {ORACLE_GAP_LIMIT:.1e}")
        return 1
    print(f"OK: gap within {ORACLE_GAP_LIMIT:.1e}")
    return 0


def _cmd_gen_data(args) -> int:
    if args.dataset == "rect4":
        cfg = Rect4Config(points_per_domain=args.points, noise_fraction=args.noise,
                          seed=args.seed)
        payload = [
            {
                "domain_id": d.domain_id,
                "split": d.split,
                "inputs": d.batch.inputs.tolist(),
                "labels": d.batch.labels.tolist(),
            }
            for split in ("train", "test")
            for d in gen_rect4(cfg, split)
        ]
    else:
        train, test = blobs_train_test(args.classes, args.dim, args.points, args.points,
                                       args.seed)
        payload = [
            {"split": name, "inputs": b.inputs.tolist(), "labels": b.labels.tolist()}
            for name, b in (("train", train), ("test", test))
        ]
    Path(args.out).write_text(json.dumps(payload) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedomg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the config once per parameter value")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, choices=sorted(_SWEEP_PARAMS))
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle-check", help="brute-force dual-optimality check")
    p_oracle.add_argument("--instances", type=int, default=200)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--samples", type=int, default=10_000)
    p_oracle.set_defaults(func=_cmd_oracle_check)

    p_gen = sub.add_parser("gen-data", help="dump a generated dataset as JSON")
    p_gen.add_argument("--dataset", required=True, choices=["rect4", "blobs"])
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--points", type=int, default=200, help="per domain or per class")
    p_gen.add_argument("--noise", type=float, default=0.1, help="rect4 only")
    p_gen.add_argument("--classes", type=int, default=4, help="blobs only")
    p_gen.add_argument("--dim", type=int, default=2, help="blobs only")
    p_gen.set_defaults(func=_cmd_gen_data)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FedomgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
