"""Command-line interface.

Subcommands: info, fair, train, experiment, sweep. Results go to standard
output as JSON (or CSV for bare sweeps); progress notes go to standard error.
Exit codes: 0 success, 2 usage problem, 3 malformed data, 4 numeric failure.

Flag defaults can live in a flat ``key = value`` config file (``--config``);
explicit flags win over the file. The dataset argument is a directory path or
a bare name resolved under ``--data-root`` / the GFCN_DATA_ROOT variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .data import load_dataset, make_anomaly_task, smallest_class
from .evaluate import experiment_csv, run_experiment, sensitivity_sweep, sweep_csv
from .fairing import ConvergenceError, FairingConfig, fair_direct, fair_jacobi
from .formats import DatasetError, MissingDatasetFile, save_checkpoint, write_features
from .graph_core import EdgeError
from .optim import TrainConfig, TrainingError, train

DATA_ROOT_VAR = "GFCN_DATA_ROOT"


class UsageError(ValueError):
    pass


def _c_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"expected a number, got {raw!r}") from None


def _c_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"expected an integer, got {raw!r}") from None


def _c_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {raw!r}")


def _c_hidden(raw: str) -> tuple:
    raw = raw.strip()
    if not raw:
        return ()
    try:
        dims = tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise UsageError(f"hidden widths must be comma-separated integers, got {raw!r}") from None
    if any(d < 1 for d in dims):
        raise UsageError("hidden widths must be positive")
    return dims


def _c_floats(raw: str) -> tuple:
    try:
        return tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {raw!r}") from None


def _c_choice(*choices: str):
    def convert(raw: str) -> str:
        if raw not in choices:
            raise UsageError(f"expected one of {', '.join(choices)}; got {raw!r}")
        return raw

    return convert


_COMMON = {
    "config": (str, None),
    "data_root": (str, None),
}
_TRAINISH = {
    "label_rate": (_c_float, 0.05),
    "alpha": (_c_float, 4.0),
    "beta": (_c_float, 0.01),
    "lr": (_c_float, 0.05),
    "epochs": (_c_int, 100),
    "patience": (_c_int, 10),
    "hidden": (_c_hidden, (64,)),
    "label_mode": (_c_choice("normal_only", "both"), "normal_only"),
}

# dest -> (converter for config-file values, default) per command
SCHEMA = {
    "info": {**_COMMON},
    "fair": {
        **_COMMON,
        "s": (_c_float, None),
        "method": (_c_choice("direct", "jacobi"), "direct"),
        "tol": (_c_float, 1e-10),
        "max_iters": (_c_int, 0),
        "out": (str, None),
    },
    "train": {
        **_COMMON,
        **_TRAINISH,
        "seed": (_c_int, 0),
        "checkpoint_out": (str, None),
        "history_out": (str, None),
        "no_plot": (_c_bool, False),
    },
    "experiment": {
        **_COMMON,
        **_TRAINISH,
        "n_seeds": (_c_int, 10),
        "jobs": (_c_int, 1),
        "allow_failures": (_c_bool, False),
        "csv_out": (str, None),
        "no_plot": (_c_bool, False),
    },
    "sweep": {
        **_COMMON,
        **_TRAINISH,
        "param": (_c_choice("alpha", "beta"), None),
        "grid": (_c_floats, None),
        "label_rates": (_c_floats, None),
        "n_seeds": (_c_int, 10),
        "jobs": (_c_int, 1),
        "allow_failures": (_c_bool, False),
        "csv_out": (str, None),
        "no_plot": (_c_bool, False),
    },
}

ALL_CONFIG_KEYS = {key for schema in SCHEMA.values() for key in schema}


def _add_common(sub):
    sub.add_argument("dataset", help="dataset directory or name under the data root")
    sub.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value defaults file")
    sub.add_argument("--data-root", default=argparse.SUPPRESS, help=f"dataset root (or ${DATA_ROOT_VAR})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfcn",
        description="graph fairing and semi-supervised graph anomaly detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("info", help="print dataset summary statistics")
    _add_common(p)

    p = sub.add_parser("fair", help="smooth dataset features and write them out")
    _add_common(p)
    p.add_argument("--s", type=float, default=S, help="smoothing strength (>= 0)")
    p.add_argument("--method", choices=("direct", "jacobi"), default=S)
    p.add_argument("--tol", type=float, default=S, help="relative residual target")
    p.add_argument("--max-iters", type=int, default=S, help="iteration budget (0 = automatic)")
    p.add_argument("--out", default=S, help="output path for the smoothed feature block")

    def add_train_flags(p, with_seed):
        p.add_argument("--label-rate", type=float, default=S)
        if with_seed:
            p.add_argument("--seed", type=int, default=S)
        p.add_argument("--alpha", type=float, default=S, help="anomaly term weight")
        p.add_argument("--beta", type=float, default=S, help="weight penalty")
        p.add_argument("--lr", type=float, default=S, help="learning rate")
        p.add_argument("--epochs", type=int, default=S)
        p.add_argument("--patience", type=int, default=S)
        p.add_argument("--hidden", type=_c_hidden, default=S, help="comma-separated widths")
        p.add_argument("--label-mode", choices=("normal_only", "both"), default=S)

    p = sub.add_parser("train", help="train one model and report its test AUC")
    _add_common(p)
    add_train_flags(p, with_seed=True)
    p.add_argument("--checkpoint-out", default=S, help="write learned weights here")
    p.add_argument("--history-out", default=S, help="write per-epoch JSON lines here")
    p.add_argument("--no-plot", action="store_true", default=S)

    p = sub.add_parser("experiment", help="train across seeds and aggregate AUCs")
    _add_common(p)
    add_train_flags(p, with_seed=False)
    p.add_argument("--n-seeds", type=int, default=S)
    p.add_argument("--jobs", type=int, default=S, help="parallel workers")
    p.add_argument("--allow-failures", action="store_true", default=S)
    p.add_argument("--csv-out", default=S, help="write per-seed rows here")
    p.add_argument("--no-plot", action="store_true", default=S)

    p = sub.add_parser("sweep", help="sensitivity sweep over alpha or beta")
    _add_common(p)
    add_train_flags(p, with_seed=False)
    p.add_argument("--param", choices=("alpha", "beta"), default=S)
    p.add_argument("--grid", type=_c_floats, default=S, help="comma-separated values")
    p.add_argument("--label-rates", type=_c_floats, default=S, help="comma-separated rates")
    p.add_argument("--n-seeds", type=int, default=S)
    p.add_argument("--jobs", type=int, default=S)
    p.add_argument("--allow-failures", action="store_true", default=S)
    p.add_argument("--csv-out", default=S, help="write per-seed rows here")
    p.add_argument("--no-plot", action="store_true", default=S)

    return parser


def read_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {path} does not exist")
    values = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip().replace("-", "_")
        if key not in ALL_CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = raw.strip()
    return values


def merge_options(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    schema = SCHEMA[args.command]
    explicit = {k: v for k, v in vars(args).items() if k not in ("command",)}
    opts = {dest: default for dest, (_, default) in schema.items()}
    config_path = explicit.get("config")
    if config_path is not None:
        for key, raw in read_config(config_path).items():
            if key in schema:
                opts[key] = schema[key][0](raw)
    opts.update(explicit)
    return opts


def resolve_dataset_dir(token: str, data_root) -> Path:
    direct = Path(token)
    if direct.is_dir():
        return direct
    if data_root:
        candidate = Path(data_root) / token
        if candidate.is_dir():
            return candidate
        raise MissingDatasetFile(
            f"dataset {token!r} not found: no directory {direct} and no {candidate}"
        )
    raise MissingDatasetFile(
        f"dataset {token!r} not found: no directory {direct} "
        f"(pass a path, or set --data-root / ${DATA_ROOT_VAR})"
    )


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _note(text: str) -> None:
    print(text, file=sys.stderr)


def _load(opts) -> "Dataset":
    root = opts.get("data_root") or os.environ.get(DATA_ROOT_VAR)
    return load_dataset(resolve_dataset_dir(opts["dataset"], root))


def _require(opts, key: str, flag: str):
    if opts.get(key) is None:
        raise UsageError(f"{flag} is required")
    return opts[key]


def _train_config(opts, seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate=opts["lr"],
        max_epochs=opts["epochs"],
        patience=opts["patience"],
        alpha=opts["alpha"],
        beta=opts["beta"],
        seed=seed,
        hidden_dims=tuple(opts["hidden"]),
    )


def _check_rate(rate: float) -> float:
    if not 0.0 < rate < 1.0:
        raise UsageError(f"label rate must lie strictly between 0 and 1, got {rate}")
    return rate


def _png_path(base: str) -> Path:
    return Path(base).with_suffix(".png")


def cmd_info(opts) -> int:
    ds = _load(opts)
    anomaly = smallest_class(ds)
    counts = np.bincount(ds.class_labels, minlength=ds.num_classes)
    _emit(
        {
            "name": ds.name,
            "nodes": ds.num_nodes,
            "edges": int(ds.graph.num_edges),
            "features": ds.num_features,
            "classes": int(ds.num_classes),
            "smallest_class": anomaly,
            "anomaly_rate": float(counts[anomaly] / ds.num_nodes),
        }
    )
    return 0


def cmd_fair(opts) -> int:
    s = _require(opts, "s", "--s")
    out = _require(opts, "out", "--out")
    ds = _load(opts)
    cfg = FairingConfig(s=s, tol=opts["tol"], max_iters=opts["max_iters"])
    solver = fair_direct if opts["method"] == "direct" else fair_jacobi
    _note(f"smoothing {ds.name} features with s={s:g} ({opts['method']})")
    smoothed, report = solver(ds.graph, ds.features, cfg)
    write_features(out, smoothed)
    _emit(
        {
            "method": opts["method"],
            "s": float(s),
            "tol": float(opts["tol"]),
            "iterations": report.iterations,
            "final_residual": report.final_residual,
            "out": str(out),
        }
    )
    return 0


def cmd_train(opts) -> int:
    rate = _check_rate(opts["label_rate"])
    ds = _load(opts)
    task = make_anomaly_task(ds, rate, seed=opts["seed"], label_mode=opts["label_mode"])
    cfg = _train_config(opts, seed=opts["seed"])
    _note(f"training on {ds.name} (rate {rate:g}, seed {opts['seed']})")
    params, result = train(ds.graph, ds.features, task, cfg)
    if opts.get("checkpoint_out"):
        save_checkpoint(opts["checkpoint_out"], params, seed=cfg.seed)
    if opts.get("history_out"):
        lines = []
        for epoch, train_loss, val_loss in result.history:
            lines.append(
                json.dumps(
                    {
                        "epoch": epoch,
                        "train_loss": train_loss,
                        "val_loss": None if math.isnan(val_loss) else val_loss,
                    },
                    sort_keys=True,
                )
            )
        Path(opts["history_out"]).write_text("".join(line + "\n" for line in lines))
        if not opts["no_plot"]:
            from .plots import save_history_plot

            save_history_plot(_png_path(opts["history_out"]), result.history)
    payload = result.to_dict()
    if opts.get("checkpoint_out"):
        payload["checkpoint"] = str(opts["checkpoint_out"])
    _emit(payload)
    return 0


def cmd_experiment(opts) -> int:
    rate = _check_rate(opts["label_rate"])
    ds = _load(opts)
    cfg = _train_config(opts, seed=0)
    _note(f"running {opts['n_seeds']} seeds on {ds.name} (rate {rate:g})")
    summary = run_experiment(
        ds,
        rate,
        cfg,
        n_seeds=opts["n_seeds"],
        label_mode=opts["label_mode"],
        jobs=opts["jobs"],
        allow_failures=opts["allow_failures"],
    )
    if opts.get("csv_out"):
        Path(opts["csv_out"]).write_text(experiment_csv(summary))
        if not opts["no_plot"]:
            from .plots import save_experiment_plot

            save_experiment_plot(_png_path(opts["csv_out"]), summary)
    _emit(summary.to_row())
    return 0


def cmd_sweep(opts) -> int:
    param = _require(opts, "param", "--param")
    grid = _require(opts, "grid", "--grid")
    rates = _require(opts, "label_rates", "--label-rates")
    for rate in rates:
        _check_rate(rate)
    ds = _load(opts)
    cfg = _train_config(opts, seed=0)
    _note(
        f"sweeping {param} over {len(grid)} values x {len(rates)} rates on {ds.name}"
    )
    rows = sensitivity_sweep(
        ds,
        rates,
        param,
        grid,
        cfg,
        n_seeds=opts["n_seeds"],
        label_mode=opts["label_mode"],
        jobs=opts["jobs"],
        allow_failures=opts["allow_failures"],
    )
    csv_text = sweep_csv(rows, param)
    if opts.get("csv_out"):
        Path(opts["csv_out"]).write_text(csv_text)
        if not opts["no_plot"]:
            from .plots import save_sweep_plot

            save_sweep_plot(_png_path(opts["csv_out"]), rows, param)
        _emit(
            [
                {
                    "label_rate": rate,
                    "value": value,
                    "mean_auc": summary.mean_auc,
                    "std_auc": summary.std_auc,
                }
                for rate, value, summary in rows
            ]
        )
    else:
        sys.stdout.write(csv_text)
    return 0


_DISPATCH = {
    "info": cmd_info,
    "fair": cmd_fair,
    "train": cmd_train,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        opts = merge_options(args)
        return _DISPATCH[args.command](opts)
    except UsageError as e:
        _note(f"error: {e}")
        return 2
    except MissingDatasetFile as e:
        _note(f"error: {e}")
        return 2
    except (DatasetError, EdgeError) as e:
        _note(f"error: {e}")
        return 3
    except (TrainingError, ConvergenceError) as e:
        _note(f"error: {e}")
        return 4
    except ValueError as e:
        _note(f"error: {e}")
        return 2


def entry() -> None:
    sys.exit(main())
