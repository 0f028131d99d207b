"""Command-line front end: train, predict, eval, gridsearch, and bench.

Exit codes: 0 success (a warned non-convergence still exits 0), 2 usage
error, 3 data error, 4 numerical error.  All outputs are deterministic
for a fixed config and seed, except wall-clock fields, which live under
'timing' keys (and the top-level 'timestamp') so they can be excluded
when comparing runs; see :func:`stable_report_bytes`.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import data as data_mod
from .data import CLASSIFICATION, REGRESSION, Dataset
from .errors import DataFormatError, InvalidInputError, NumericalError
from .kernels import GAUSSIAN, LINEAR, KernelSpec
from .model import evaluate, load, predict_class, predict_raw, save
from .solver import (
    AnnealSchedule,
    SolverConfig,
    train,
    train_annealed,
    train_lssvm,
)

TASK_ALIASES = {"class": CLASSIFICATION, "reg": REGRESSION,
                CLASSIFICATION: CLASSIFICATION, REGRESSION: REGRESSION}

VOLATILE_KEYS = ("timestamp", "timing")


def stable_report_bytes(doc) -> bytes:
    """Canonical JSON bytes of a report with volatile timing fields removed.

    Two runs with identical config and seed produce identical stable bytes.
    """
    if isinstance(doc, (str, Path)):
        with open(doc) as fh:
            doc = json.load(fh)

    def strip(node):
        if isinstance(node, dict):
            return {k: strip(v) for k, v in node.items() if k not in VOLATILE_KEYS}
        if isinstance(node, list):
            return [strip(v) for v in node]
        return node

    return (json.dumps(strip(doc), sort_keys=True, indent=2) + "\n").encode()


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SRLSSVM_THREADS", "1")))
    except ValueError:
        return 1


def _load_config_file(path: str) -> dict:
    """JSON or flat 'key = value' TOML-style config."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"bad JSON config: {exc.msg}", offset=exc.pos)
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        tomllib = None
    if tomllib is not None:
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise DataFormatError(f"bad TOML config: {exc}")
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DataFormatError("expected 'key = value'", line=lineno)
        key = key.strip()
        val = val.strip().strip('"').strip("'")
        if val.lower() in ("true", "false"):
            values[key] = val.lower() == "true"
        else:
            try:
                values[key] = int(val)
            except ValueError:
                try:
                    values[key] = float(val)
                except ValueError:
                    values[key] = val
    return values


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from --config; explicit flags win."""
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config)
        for key, val in file_values.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and getattr(args, attr) is None:
                setattr(args, attr, val)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise InvalidInputError(f"missing required option --{name.replace('_', '-')}")


def _task(args) -> str:
    name = str(args.task)
    if name not in TASK_ALIASES:
        raise InvalidInputError(f"unknown task {name!r}; use class or reg")
    return TASK_ALIASES[name]


def _kernel(args) -> KernelSpec:
    family = str(args.kernel)
    if family == GAUSSIAN:
        if args.sigma is None:
            raise InvalidInputError("gaussian kernel requires --sigma")
        return KernelSpec(GAUSSIAN, float(args.sigma))
    if family == LINEAR:
        return KernelSpec(LINEAR)
    raise InvalidInputError(f"unknown kernel {family!r}")


def _solver_config(args, *, tau=None, mlambda=None) -> SolverConfig:
    anneal = None
    if args.anneal_delta is not None or args.tau_min is not None:
        if args.anneal_delta is None or args.tau_min is None:
            raise InvalidInputError("annealing needs both --anneal-delta and --tau-min")
        anneal = AnnealSchedule(float(args.anneal_delta), float(args.tau_min))
    return SolverConfig(
        lambda_m=float(mlambda if mlambda is not None else args.mlambda),
        tau=float(tau if tau is not None else args.tau),
        rank_r=int(args.rank),
        p=float(args.p) if args.p is not None else 1e4,
        epsilon=float(args.epsilon) if args.epsilon is not None else 1e-2,
        max_iter=int(args.max_iter) if args.max_iter is not None else 200,
        anneal=anneal,
    )


def _read_dataset(path: str, task: str) -> Dataset:
    if not Path(path).exists():
        raise DataFormatError(f"dataset file not found: {path}")
    return data_mod.parse_sparse_text(path, task)


def _pad_features(dataset: Dataset, width: int) -> Dataset:
    """Zero-pad columns when a sparse file omits the highest feature indices."""
    if dataset.l == width:
        return dataset
    if dataset.l > width:
        raise InvalidInputError(
            f"data has {dataset.l} features but the model expects {width}")
    X = np.zeros((dataset.m, width))
    X[:, :dataset.l] = dataset.features
    return Dataset(X, dataset.targets, dataset.task, dataset.meta)


def _float_list(text) -> list[float]:
    if text is None:
        return []
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def fmt_mean_std(mean: float, std: float, nd: int = 2) -> str:
    """Table-style 'mean(std)' text, e.g. '0.03(0.00)'."""
    return f"{mean:.{nd}f}({std:.{nd}f})"


# ---------------------------------------------------------------- train

def run_train(args) -> int:
    _require(args, "data", "task", "kernel", "mlambda", "tau", "rank", "out")
    task = _task(args)
    spec = _kernel(args)
    config = _solver_config(args)
    dataset = _read_dataset(args.data, task)

    trainer = train_annealed if config.anneal is not None else train
    model, report = trainer(dataset, spec, config)
    save(model, args.out)

    doc = {"timestamp": _timestamp(), "n_sv": model.n_sv, **report.as_dict()}
    if args.test:
        ev = evaluate(model, _read_dataset(args.test, task))
        doc["eval"] = ev.as_dict()
    report_path = args.report or str(args.out) + ".report.json"
    _write_json(report_path, doc)

    metric = ""
    if "eval" in doc:
        key = "accuracy" if task == CLASSIFICATION else "rmse"
        metric = f"  test {key} {doc['eval'][key]:.4f}"
    flag = "" if report.converged else "  [warning: not converged]"
    print(f"trained: iterations {report.iterations}  "
          f"time {report.wall_time_ms:.1f} ms  n_sv {model.n_sv}{metric}{flag}")
    return 0


# -------------------------------------------------------------- predict

def run_predict(args) -> int:
    _require(args, "model", "data", "out")
    model = load(args.model)
    # labels are ignored when predicting, so parse leniently (dummy labels ok)
    dataset = _pad_features(_read_dataset(args.data, REGRESSION),
                            model.landmarks.shape[1])
    f = predict_raw(model, dataset.features)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if model.task == CLASSIFICATION:
            writer.writerow(["raw", "label"])
            labels = predict_class(model, dataset.features)
            for fi, li in zip(f, labels):
                writer.writerow([repr(float(fi)), int(li)])
        else:
            writer.writerow(["prediction"])
            for fi in f:
                writer.writerow([repr(float(fi))])
    print(f"wrote {dataset.m} predictions to {args.out}")
    return 0


# ----------------------------------------------------------------- eval

def run_eval(args) -> int:
    _require(args, "model", "data")
    model = load(args.model)
    dataset = _pad_features(_read_dataset(args.data, model.task),
                            model.landmarks.shape[1])
    report = evaluate(model, dataset)
    doc = {"timestamp": _timestamp(), **report.as_dict()}
    if args.out:
        _write_json(args.out, doc)
    key = "accuracy" if model.task == CLASSIFICATION else "rmse"
    print(f"{key} {getattr(report, key):.6f}  n_sv {report.n_sv}")
    return 0


# ----------------------------------------------------------- gridsearch

def _fold_parts(m: int, folds: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(m)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def run_gridsearch(args) -> int:
    _require(args, "data", "task", "kernel", "mlambda", "tau", "rank", "out")
    task = _task(args)
    family = str(args.kernel)
    mlambdas = _float_list(args.mlambda)
    taus = _float_list(args.tau)
    sigmas = _float_list(args.sigma) if family == GAUSSIAN else [None]
    if not mlambdas or not taus or not sigmas:
        raise InvalidInputError("gridsearch needs nonempty --mlambda/--sigma/--tau grids")
    folds = int(args.folds) if args.folds is not None else 5
    seed = int(args.seed) if args.seed is not None else 0
    dataset = _read_dataset(args.data, task)
    if folds < 2 or folds > dataset.m:
        raise InvalidInputError(f"--folds must be in [2, m={dataset.m}]")

    parts = _fold_parts(dataset.m, folds, seed)
    usable: list[tuple[np.ndarray, np.ndarray]] = []
    skipped = 0
    for k, part in enumerate(parts):
        train_idx = np.sort(np.concatenate([p for i, p in enumerate(parts) if i != k]))
        if task == CLASSIFICATION and np.unique(dataset.targets[train_idx]).size < 2:
            print(f"warning: fold {k} has a single training class; skipped",
                  file=sys.stderr)
            skipped += 1
            continue
        usable.append((train_idx, part))
    if not usable:
        raise InvalidInputError("all cross-validation folds were skipped")

    grid = [(ml, sg, tv) for ml in sorted(mlambdas) for sg in sorted(
        sigmas, key=lambda s: (s is None, s)) for tv in sorted(taus)]

    def score_tuple(entry):
        ml, sg, tv = entry
        spec = KernelSpec(family, sg) if family == GAUSSIAN else KernelSpec(LINEAR)
        config = _solver_config(args, tau=tv, mlambda=ml)
        scores = []
        for train_idx, val_idx in usable:
            model, _ = train(dataset.take(train_idx), spec, config)
            ev = evaluate(model, dataset.take(val_idx))
            scores.append(ev.accuracy if task == CLASSIFICATION else ev.rmse)
        return entry, float(np.mean(scores)), float(np.std(scores))

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score_tuple, grid))
    else:
        results = [score_tuple(entry) for entry in grid]
    results.sort(key=lambda row: (row[0][0], row[0][1] if row[0][1] is not None else -1.0,
                                  row[0][2]))

    sign = 1.0 if task == CLASSIFICATION else -1.0
    # best score first; ties prefer larger mlambda, smaller sigma, larger tau
    best = max(results, key=lambda row: (sign * row[1], row[0][0],
                                         -(row[0][1] or 0.0), row[0][2]))
    metric = "accuracy" if task == CLASSIFICATION else "rmse"

    rows = [{"mlambda": ml, "sigma": sg, "tau": tv,
             f"{metric}_mean": mean, f"{metric}_std": std}
            for (ml, sg, tv), mean, std in results]
    chosen = {"mlambda": best[0][0], "sigma": best[0][1], "tau": best[0][2],
              f"{metric}_mean": best[1], f"{metric}_std": best[2]}
    if (args.format or "json") == "csv":
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["mlambda", "sigma", "tau", metric])
            for (ml, sg, tv), mean, std in results:
                writer.writerow([ml, "" if sg is None else sg, tv,
                                 fmt_mean_std(mean, std, 4)])
    else:
        _write_json(args.out, {"grid": rows, "chosen": chosen,
                               "folds_used": len(usable), "folds_skipped": skipped})
    print(f"best: mlambda {chosen['mlambda']} sigma {chosen['sigma']} "
          f"tau {chosen['tau']}  {metric} {best[1]:.4f}")
    return 0


# ---------------------------------------------------------------- bench

METHODS = {"srlssvm": train, "lssvm": train_lssvm}


def run_bench(args) -> int:
    _require(args, "data", "task", "kernel", "mlambda", "tau", "rank", "out")
    task = _task(args)
    spec = _kernel(args)
    config = _solver_config(args)
    repeats = int(args.repeats) if args.repeats is not None else 10
    if repeats < 1:
        raise InvalidInputError("--repeats must be >= 1")
    rate = float(args.outlier_rate) if args.outlier_rate is not None else 0.10
    seed = int(args.seed) if args.seed is not None else 0
    methods = [m.strip() for m in str(args.methods or "srlssvm").split(",") if m.strip()]
    for name in methods:
        if name not in METHODS:
            raise InvalidInputError(f"unknown method {name!r}; choose from {sorted(METHODS)}")

    clean_train = _read_dataset(args.data, task)
    if args.test:
        test_set = _read_dataset(args.test, task)
    else:
        clean_train, test_set = data_mod.split(clean_train, 2.0 / 3.0, seed)

    reference = None
    if task == CLASSIFICATION and rate > 0:
        reference, _ = train_lssvm(clean_train, spec, config)

    def one_trial(rep: int):
        trial_seed = seed + rep
        if rate > 0:
            if task == CLASSIFICATION:
                corrupted, _ = data_mod.inject_label_outliers(
                    clean_train, rate_pool=3.0 * rate, flip_fraction=1.0 / 3.0,
                    reference=reference, seed=trial_seed)
            else:
                corrupted, _ = data_mod.inject_target_noise(
                    clean_train, rate=rate, seed=trial_seed)
        else:
            corrupted = clean_train
        out = {}
        for name in methods:
            t0 = time.perf_counter()
            model, report = METHODS[name](corrupted, spec, config)
            elapsed = time.perf_counter() - t0
            ev = evaluate(model, test_set)
            out[name] = {
                "metric": ev.accuracy if task == CLASSIFICATION else ev.rmse,
                "time_s": elapsed,
                "iterations": report.iterations,
                "n_sv": model.n_sv,
            }
        return rep, out

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(one_trial, range(repeats)))
    else:
        trials = [one_trial(rep) for rep in range(repeats)]
    trials.sort(key=lambda item: item[0])

    metric = "accuracy" if task == CLASSIFICATION else "rmse"
    rows = []
    for name in sorted(methods):
        series = {key: np.array([out[name][key] for _, out in trials])
                  for key in ("metric", "time_s", "iterations", "n_sv")}
        rows.append({
            "method": name,
            "mlambda": config.lambda_m,
            "sigma": spec.sigma,
            "tau": config.tau,
            "repeats": repeats,
            f"{metric}_mean": float(series["metric"].mean()),
            f"{metric}_std": float(series["metric"].std()),
            "time_s_mean": float(series["time_s"].mean()),
            "time_s_std": float(series["time_s"].std()),
            "iterations_mean": float(series["iterations"].mean()),
            "iterations_std": float(series["iterations"].std()),
            "n_sv_mean": float(series["n_sv"].mean()),
            "n_sv_std": float(series["n_sv"].std()),
        })

    if (args.format or "json") == "csv":
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "mlambda", "sigma", "tau", "iterations",
                             "time_s", "n_sv", metric])
            for row in rows:
                writer.writerow([
                    row["method"], row["mlambda"],
                    "" if row["sigma"] is None else row["sigma"], row["tau"],
                    fmt_mean_std(row["iterations_mean"], row["iterations_std"], 1),
                    fmt_mean_std(row["time_s_mean"], row["time_s_std"], 2),
                    fmt_mean_std(row["n_sv_mean"], row["n_sv_std"], 1),
                    fmt_mean_std(row[f"{metric}_mean"], row[f"{metric}_std"], 4),
                ])
    else:
        _write_json(args.out, {"timestamp": _timestamp(), "rows": rows})
    for row in rows:
        print(f"{row['method']}: {metric} "
              f"{fmt_mean_std(row[f'{metric}_mean'], row[f'{metric}_std'], 4)}  "
              f"n_sv {fmt_mean_std(row['n_sv_mean'], row['n_sv_std'], 1)}")
    return 0


# ----------------------------------------------------------------- main

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON or key=value config file; flags override")
    sub.add_argument("--data", help="training data (sparse text format)")
    sub.add_argument("--test", help="held-out data (sparse text format)")
    sub.add_argument("--task", help="class or reg")
    sub.add_argument("--kernel", help="gaussian or linear")
    sub.add_argument("--sigma", type=float, help="gaussian kernel width")
    sub.add_argument("--mlambda", help="regularization m*lambda (list allowed in gridsearch)")
    sub.add_argument("--tau", help="truncation level (list allowed in gridsearch)")
    sub.add_argument("--p", type=float, help="smoothing sharpness (default 1e4)")
    sub.add_argument("--epsilon", type=float, help="stop threshold (default 1e-2)")
    sub.add_argument("--rank", type=int, help="low-rank budget r")
    sub.add_argument("--max-iter", type=int, help="iteration cap (default 200)")
    sub.add_argument("--anneal-delta", type=float, help="tau shrink factor in (0,1)")
    sub.add_argument("--tau-min", type=float, help="annealing floor for tau")
    sub.add_argument("--seed", type=int, help="random seed (default 0)")
    sub.add_argument("--out", help="output path")
    sub.add_argument("--format", choices=("json", "csv"), help="table output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srlssvm",
        description="Sparse robust least-squares SVM training and evaluation")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("train", help="train a model")
    _add_common(p)
    p.add_argument("--report", help="train report path (default <out>.report.json)")
    p.set_defaults(func=run_train)

    p = subs.add_parser("predict", help="predict with a saved model")
    _add_common(p)
    p.add_argument("--model", help="model file")
    p.set_defaults(func=run_predict)

    p = subs.add_parser("eval", help="evaluate a saved model")
    _add_common(p)
    p.add_argument("--model", help="model file")
    p.set_defaults(func=run_eval)

    p = subs.add_parser("gridsearch", help="cross-validated grid search")
    _add_common(p)
    p.add_argument("--folds", type=int, help="CV folds (default 5)")
    p.set_defaults(func=run_gridsearch)

    p = subs.add_parser("bench", help="repeated outlier-injection benchmark")
    _add_common(p)
    p.add_argument("--repeats", type=int, help="number of seeded trials (default 10)")
    p.add_argument("--outlier-rate", type=float, help="net outlier rate (default 0.1)")
    p.add_argument("--methods", help="comma list from {srlssvm,lssvm}")
    p.set_defaults(func=run_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
