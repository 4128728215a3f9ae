"""Command-line entry point: ``ghmloss {train,grid,density,prox,fit}``.

Every command reads an experiment configuration assembled from defaults, an
optional ``--config`` JSON file and explicit flags (flags win). Results are
written as JSON with sorted keys so that identical runs give identical bytes
apart from the wall-clock field.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 for runtime
or numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ghmloss import __version__
from ghmloss.data import CSVParseError, Dataset, load_csv, synth_dataset
from ghmloss.embedding import DegenerateEmbeddingError
from ghmloss.geometric import cosine_proximity
from ghmloss.loss import LossConfig, NonFiniteGradientError
from ghmloss.metrics import classification_report
from ghmloss.model import MLP, MLPConfig
from ghmloss.probabilistic import (
    EMSettings,
    GridCoverageError,
    discretize,
    fit_gmm,
    js_divergence,
    js_proximity,
    shared_bounds,
)
from ghmloss.train import (
    FoldResult,
    TrainConfig,
    TrainingError,
    k_fold_cv,
    predict_proba,
    stratified_folds,
    train,
)

log = logging.getLogger("ghmloss")

#: Schema version of the JSON results document.
RESULTS_VERSION = 1

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

DEFAULTS = {
    "data": "synth",
    "classes": 4,
    "per_class": 50,
    "dim": 16,
    "separation": 6.0,
    "noise": 1.0,
    "beta": 1.0,
    "lambda": 0.5,
    "sign_mode": "similarity",
    "gmm_k": 2,
    "sigma_floor": 1e-3,
    "em_max_iter": 100,
    "em_tol": 1e-6,
    "grid_size": 512,
    "hidden": [64, 64],
    "embed_dim": 128,
    "epochs": 200,
    "batch": 8,
    "lr": 1e-4,
    "weight_decay": 1e-4,
    "folds": 10,
    "seed": 0,
}

GRID_DEFAULTS = {"beta": [0.0, 0.5, 1.0, 2.0], "lambda": [0.0, 0.25, 0.5, 0.75, 1.0]}

RUNTIME_ERRORS = (TrainingError, NonFiniteGradientError, GridCoverageError, DegenerateEmbeddingError, FloatingPointError)


class ConfigError(ValueError):
    """Invalid configuration; reported with exit code 2."""


# ---------------------------------------------------------------------------
# Configuration


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_experiment_flags(p: argparse.ArgumentParser, grid: bool = False):
    S = argparse.SUPPRESS
    g = p.add_argument_group("data")
    g.add_argument("--data", default=S, help="'synth' or a CSV path with rows 'label,f1,...,fD'")
    g.add_argument("--classes", type=int, default=S)
    g.add_argument("--per-class", dest="per_class", type=int, default=S)
    g.add_argument("--dim", type=int, default=S)
    g.add_argument("--separation", type=float, default=S)
    g.add_argument("--noise", type=float, default=S)
    g = p.add_argument_group("loss")
    lists = " (comma-separated list)" if grid else ""
    g.add_argument("--beta", type=_float_list, default=S, help="metric-branch weight" + lists)
    g.add_argument("--lambda", dest="lambda", type=_float_list, default=S, help="geometric weight" + lists)
    g.add_argument("--sign-mode", dest="sign_mode", choices=["similarity", "literal_eq8"], default=S)
    g.add_argument("--gmm-k", dest="gmm_k", type=int, default=S)
    g.add_argument("--sigma-floor", dest="sigma_floor", type=float, default=S)
    g.add_argument("--em-max-iter", dest="em_max_iter", type=int, default=S)
    g.add_argument("--em-tol", dest="em_tol", type=float, default=S)
    g.add_argument("--grid-size", dest="grid_size", type=int, default=S)
    g = p.add_argument_group("model and optimizer")
    g.add_argument("--hidden", type=_int_list, default=S, help="hidden layer widths, e.g. 64,64")
    g.add_argument("--embed-dim", dest="embed_dim", type=int, default=S)
    g.add_argument("--epochs", type=int, default=S)
    g.add_argument("--batch", type=int, default=S)
    g.add_argument("--lr", type=float, default=S)
    g.add_argument("--weight-decay", dest="weight_decay", type=float, default=S)
    g.add_argument("--folds", type=int, default=S, help="k for cross-validation; 1 trains on all data")
    g.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", type=Path, help="JSON config file, or a results document to re-run")


def load_config_file(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and "version" in doc and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def resolve_config(ns: argparse.Namespace, grid: bool = False) -> dict:
    """Defaults, then the config file, then explicit flags; unknown keys are rejected."""
    cfg = dict(DEFAULTS)
    if grid:
        cfg.update(GRID_DEFAULTS)
    if getattr(ns, "config", None) is not None:
        from_file = load_config_file(ns.config)
        unknown = sorted(set(from_file) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(from_file)
    cfg.update({k: v for k, v in vars(ns).items() if k in DEFAULTS})
    return _normalize(cfg, grid)


def _as_list(value, key):
    values = value if isinstance(value, list) else [value]
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number or a list of numbers, got {value!r}") from None
    if not out:
        raise ConfigError(f"{key} must not be empty")
    return out


def _dedupe(values, key):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    if len(seen) < len(values):
        log.warning("duplicate %s values removed: %s -> %s", key, values, seen)
    return seen


def _normalize(cfg: dict, grid: bool) -> dict:
    ints = ("classes", "per_class", "dim", "gmm_k", "em_max_iter", "grid_size", "embed_dim", "epochs", "batch", "folds", "seed")
    floats = ("separation", "noise", "sigma_floor", "em_tol", "lr", "weight_decay")
    out = dict(cfg)
    try:
        for k in ints:
            if isinstance(out[k], bool) or float(out[k]) != int(out[k]):
                raise ValueError
            out[k] = int(out[k])
        for k in floats:
            out[k] = float(out[k])
        k = "hidden"
        out[k] = [int(h) for h in out[k]]
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {k!r}: {cfg.get(k)!r}") from None
    if not isinstance(out["data"], str):
        raise ConfigError("data must be 'synth' or a CSV path")
    for key in ("beta", "lambda"):
        values = _as_list(out[key], key)
        if grid:
            out[key] = _dedupe(values, key)
        elif len(values) != 1:
            raise ConfigError(f"{key} takes a single value here; use the grid command for sweeps")
        else:
            out[key] = values[0]
    # Build every settings object once so that invalid values surface before any work.
    for beta in out["beta"] if grid else [out["beta"]]:
        for lam in out["lambda"] if grid else [out["lambda"]]:
            loss_config(out, beta, lam)
    train_config(out, out["beta"][0] if grid else out["beta"], out["lambda"][0] if grid else out["lambda"])
    if out["data"] == "synth":
        if out["classes"] < 2 or out["per_class"] < 2 or out["dim"] < 1 or out["noise"] < 0:
            raise ConfigError("synthetic data needs classes >= 2, per_class >= 2, dim >= 1 and noise >= 0")
    return out


def em_settings(cfg: dict) -> EMSettings:
    try:
        return EMSettings(K=cfg["gmm_k"], max_iter=cfg["em_max_iter"], tol=cfg["em_tol"], seed=cfg["seed"],
                          sigma_floor=cfg["sigma_floor"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def loss_config(cfg: dict, beta: float, lam: float) -> LossConfig:
    try:
        return LossConfig(lam=lam, beta=beta, sign_mode=cfg["sign_mode"], gmm=em_settings(cfg),
                          grid_size=cfg["grid_size"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_config(cfg: dict, beta: float, lam: float) -> TrainConfig:
    try:
        return TrainConfig(batch_size=cfg["batch"], learning_rate=cfg["lr"], weight_decay=cfg["weight_decay"],
                           epochs=cfg["epochs"], loss=loss_config(cfg, beta, lam), folds=cfg["folds"],
                           seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def model_config(cfg: dict, ds: Dataset) -> MLPConfig:
    try:
        return MLPConfig(input_dim=ds.dim, num_classes=ds.num_classes, hidden_dims=tuple(cfg["hidden"]),
                         embed_dim=cfg["embed_dim"], seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_dataset(cfg: dict) -> Dataset:
    if cfg["data"] == "synth":
        return synth_dataset(cfg["classes"], cfg["per_class"], cfg["dim"], cfg["separation"], cfg["noise"],
                             seed=cfg["seed"])
    try:
        return load_csv(cfg["data"])
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None
    except CSVParseError as exc:
        raise ConfigError(f"cannot read {cfg['data']}: {exc}") from None


# ---------------------------------------------------------------------------
# Experiments


def summarize(folds: list[FoldResult]) -> dict:
    out = {}
    for name in ("auc", "accuracy", "precision", "recall", "f1"):
        values = np.array([getattr(f.metrics, name) for f in folds])
        out[name] = {"mean": float(values.mean()), "std": float(values.std())}
    return out


def run_experiment(cfg: dict, ds: Dataset, beta: float, lam: float) -> list[FoldResult]:
    tcfg = train_config(cfg, beta, lam)
    mcfg = model_config(cfg, ds)
    if tcfg.folds == 1:
        out = train(MLP(mcfg), ds, tcfg)
        report = classification_report(predict_proba(out.model, ds.features), ds.labels)
        return [FoldResult(0, report, out.final_loss, out.trajectory, np.arange(len(ds)))]
    try:
        stratified_folds(ds.labels, tcfg.folds, tcfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return k_fold_cv(ds, mcfg, tcfg)


def _document(command: str, cfg: dict, started: float, **body) -> dict:
    doc = {"version": RESULTS_VERSION, "artifact_version": __version__, "command": command, "config": cfg}
    doc.update(body)
    doc["wall_clock_seconds"] = time.perf_counter() - started
    return doc


def dump_json(doc, path: Path | None = None, compact: bool = False) -> str:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":") if compact else None, indent=None if compact else 2,
                      allow_nan=True)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")
    return text


def cmd_train(ns) -> int:
    started = time.perf_counter()
    cfg = resolve_config(ns)
    ds = load_dataset(cfg)
    folds = run_experiment(cfg, ds, cfg["beta"], cfg["lambda"])
    doc = _document("train", cfg, started, folds=[f.to_dict() for f in folds], summary=summarize(folds))
    dump_json(doc, ns.out)
    if ns.json:
        print(dump_json(doc, compact=True))
    else:
        s = doc["summary"]
        print(f"{len(folds)} fold(s): auc {s['auc']['mean']:.4f} ± {s['auc']['std']:.4f}, "
              f"accuracy {s['accuracy']['mean']:.4f} ± {s['accuracy']['std']:.4f}")
    return EXIT_OK


def _grid_cell(args):
    cfg, ds, beta, lam = args
    try:
        folds = run_experiment(cfg, ds, beta, lam)
    except (*RUNTIME_ERRORS, ConfigError) as exc:
        return {"beta": beta, "lambda": lam, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    return {"beta": beta, "lambda": lam, "status": "ok", "summary": summarize(folds),
            "folds": [f.to_dict() for f in folds]}


def run_grid(cfg: dict, ds: Dataset, jobs: int = 1) -> list[dict]:
    tasks = [(cfg, ds, b, lam) for b in cfg["beta"] for lam in cfg["lambda"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_grid_cell, tasks))
    return [_grid_cell(t) for t in tasks]


def auc_matrix(cfg: dict, cells: list[dict]) -> list[list[float | None]]:
    by_key = {(c["beta"], c["lambda"]): c for c in cells}
    rows = []
    for b in cfg["beta"]:
        cell = [by_key[(b, lam)] for lam in cfg["lambda"]]
        rows.append([c["summary"]["auc"]["mean"] if c["status"] == "ok" else None for c in cell])
    return rows


def write_grid_csvs(out_dir: Path, cfg: dict, cells: list[dict], table_lambda: float = 0.5):
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix = auc_matrix(cfg, cells)
    with (out_dir / "auc_matrix.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta \\ lambda", *(repr(lam) for lam in cfg["lambda"])])
        for b, row in zip(cfg["beta"], matrix):
            w.writerow([repr(b), *("failed" if v is None else repr(v) for v in row)])
    if table_lambda not in cfg["lambda"]:
        log.warning("lambda=%s is not in the grid; per-beta table not written", table_lambda)
        return
    names = ("auc", "accuracy", "precision", "recall", "f1")
    with (out_dir / "beta_table.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", *names])
        for c in cells:
            if c["lambda"] != table_lambda:
                continue
            if c["status"] == "ok":
                w.writerow([repr(c["beta"]), *(repr(c["summary"][n]["mean"]) for n in names)])
            else:
                w.writerow([repr(c["beta"]), *(["failed"] * len(names))])


def cmd_grid(ns) -> int:
    started = time.perf_counter()
    cfg = resolve_config(ns, grid=True)
    ds = load_dataset(cfg)
    cells = run_grid(cfg, ds, jobs=max(1, ns.jobs))
    failed = [c for c in cells if c["status"] != "ok"]
    for c in failed:
        log.error("cell beta=%s lambda=%s failed: %s", c["beta"], c["lambda"], c["error"])
    doc = _document("grid", cfg, started, cells=cells, auc_matrix=auc_matrix(cfg, cells))
    out_dir = ns.out if ns.out is not None else None
    if out_dir is not None:
        dump_json(doc, out_dir / "results.json")
        write_grid_csvs(out_dir, cfg, cells)
    if ns.json or out_dir is None:
        print(dump_json(doc, compact=True))
    else:
        print(f"{len(cells) - len(failed)}/{len(cells)} cells completed; outputs in {out_dir}")
    return EXIT_RUNTIME if len(failed) == len(cells) else EXIT_OK


def density_records(model_before: MLP, model_after: MLP, ds: Dataset, pair, settings: EMSettings, grid_size: int):
    """Four records: both samples of ``pair`` before and after training, each pair on a shared grid."""
    records, js = [], {}
    for tag, model in (("before", model_before), ("after", model_after)):
        emb = model.forward(ds.features[list(pair)])[0]
        fits = [fit_gmm(e, settings) for e in emb]
        lo, hi = shared_bounds(*fits)
        grids = [discretize(f, lo, hi, grid_size) for f in fits]
        js[tag] = js_divergence(*grids)
        for sample, f, g in zip(pair, fits, grids):
            params = f.to_dict()
            records.append({
                "sample": int(sample),
                "label": int(ds.labels[sample]),
                "epoch": tag,
                "points": g.points.tolist(),
                "masses": g.masses.tolist(),
                "gmm": {k: params[k] for k in ("weights", "means", "stds", "collapsed")},
            })
    return records, js


def default_pair(ds: Dataset) -> tuple[int, int]:
    """First two samples of the lowest class label that has two samples."""
    for c in range(ds.num_classes):
        idx = np.flatnonzero(ds.labels == c)
        if idx.size >= 2:
            return int(idx[0]), int(idx[1])
    raise ConfigError("no class has two samples")


def cmd_density(ns) -> int:
    cfg = resolve_config(ns)
    ds = load_dataset(cfg)
    pair = tuple(ns.pair) if ns.pair is not None else default_pair(ds)
    for i in pair:
        if not 0 <= i < len(ds):
            raise ConfigError(f"sample index {i} out of range for {len(ds)} samples")
    mcfg = model_config(cfg, ds)
    before = MLP(mcfg)
    if ns.checkpoint is not None:
        try:
            after = MLP.load(ns.checkpoint)
        except FileNotFoundError:
            raise ConfigError(f"checkpoint not found: {ns.checkpoint}") from None
        if after.config.input_dim != ds.dim:
            raise ConfigError("checkpoint input dimension does not match the dataset")
        before = MLP(after.config)
    else:
        after = train(MLP(mcfg), ds, train_config(cfg, cfg["beta"], cfg["lambda"])).model
    records, js = density_records(before, after, ds, pair, em_settings(cfg), cfg["grid_size"])
    lines = "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
    if ns.out is not None:
        Path(ns.out).parent.mkdir(parents=True, exist_ok=True)
        Path(ns.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    summary = {"pair": list(pair), "js_before": js["before"], "js_after": js["after"]}
    print(json.dumps(summary, sort_keys=True) if ns.json else
          f"pair {pair}: js_proximity before {js['before']:.6g}, after {js['after']:.6g}",
          file=sys.stderr if ns.out is None else sys.stdout)
    return EXIT_OK


def parse_vector(text: str, name: str) -> np.ndarray:
    values = []
    for field in text.replace(" ", ",").split(","):
        if not field:
            continue
        try:
            values.append(float(field))
        except ValueError:
            raise ConfigError(f"cannot parse {name}: {field!r} is not a number") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{name} must be a non-empty list of finite numbers")
    return np.asarray(values)


def _vectors(ns, count: int) -> list[np.ndarray]:
    if ns.csv is not None:
        if ns.rows is None or len(ns.rows) != count:
            raise ConfigError(f"--csv needs --rows with {count} row index(es)")
        ds = load_dataset({"data": str(ns.csv)})
        for r in ns.rows:
            if not 0 <= r < len(ds):
                raise ConfigError(f"row {r} out of range for {len(ds)} samples")
        return [ds.features[r] for r in ns.rows]
    given = [ns.a, ns.b][:count]
    if any(v is None for v in given):
        raise ConfigError("give the vector(s) with --a/--b or use --csv with --rows")
    return [parse_vector(v, f"--{n}") for v, n in zip(given, "ab")]


def cmd_prox(ns) -> int:
    a, b = _vectors(ns, 2)
    if a.shape != b.shape:
        raise ConfigError(f"vectors have different lengths: {a.size} and {b.size}")
    if not 0.0 <= ns.lam <= 1.0:
        raise ConfigError("--lambda must lie in [0, 1]")
    try:
        settings = EMSettings(K=ns.gmm_k, seed=ns.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if a.size < settings.K:
        raise ConfigError(f"vectors need at least K={settings.K} components")
    try:
        cos = cosine_proximity(a, b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sp = js_proximity(a, b, settings, ns.grid_size)
    # Both terms as similarities: 1 for identical inputs.
    blend = ns.lam * cos + (1.0 - ns.lam) * (1.0 - sp)
    out = {"cosine": cos, "js_proximity": sp, "lambda": ns.lam, "blend": blend}
    if ns.json:
        print(json.dumps(out, sort_keys=True))
    else:
        print(f"cosine       {cos:.12g}\njs_proximity {sp:.12g}\nblend        {blend:.12g}  (lambda={ns.lam})")
    return EXIT_OK


def cmd_fit(ns) -> int:
    (v,) = _vectors(ns, 1)
    try:
        settings = EMSettings(K=ns.gmm_k, seed=ns.seed, sigma_floor=ns.sigma_floor)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if v.size < settings.K:
        raise ConfigError(f"vector needs at least K={settings.K} components")
    fitted = fit_gmm(v, settings)
    params = fitted.to_dict()
    params["iterations"] = len(fitted.log_likelihood) - 1
    params["log_likelihood"] = fitted.log_likelihood[-1]
    if ns.json:
        print(json.dumps(params, sort_keys=True))
    else:
        for k in range(settings.K):
            print(f"component {k}: weight {params['weights'][k]:.6g}  mean {params['means'][k]:.6g}  "
                  f"std {params['stds'][k]:.6g}")
        print(f"collapsed: {params['collapsed']}  iterations: {params['iterations']}  "
              f"log-likelihood: {params['log_likelihood']:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghmloss", description="Hybrid geometric/probabilistic metric learning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-fold progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train with k-fold cross-validation and write a JSON results document")
    _add_experiment_flags(p)
    p.add_argument("--out", type=Path, help="results JSON path")
    p.add_argument("--json", action="store_true", help="print the results document as one JSON line")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="cross-validate every (beta, lambda) pair")
    _add_experiment_flags(p, grid=True)
    p.add_argument("--out", type=Path, help="output directory for results.json, auc_matrix.csv, beta_table.csv")
    p.add_argument("--jobs", type=int, default=1, help="cells to run in parallel")
    p.add_argument("--json", action="store_true", help="print the results document as one JSON line")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("density", help="export a pair's fitted densities before and after training (JSON lines)")
    _add_experiment_flags(p)
    p.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"), help="sample indices (default: first positive pair)")
    p.add_argument("--checkpoint", type=Path, help="use a saved model instead of training inline")
    p.add_argument("--out", type=Path, help="JSON-lines path (default: stdout)")
    p.add_argument("--json", action="store_true", help="print the summary as JSON")
    p.set_defaults(func=cmd_density)

    for name, func, count in (("prox", cmd_prox, 2), ("fit", cmd_fit, 1)):
        help_text = ("print cosine and probabilistic proximity of two vectors" if name == "prox"
                     else "fit a 1-D Gaussian mixture to the components of a vector")
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--a", help="first vector, comma-separated")
        if count == 2:
            p.add_argument("--b", help="second vector, comma-separated")
            p.add_argument("--lambda", dest="lam", type=float, default=0.5)
            p.add_argument("--grid-size", dest="grid_size", type=int, default=512)
        else:
            p.add_argument("--sigma-floor", dest="sigma_floor", type=float, default=1e-3)
        p.add_argument("--csv", type=Path, help="read vectors from a dataset CSV instead")
        p.add_argument("--rows", type=int, nargs="+", help="row indices in --csv")
        p.add_argument("--gmm-k", dest="gmm_k", type=int, default=2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true", help="single-line JSON output")
        p.set_defaults(func=func, b=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RUNTIME_ERRORS as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
