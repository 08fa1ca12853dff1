"""Command-line interface: ``starorder <command> [options]``.

Every command reads an optional JSON run config, applies flag overrides on
top, writes the resolved config next to its outputs and exits with 0 (ok),
1 (usage), 2 (data) or 3 (budget / degenerate input). Errors go to stderr
prefixed with ``ERROR:<code>:``.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import baselines, dataset, render
from .distnet import DistanceNet, DistNetConfig, distnet_train, load_pairs, save_pairs
from .errors import DataError, InvalidArgument, StarOrderError
from .geometry import check_ordering
from .metrics import ExactDistance, make_objective
from .ordernet import OrderNet, OrderNetConfig, TrainConfig, infer, train

log = logging.getLogger("starorder")

_DISTNET_KEYS = {k: v for k, v in asdict(DistNetConfig()).items() if k != "seed"}
_ORDERNET_KEYS = {k: v for k, v in asdict(OrderNetConfig()).items() if k != "seed"}

DEFAULTS = {
    "data": {"path": None, "orderings": None, "count": 50, "m": 8, "n": 8, "K": 2,
             "sigma_range": [0.1, 0.3], "mean_range": [10.0, 100.0], "label_column": "label"},
    "distnet": {**_DISTNET_KEYS, "n_range": list(_DISTNET_KEYS["n_range"]),
                "model": None, "pairs_file": None, "use_for_reward": False},
    "ordernet": {**_ORDERNET_KEYS, "model": None, "init": None, "steps": 100, "batch": 64,
                 "lr": 1e-4, "critic_lr": None, "clip": 2.0, "checkpoint_every": 0,
                 "samples": 8},
    "baseline": {"method": "random_swap", "max_stall": 10, "max_iterations": 100,
                 "random_start": False, "allow_large": False,
                 "methods": ["identity", "random_swap", "exhaustive", "salient", "learned"]},
    "render": {"kind": "grid", "ordering": None, "index": 0, "columns": 4,
               "glyph_radius": 40.0, "annotate": True},
    "objective": "sc",
    "seed": 0,
    "output_dir": None,
    "jobs": 1,
}

BASELINE_METHODS = ("identity", "random_swap", "exhaustive", "salient")


# ---------------------------------------------------------------- config

def merge_config(base: dict, override: dict, path="") -> dict:
    """Recursive merge; keys absent from ``base`` are rejected."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise InvalidArgument(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise InvalidArgument(f"config key {where!r} must be an object")
            out[key] = merge_config(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _set_path(cfg: dict, dotted: str, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise InvalidArgument(f"unknown config key {dotted!r}")
        node = node[k]
    if keys[-1] not in node:
        raise InvalidArgument(f"unknown config key {dotted!r}")
    node[keys[-1]] = value


def _parse_set(text: str):
    if "=" not in text:
        raise InvalidArgument(f"--set expects KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.config}: invalid JSON: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise InvalidArgument("run config must be a JSON object")
        cfg = merge_config(cfg, doc)
    for dotted, attr in _FLAG_PATHS:
        val = getattr(args, attr, None)
        if val is not None:
            _set_path(cfg, dotted, val)
    for item in args.set or []:
        _set_path(cfg, *_parse_set(item))
    if cfg["output_dir"] is None:
        cfg["output_dir"] = os.environ.get("OUTPUT_DIR") or "."
    if int(cfg["jobs"]) < 1:
        raise InvalidArgument("jobs must be >= 1")
    make_objective(cfg["objective"])
    return cfg


# (config path, argparse attribute) for every flag that maps onto the config
_FLAG_PATHS = [
    ("seed", "seed"), ("output_dir", "output_dir"), ("objective", "objective"), ("jobs", "jobs"),
    ("data.path", "data"), ("data.count", "count"), ("data.m", "m"), ("data.n", "n"),
    ("data.K", "K"), ("data.label_column", "label_column"), ("data.orderings", "orderings"),
    ("distnet.pairs", "pairs"), ("distnet.epochs", "epochs"), ("distnet.hidden", "hidden"),
    ("distnet.pairs_file", "pairs_file"), ("distnet.model", "distnet"),
    ("ordernet.model", "model"), ("ordernet.init", "init"), ("ordernet.steps", "steps"),
    ("ordernet.batch", "batch"), ("ordernet.lr", "lr"), ("ordernet.samples", "samples"),
    ("baseline.method", "method"), ("baseline.max_stall", "max_stall"),
    ("baseline.max_iterations", "max_iterations"), ("baseline.allow_large", "allow_large"),
    ("baseline.methods", "methods"),
    ("render.kind", "kind"), ("render.ordering", "ordering"), ("render.index", "index"),
    ("render.columns", "columns"), ("render.annotate", "annotate"),
]


def _out_dir(cfg) -> Path:
    path = Path(cfg["output_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_config(cfg, command):
    path = _out_dir(cfg) / f"{command}.config.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _dump(doc, out):
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


# ---------------------------------------------------------------- helpers

def _load_sets(cfg, required=True):
    path = cfg["data"]["path"]
    if path is None:
        if required:
            raise InvalidArgument("no data given (use --data or data.path)")
        d = cfg["data"]
        return dataset.synth_collection(d["count"], d["m"], d["n"], d["K"], seed=cfg["seed"],
                                        sigma_range=tuple(d["sigma_range"]),
                                        mean_range=tuple(d["mean_range"]))
    if str(path).endswith(".csv"):
        return [dataset.load_csv(path, cfg["data"]["label_column"])]
    return dataset.load_any(path)


def _objective(cfg):
    return make_objective(cfg["objective"], ExactDistance())


def _value_key(cfg):
    return "sc" if cfg["objective"] == "sc" else "db_ratio"


def _parse_ordering(text, n):
    if isinstance(text, str):
        try:
            text = [int(t) for t in text.replace(",", " ").split()]
        except ValueError:
            raise InvalidArgument(f"ordering must be a list of integers, got {text!r}") from None
    return check_ordering(text, n)


def _run_baseline(method, d, obj, cfg, seed):
    b = cfg["baseline"]
    if method == "identity":
        order = np.arange(d.n)
        return order, float(obj(dataset.normalize(d), order))
    if method == "random_swap":
        res = baselines.random_swap(d, obj, baselines.SwapConfig(
            b["max_stall"], b["max_iterations"], seed, b["random_start"]))
        return res.ordering, res.value
    if method == "exhaustive":
        res = baselines.exhaustive(d, obj, b["allow_large"], jobs=int(cfg["jobs"]))
        return res.ordering, res.value
    if method == "salient":
        order = baselines.salient_order(d).ordering
        return order, float(obj(dataset.normalize(d), order))
    raise InvalidArgument(f"unknown baseline method {method!r}; choose from {BASELINE_METHODS}")


def _distance_for_reward(cfg):
    dn = cfg["distnet"]
    if dn["use_for_reward"] or dn["model"]:
        if not dn["model"]:
            raise InvalidArgument("distnet.use_for_reward needs distnet.model")
        return DistanceNet.load(dn["model"])
    return ExactDistance()


# ---------------------------------------------------------------- commands

def cmd_synth(cfg, args):
    d = cfg["data"]
    sets = dataset.synth_collection(d["count"], d["m"], d["n"], d["K"], seed=cfg["seed"],
                                    sigma_range=tuple(d["sigma_range"]),
                                    mean_range=tuple(d["mean_range"]))
    out = Path(args.out) if args.out else _out_dir(cfg) / "sets.jsonl"
    dataset.save_collection(sets, out)
    _write_config(cfg, "synth")
    print(out)


def cmd_ingest(cfg, args):
    if not cfg["data"]["path"]:
        raise InvalidArgument("ingest needs --data pointing at a CSV file")
    d = dataset.load_csv(cfg["data"]["path"], cfg["data"]["label_column"])
    out = Path(args.out) if args.out else _out_dir(cfg) / (Path(cfg["data"]["path"]).stem + ".json")
    dataset.save_json(d, out)
    _write_config(cfg, "ingest")
    print(out)


def cmd_train_distnet(cfg, args):
    conf = {k: cfg["distnet"][k] for k in _DISTNET_KEYS}
    dn_cfg = DistNetConfig(**conf, seed=cfg["seed"])
    pairs = load_pairs(cfg["distnet"]["pairs_file"]) if cfg["distnet"]["pairs_file"] else None
    out_dir = _out_dir(cfg)
    log_path = out_dir / "distnet_log.jsonl"
    with log_path.open("w", encoding="utf-8") as fh:
        def record(epoch, mse):
            fh.write(json.dumps({"epoch": epoch, "train_mse": mse}) + "\n")
        net, report = distnet_train(dn_cfg, pairs, callback=record)
    out = Path(args.out) if args.out else out_dir / "distnet.json"
    net.save(out)
    summary = {"model": str(out), "train_mse": report.train_mse[-1] if report.train_mse else None,
               "holdout_mse": report.holdout_mse, "seconds": report.seconds}
    (out_dir / "distnet_report.json").write_text(json.dumps(summary, indent=2) + "\n",
                                                 encoding="utf-8")
    _write_config(cfg, "train-distnet")
    _dump(summary, None)


def cmd_train_ordernet(cfg, args):
    sets = _load_sets(cfg, required=False)
    o = cfg["ordernet"]
    net_cfg = OrderNetConfig(**{k: o[k] for k in _ORDERNET_KEYS}, seed=cfg["seed"])
    tcfg = TrainConfig(steps=o["steps"], batch=o["batch"], lr=o["lr"], critic_lr=o["critic_lr"],
                       clip=o["clip"], objective=cfg["objective"], seed=cfg["seed"],
                       jobs=int(cfg["jobs"]), checkpoint_every=o["checkpoint_every"],
                       output_dir=str(_out_dir(cfg)))
    net = OrderNet.load(o["init"]) if o["init"] else None
    out_dir = _out_dir(cfg)
    log_path = out_dir / "ordernet_log.jsonl"
    log_path.write_text("", encoding="utf-8")
    dist = _distance_for_reward(cfg) if cfg["objective"] == "sc" else None
    net, entries = train(sets, tcfg, net_cfg, dist=dist, net=net, log_path=log_path)
    out = Path(args.out) if args.out else out_dir / "ordernet.json"
    net.save(out, extra={"steps": tcfg.steps, "objective": tcfg.objective, "sets": len(sets)})
    _write_config(cfg, "train-ordernet")
    last = entries[-1] if entries else {}
    _dump({"model": str(out), "steps": len(entries), "final_mean_reward": last.get("mean_reward")},
          None)


def cmd_order(cfg, args):
    if not cfg["ordernet"]["model"]:
        raise InvalidArgument("order needs --model")
    net = OrderNet.load(cfg["ordernet"]["model"])
    obj = _objective(cfg)
    results = []
    for d in _load_sets(cfg):
        order, value = infer(net, d, int(cfg["ordernet"]["samples"]), obj, seed=cfg["seed"])
        results.append({"ordering": [int(i) for i in order], _value_key(cfg): value})
    _write_config(cfg, "order")
    _dump(results[0] if len(results) == 1 else results, args.out)


def cmd_baseline(cfg, args):
    obj = _objective(cfg)
    method = cfg["baseline"]["method"]
    results = []
    for d in _load_sets(cfg):
        order, value = _run_baseline(method, d, obj, cfg, cfg["seed"])
        results.append({"method": method, "ordering": [int(i) for i in order],
                        _value_key(cfg): value})
    _write_config(cfg, "baseline")
    _dump(results[0] if len(results) == 1 else results, args.out)


BENCH_FIELDS = ["set", "method", "objective", "seconds", "ordering"]


def _fmt(x: float) -> str:
    return repr(float(x))


def _bench_set(k, d, cfg, obj, net):
    rows = []
    for method in cfg["baseline"]["methods"]:
        if method == "exhaustive" and d.n > baselines.EXHAUSTIVE_MAX_N \
                and not cfg["baseline"]["allow_large"]:
            continue
        if method == "learned" and net is None:
            continue
        t0 = time.perf_counter()
        if method == "learned":
            order, value = infer(net, d, int(cfg["ordernet"]["samples"]), obj,
                                 seed=cfg["seed"] + k)
        else:
            order, value = _run_baseline(method, d, obj, cfg, cfg["seed"] + k)
        rows.append({"set": k, "method": method, "objective": _fmt(value),
                     "seconds": f"{time.perf_counter() - t0:.6f}",
                     "ordering": " ".join(str(int(i)) for i in order)})
    return rows


def bench_summary(rows, objective):
    """Markdown table: one line per method with mean objective and time."""
    by: dict[str, list] = {}
    for r in rows:
        by.setdefault(r["method"], []).append(r)
    lines = [f"| method | sets | mean {objective} | mean seconds |", "|---|---|---|---|"]
    for method, rs in by.items():
        vals = [float(r["objective"]) for r in rs]
        secs = [float(r["seconds"]) for r in rs]
        lines.append(f"| {method} | {len(rs)} | {np.mean(vals):.4f} | {np.mean(secs):.4f} |")
    return "\n".join(lines) + "\n"


def cmd_bench(cfg, args):
    sets = _load_sets(cfg, required=False)
    for m in cfg["baseline"]["methods"]:
        if m not in BASELINE_METHODS + ("learned",):
            raise InvalidArgument(f"unknown bench method {m!r}")
    net = OrderNet.load(cfg["ordernet"]["model"]) if cfg["ordernet"]["model"] else None
    if net is None and "learned" in cfg["baseline"]["methods"]:
        log.warning("no --model given; skipping the learned ordering")
    obj = _objective(cfg)
    jobs = int(cfg["jobs"])
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lambda kd: _bench_set(kd[0], kd[1], cfg, obj, net),
                                  enumerate(sets)))
    else:
        parts = [_bench_set(k, d, cfg, obj, net) for k, d in enumerate(sets)]
    rows = [r for p in parts for r in p]
    out_dir = _out_dir(cfg)
    prefix = args.out or str(out_dir / "bench")
    with open(prefix + ".csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    if cfg["data"]["path"] is None:
        dataset.save_collection(sets, prefix + "_sets.jsonl")
    md = bench_summary(rows, cfg["objective"])
    Path(prefix + ".md").write_text(md, encoding="utf-8")
    _write_config(cfg, "bench")
    sys.stdout.write(md)


def read_bench_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(BENCH_FIELDS) - set(rows[0]):
        raise DataError(f"{path}: not a bench CSV (columns {sorted(rows[0])})")
    return rows


def cmd_eval(cfg, args):
    src = cfg["data"]["orderings"]
    if not src:
        raise InvalidArgument("eval needs --orderings (a bench CSV or an order/baseline JSON)")
    obj = _objective(cfg)
    if str(src).endswith(".csv"):
        data_path = cfg["data"]["path"] or str(src)[:-4] + "_sets.jsonl"
        sets = dataset.load_any(data_path)
        rows = read_bench_csv(src)
        out_rows, mismatches = [], 0
        for r in rows:
            k = int(r["set"])
            if k >= len(sets):
                raise DataError(f"{src}: set index {k} out of range for {data_path}")
            d = sets[k]
            order = _parse_ordering(r["ordering"], d.n)
            value = _fmt(obj(dataset.normalize(d), order))
            mismatches += value != r["objective"]
            out_rows.append({**r, "objective": value})
        out = args.out or str(_out_dir(cfg) / "eval.csv")
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, BENCH_FIELDS)
            w.writeheader()
            w.writerows(out_rows)
        _write_config(cfg, "eval")
        _dump({"rows": len(rows), "mismatches": mismatches, "output": out}, None)
        return
    try:
        doc = json.loads(Path(src).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{src}: invalid JSON: {exc.msg}") from None
    docs = doc if isinstance(doc, list) else [doc]
    sets = _load_sets(cfg)
    if len(docs) != len(sets):
        raise DataError(f"{len(docs)} orderings for {len(sets)} data sets")
    results = []
    for item, d in zip(docs, sets):
        order = _parse_ordering(item["ordering"], d.n)
        results.append({"ordering": [int(i) for i in order],
                        _value_key(cfg): float(obj(dataset.normalize(d), order))})
    _write_config(cfg, "eval")
    _dump(results[0] if len(results) == 1 else results, args.out)


def cmd_render(cfg, args):
    r = cfg["render"]
    sets = _load_sets(cfg)
    if not 0 <= r["index"] < len(sets):
        raise InvalidArgument(f"render index {r['index']} out of range ({len(sets)} sets)")
    d = dataset.normalize(sets[r["index"]])
    order = np.arange(d.n) if r["ordering"] is None else _parse_ordering(r["ordering"], d.n)
    style = render.RenderStyle(glyph_radius=float(r["glyph_radius"]), columns=int(r["columns"]),
                               annotate=bool(r["annotate"]))
    if r["kind"] == "grid":
        score = float(_objective({**cfg, "objective": "sc"})(d, order)) if style.annotate else None
        svg = render.render_glyph_grid(d, order, style, score=score)
    elif r["kind"] == "radviz":
        score = float(make_objective("db_ratio")(d, order)) if style.annotate else None
        svg = render.render_radviz(d, order, style, score=score,
                                   names=d.meta.get("feature_names"))
    else:
        raise InvalidArgument(f"render kind must be 'grid' or 'radviz', got {r['kind']!r}")
    out = Path(args.out) if args.out else _out_dir(cfg) / f"{r['kind']}.svg"
    out.write_text(svg, encoding="utf-8")
    _write_config(cfg, "render")
    print(out)


COMMANDS = {
    "synth": cmd_synth, "ingest": cmd_ingest, "train-distnet": cmd_train_distnet,
    "train-ordernet": cmd_train_ordernet, "order": cmd_order, "baseline": cmd_baseline,
    "eval": cmd_eval, "render": cmd_render, "bench": cmd_bench,
}


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"ERROR:1: {message}\n")
        raise SystemExit(1)


def _bool(text):
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _methods(text):
    return [t for t in text.replace(",", " ").split() if t]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config", help="JSON run config; flags override it")
    g.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config entry, e.g. ordernet.lr=1e-3 (repeatable)")
    g.add_argument("--seed", type=int)
    g.add_argument("--output-dir", dest="output_dir",
                   help="where outputs and the resolved config go (default $OUTPUT_DIR or .)")
    g.add_argument("--objective", choices=["sc", "db_ratio"])
    g.add_argument("--jobs", type=int, help="worker threads; 1 keeps runs bit-reproducible")
    g.add_argument("--out", help="explicit output path")
    g.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="starorder", description="Coordinate ordering for star glyphs and RadViz.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text)

    s = add("synth", "generate seeded synthetic data sets (JSON-lines)")
    s.add_argument("--count", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--K", type=int)

    s = add("ingest", "convert a labelled CSV file to a data set JSON")
    s.add_argument("--data", help="CSV file")
    s.add_argument("--label-column", dest="label_column")

    s = add("train-distnet", "train the learned shape distance")
    s.add_argument("--pairs", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--hidden", type=int)
    s.add_argument("--pairs-file", dest="pairs_file", help="pre-computed pairs (JSON-lines)")

    s = add("train-ordernet", "train the ordering network with actor-critic")
    s.add_argument("--data", help="training collection (synthesised from config if omitted)")
    s.add_argument("--count", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--batch", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--init", help="checkpoint to resume from")
    s.add_argument("--distnet", help="distance-net model to use in the reward")

    s = add("order", "order the coordinates of data sets with a trained network")
    s.add_argument("--model")
    s.add_argument("--data")
    s.add_argument("--samples", type=int)

    s = add("baseline", "order coordinates with a reference method")
    s.add_argument("--data")
    s.add_argument("--method", choices=list(BASELINE_METHODS))
    s.add_argument("--max-stall", dest="max_stall", type=int)
    s.add_argument("--max-iterations", dest="max_iterations", type=int)
    s.add_argument("--allow-large", dest="allow_large", type=_bool)

    s = add("eval", "recompute objective values for given orderings")
    s.add_argument("--data")
    s.add_argument("--orderings", help="bench CSV or order/baseline JSON")

    s = add("render", "draw a glyph grid or RadViz plot as SVG")
    s.add_argument("--data")
    s.add_argument("--kind", choices=["grid", "radviz"])
    s.add_argument("--ordering", help="e.g. '2,0,1,3'; identity if omitted")
    s.add_argument("--index", type=int, help="which set of a collection")
    s.add_argument("--columns", type=int)
    s.add_argument("--annotate", type=_bool)

    s = add("bench", "compare orderings over a collection (CSV + markdown)")
    s.add_argument("--data", help="collection (synthesised from config if omitted)")
    s.add_argument("--count", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--model")
    s.add_argument("--samples", type=int)
    s.add_argument("--methods", type=_methods, help="comma list of methods")
    s.add_argument("--allow-large", dest="allow_large", type=_bool)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "train-ordernet" and args.distnet is not None:
        args.set = (args.set or []) + ["distnet.use_for_reward=true"]
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except StarOrderError as exc:
        sys.stderr.write(f"ERROR:{exc.exit_code}: {exc}\n")
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        sys.stderr.write(f"ERROR:2: {exc}\n")
        return 2
    except (KeyError, TypeError) as exc:
        sys.stderr.write(f"ERROR:2: malformed input: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
