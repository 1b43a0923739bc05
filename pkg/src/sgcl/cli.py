"""Command-line entry point: ``sgcl <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from sgcl import __version__, kernels
from sgcl import config as cfgmod
from sgcl.analysis import export_embeddings, view_similarity
from sgcl.augment import make_view
from sgcl.centrality import betweenness, stratify
from sgcl.data import FetchError, fetch_ml100k, load_ratings_file, synth_dataset
from sgcl.encoder import init_embeddings, propagate
from sgcl.evaluation import evaluate_all, write_report_csv
from sgcl.experiments import final_embeddings, motivation, robustness, train_and_evaluate
from sgcl.graph import build_normalized_adjacency, split_train_test
from sgcl.theory import report_json, run_theory_checks
from sgcl.trainer import CheckpointError, load_checkpoint, save_checkpoint, write_history_csv

log = logging.getLogger("sgcl")

# command-line flags that map straight onto RunConfig fields
_OVERRIDES = {
    "dataset": str, "cache_dir": str, "sep": str, "rating_col": int, "rating_threshold": float,
    "synth_users": int, "synth_items": int, "synth_clusters": int, "synth_density": float,
    "data_seed": int, "test_ratio": float, "lr": float, "batch_size": int, "epochs": int,
    "seed": int, "eval_every": int, "patience": int, "layers": int, "dim": int, "tau": float,
    "lam": float, "p": float, "beta": float, "alpha": float, "objective": str,
    "aug_kind": str, "aug_ratio": float, "out_dir": str,
}


def _code_version() -> str:
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
        if rev.returncode == 0:
            return f"{__version__}+{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def load_graph(cfg: cfgmod.RunConfig):
    if cfg.dataset == "synth":
        return synth_dataset(cfg.synth_users, cfg.synth_items, cfg.synth_clusters,
                             cfg.synth_density, cfg.data_seed)
    if cfg.dataset == "ml100k":
        path = fetch_ml100k(cfg.cache_dir)
        return load_ratings_file(path, sep="\t", rating_col=2, threshold=cfg.rating_threshold)
    rating_col = None if cfg.rating_col < 0 else cfg.rating_col
    return load_ratings_file(cfg.dataset, sep=cfg.sep or None, rating_col=rating_col,
                             threshold=cfg.rating_threshold)


def load_split(cfg: cfgmod.RunConfig):
    g = load_graph(cfg)
    train, test = split_train_test(g, cfg.test_ratio, cfg.data_seed)
    return g, train, test


def _out(cfg) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, cfg, command: str, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "seeds": {"seed": cfg.seed, "data_seed": cfg.data_seed},
        "code_version": _code_version(),
        "kernel_backend": kernels.BACKEND,
        "numpy": np.__version__,
    }
    manifest.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    (out / "config.ini").write_text(cfgmod.dump_ini(cfg))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=float))


def _load_theta(path, train):
    theta, m = load_checkpoint(path)
    if m != train.num_users or theta.shape[0] != train.num_nodes:
        raise CheckpointError("checkpoint does not match the dataset's node counts")
    return theta.astype(np.float64)


# -- subcommands ---------------------------------------------------------------


def cmd_train(cfg, args) -> int:
    out = _out(cfg)
    _, train, test = load_split(cfg)
    tcfg = cfg.train_config()
    theta, history, report = train_and_evaluate(train, test, tcfg)
    save_checkpoint(theta, train.num_users, out / "checkpoint.bin")
    write_history_csv(history, out / "history.csv")
    write_report_csv([(len(history), "test", report)], out / "metrics.csv")
    _write_json(out / "summary.json", {"epochs": len(history), "test": report.flat(),
                                       "evaluated_users": report.num_users})
    write_manifest(out, cfg, "train")
    print(json.dumps(report.flat()))
    return 0


def cmd_evaluate(cfg, args) -> int:
    out = _out(cfg)
    _, train, test = load_split(cfg)
    theta = _load_theta(args.checkpoint, train)
    report = evaluate_all(final_embeddings(theta, train, cfg.layers), train, test)
    write_report_csv([("", "test", report)], out / "metrics.csv")
    _write_json(out / "summary.json", {"checkpoint": str(args.checkpoint), "test": report.flat(),
                                       "evaluated_users": report.num_users})
    write_manifest(out, cfg, "evaluate", {"checkpoint": str(args.checkpoint)})
    print(json.dumps(report.flat()))
    return 0


def _theta_for(cfg, args, train):
    if getattr(args, "checkpoint", None):
        return _load_theta(args.checkpoint, train)
    return init_embeddings(train.num_users, train.num_items, cfg.dim, cfg.seed)


def cmd_analyze_noise(cfg, args) -> int:
    out = _out(cfg)
    _, train, _ = load_split(cfg)
    theta = _theta_for(cfg, args, train)
    e = propagate(build_normalized_adjacency(train), theta, cfg.layers)
    view = make_view(train, cfg.train_config().augment, cfg.layers, cfg.seed)
    rep = view_similarity(e, propagate(view.adjacency, theta, cfg.layers))
    flagged = set(rep.flagged.tolist())
    with open(out / "view_similarity.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "kind", "cosine", "percentile", "noisy"])
        for k, c in enumerate(rep.cosines):
            kind = "user" if k < train.num_users else "item"
            w.writerow([k, kind, repr(float(c)), repr(float(rep.percentiles[k])), int(k in flagged)])
    export_embeddings(e, train.num_users, out / "embeddings.csv", train)
    _write_json(out / "summary.json", {"nodes": len(rep.cosines), "flagged": rep.num_flagged,
                                       "mean_cosine": float(rep.cosines.mean())})
    write_manifest(out, cfg, "analyze-noise")
    print(f"{rep.num_flagged} noisy views out of {len(rep.cosines)} nodes")
    return 0


def cmd_centrality(cfg, args) -> int:
    out = _out(cfg)
    g = load_graph(cfg)
    node, edge = betweenness(g)
    scores = node if args.kind == "node" else edge
    strata = stratify(scores)
    path = out / f"{args.kind}_centrality.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["element_id", "score", "level"])
        for k, s in enumerate(scores.scores):
            if args.kind == "node":
                ident = (f"user:{g.user_ids[k]}" if k < g.num_users
                         else f"item:{g.item_ids[k - g.num_users]}")
            else:
                u, i = g.edges[k]
                ident = f"{g.user_ids[u]}|{g.item_ids[i]}"
            w.writerow([ident, repr(float(s)), _level_name(strata.levels[k])])
    write_manifest(out, cfg, "centrality", {"kind": args.kind})
    print(json.dumps(strata.sizes()))
    return 0


def _level_name(v) -> str:
    from sgcl.centrality import Level

    return Level(int(v)).name.lower()


def cmd_perturb(cfg, args) -> int:
    out = _out(cfg)
    g = load_graph(cfg)
    theta = _theta_for(cfg, args, g)
    rows = motivation(g, theta, cfg.layers, args.ratio, range(args.seeds), args.element)
    with open(out / "perturb.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "seed", "flagged", "mean_cosine", "removed_edges"])
        for r in rows:
            w.writerow([r.level, r.seed, r.flagged, repr(r.mean_cosine), r.removed])
    summary = {}
    for level in dict.fromkeys(r.level for r in rows):
        sel = [r for r in rows if r.level == level]
        summary[level] = {"mean_flagged": float(np.mean([r.flagged for r in sel])),
                          "mean_cosine": float(np.mean([r.mean_cosine for r in sel]))}
    _write_json(out / "summary.json", summary)
    write_manifest(out, cfg, "perturb-experiment", {"ratio": args.ratio, "element": args.element})
    print(json.dumps(summary))
    return 0


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_robustness(cfg, args) -> int:
    out = _out(cfg)
    _, train, test = load_split(cfg)
    ratios = _floats(args.ratios) if args.ratios else (
        [0.05, 0.10, 0.15, 0.20, 0.25] if args.mode == "fake" else [0.2, 0.4, 0.6, 0.8])
    objectives = args.objectives.split(",")
    rows = robustness(train, test, cfg.train_config(), args.mode, ratios, objectives)
    with open(out / "robustness.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "ratio", "objective", "seed", "recall@20", "ndcg@20",
                    "clean_recall@20", "relative_drop"])
        for r in rows:
            w.writerow([r.mode, r.ratio, r.objective, r.seed, repr(r.recall20), repr(r.ndcg20),
                        repr(r.clean_recall20), repr(r.relative_drop)])
    write_manifest(out, cfg, "robustness", {"mode": args.mode, "ratios": ratios})
    for r in rows:
        print(f"{r.objective:8s} {r.mode} {r.ratio:.2f} recall@20={r.recall20:.4f} "
              f"drop={100 * r.relative_drop:.2f}%")
    return 0


def cmd_theory(cfg, args) -> int:
    out = _out(cfg)
    results = run_theory_checks(seed=cfg.seed)
    text = report_json(results)
    (out / "theory.json").write_text(text)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} (threshold {r.threshold:g})")
    return 0 if all(r.passed for r in results) else 1


def parse_grid(spec: str) -> dict:
    """``"p=0.01,0.1;beta=1,0.1"`` -> ``{"p": [0.01, 0.1], "beta": [1.0, 0.1]}``."""
    grid = {}
    for part in spec.split(";"):
        if not part.strip():
            continue
        key, _, vals = part.partition("=")
        key = key.strip()
        if key not in _OVERRIDES:
            raise cfgmod.ConfigError(f"unknown sweep key {key!r}")
        grid[key] = [_OVERRIDES[key](v) for v in vals.split(",") if v.strip()]
        if not grid[key]:
            raise cfgmod.ConfigError(f"sweep key {key!r} has no values")
    return grid


def sweep(cfg, grid: dict):
    """One seeded run per grid point; failures are recorded and the sweep continues."""
    keys = list(grid)
    rows = []
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        row = dict(point)
        try:
            pcfg = cfgmod.validate(replace(cfg, **point))
            _, train, test = load_split(pcfg)
            _, _, report = train_and_evaluate(train, test, pcfg.train_config())
            row.update(report.flat())
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001 - recorded per point
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def cmd_sweep(cfg, args) -> int:
    out = _out(cfg)
    grid = parse_grid(args.grid)
    rows = sweep(cfg, grid)
    metric_keys = sorted({k for r in rows for k in r} - set(grid) - {"error"})
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(grid) + metric_keys + ["error"])
        w.writeheader()
        w.writerows(rows)
    write_manifest(out, cfg, "sweep", {"grid": grid})
    print(f"{len(rows)} grid points, {sum(bool(r['error']) for r in rows)} failed")
    return 0


def cmd_fetch(cfg, args) -> int:
    kwargs = {"url": args.url} if args.url else {}
    if args.md5:
        kwargs["md5"] = args.md5
    path = fetch_ml100k(cfg.cache_dir, **kwargs)
    print(path)
    return 0


def cmd_synth(cfg, args) -> int:
    out = _out(cfg)
    g = synth_dataset(cfg.synth_users, cfg.synth_items, cfg.synth_clusters, cfg.synth_density,
                      cfg.data_seed)
    path = out / args.name
    with open(path, "w") as fh:
        for u, i in g.edges:
            fh.write(f"{g.user_ids[u]}\t{g.item_ids[i]}\n")
    write_manifest(out, cfg, "synth", {"edges": g.num_edges})
    print(f"{g.num_edges} edges -> {path}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "analyze-noise": cmd_analyze_noise,
    "centrality": cmd_centrality,
    "perturb-experiment": cmd_perturb,
    "robustness": cmd_robustness,
    "theory-check": cmd_theory,
    "sweep": cmd_sweep,
    "fetch-data": cmd_fetch,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; any section names, keys are run-config fields")
    common.add_argument("-v", "--verbose", action="store_true")
    for name, kind in _OVERRIDES.items():
        common.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, default=None)

    parser = argparse.ArgumentParser(prog="sgcl", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("evaluate",):
            p.add_argument("--checkpoint", required=True)
        if name in ("analyze-noise", "perturb-experiment"):
            p.add_argument("--checkpoint", help="parameters to embed with (default: fresh init)")
        if name == "centrality":
            p.add_argument("--kind", choices=("node", "edge"), default="edge")
        if name == "perturb-experiment":
            p.add_argument("--ratio", type=float, default=0.1)
            p.add_argument("--seeds", type=int, default=10)
            p.add_argument("--element", choices=("edge", "node"), default="edge")
        if name == "robustness":
            p.add_argument("--mode", choices=("fake", "sparse"), default="fake")
            p.add_argument("--ratios", help="comma-separated corruption / keep ratios")
            p.add_argument("--objectives", default="scl,infonce")
        if name == "sweep":
            p.add_argument("--grid", required=True, help='e.g. "beta=1,0.1,0.01;p=0.01,0.1"')
        if name == "fetch-data":
            p.add_argument("--url")
            p.add_argument("--md5")
        if name == "synth":
            p.add_argument("--name", default="synth.tsv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    try:
        cfg = cfgmod.load(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CheckpointError, FetchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
