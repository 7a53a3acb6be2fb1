"""Command-line entry point: ingest, train, generate, eval, compare-random, presets."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrics
from .datasets import build_eucore_top, load_cora_ml_npz
from .errors import CheckpointError, ConfigError, IngestError, NumericFault, ShadowcastError
from .graph import lcc, load_edge_list, load_graph_dir, save_graph_dir
from .markov import PRESETS, MarkovControl, preset
from .train import ShadowCastModel, Trainer, TrainConfig, history_csv

logger = logging.getLogger("shadowcast")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4

FULL_WALK_BUDGET = 10_000_000
DESK_WALK_BUDGET = 200_000
DESK_ITERATIONS = 3000
# training overrides applied by --desk (explicit config values still win)
DESK_TRAIN = {"lr_gan": 0.002, "probe_walks": 20_000}


@dataclass
class RunConfig:
    data: str | None = None
    out: str = "run"
    seed: int | None = None
    control: str = "empirical"
    walk_budget: int | None = None
    target_edges: int | None = None
    desk: bool = False
    train: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def resolved_seed(self) -> int:
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get("SHADOWCAST_SEED")
        if env is None:
            return 0
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"SHADOWCAST_SEED is not an integer: {env!r}") from exc

    def train_config(self) -> TrainConfig:
        opts = dict(DESK_TRAIN) if self.desk else {}
        if self.desk:
            opts["iterations"] = DESK_ITERATIONS
        opts.update(self.train)
        opts["seed"] = self.resolved_seed()
        return TrainConfig.from_dict(opts)

    def budget(self) -> int:
        if self.walk_budget is not None:
            return int(self.walk_budget)
        return DESK_WALK_BUDGET if self.desk else FULL_WALK_BUDGET


def fingerprint(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_json(path: Path, doc) -> None:
    path.write_text(metrics.to_json(doc), encoding="utf-8")


def _require_dir(path, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise ConfigError(f"{what} directory not found: {p}")
    return p


def resolve_control(spec: str, empirical: MarkovControl) -> MarkovControl:
    """``empirical``, a preset name, or a path to a control JSON file."""
    if spec == "empirical":
        return empirical
    if spec in PRESETS:
        return preset(spec)
    path = Path(spec)
    if path.is_file():
        return MarkovControl.load(path)
    raise ConfigError(f"control {spec!r} is neither 'empirical', a preset ({', '.join(PRESETS)}) "
                      "nor an existing file")


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    out = Path(args.out)
    if args.format == "cora-npz":
        g = load_cora_ml_npz(args.edges)
    elif args.format == "eucore-top":
        g = build_eucore_top(args.edges, args.labels)
    else:
        if args.labels is None:
            raise ConfigError("--labels is required for edge-list input")
        g = load_edge_list(args.edges, args.labels)
    raw_nodes, raw_edges = g.num_nodes, g.num_edges
    g = lcc(g)
    out.mkdir(parents=True, exist_ok=True)
    save_graph_dir(g, out)
    report = {"nodes_raw": raw_nodes, "edges_raw": raw_edges, "nodes": g.num_nodes,
              "edges": g.num_edges, "k": g.num_labels,
              "label_histogram": g.label_histogram().tolist(), "graph_fingerprint": g.fingerprint()}
    _write_json(out / "ingest.json", report)
    print(f"N_LCC={g.num_nodes} E_LCC={g.num_edges} K={g.num_labels}")
    return EXIT_OK


def _load_run_config(args) -> RunConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
    cfg = RunConfig.from_dict(doc)
    for name in ("data", "out", "seed"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    if args.desk:
        cfg.desk = True
    if args.iterations is not None:
        cfg.train = {**cfg.train, "iterations": args.iterations}
    return cfg


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    if cfg.data is None:
        raise ConfigError("no dataset given (config 'data' or --data)")
    graph = load_graph_dir(_require_dir(cfg.data, "dataset"))
    tcfg = cfg.train_config()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    # the output location is not part of a run's identity
    run = {k: v for k, v in asdict(cfg).items() if k != "out"}
    full = {"run": {**run, "seed": tcfg.seed}, "train": asdict(tcfg)}
    fp = fingerprint(full)

    trainer = Trainer(graph, tcfg)
    trainer.artifact_meta = {"config_fingerprint": fp}
    if args.resume and (out / "last.json").exists():
        trainer.load_state(out)
        logger.info("resuming at iteration %d", trainer.iteration)
    save_graph_dir(graph, out / "graph", header=f"config {fp}")
    try:
        result = trainer.run(out)
    except NumericFault as exc:
        print(f"numeric fault: {exc}; last good checkpoint: {exc.checkpoint}", file=sys.stderr)
        return EXIT_RUNTIME
    (out / "loss_history.csv").write_text(history_csv(result.history), encoding="utf-8")
    manifest = {"config": full, "config_fingerprint": fp, "iterations_done": trainer.iteration,
                "loss_history_path": "loss_history.csv",
                "dataset_fingerprint": graph.fingerprint(),
                "best_iteration": result.best_iteration,
                "generator_updates": result.generator_updates,
                "discriminator_updates": result.discriminator_updates}
    _write_json(out / "manifest.json", manifest)
    print(f"trained {trainer.iteration} iterations; checkpoints in {out}")
    return EXIT_OK


def _load_checkpoint(path) -> tuple[ShadowCastModel, dict]:
    ckpt = _require_dir(path, "checkpoint")
    model_path = ckpt / "best.json" if (ckpt / "best.json").exists() else ckpt / "last.json"
    if not model_path.exists():
        raise CheckpointError(f"no best.json or last.json in {ckpt}")
    model = ShadowCastModel.load(model_path)
    manifest = {}
    if (ckpt / "manifest.json").exists():
        manifest = json.loads((ckpt / "manifest.json").read_text(encoding="utf-8"))
    return model, manifest


def _generate(args, seed: int):
    from .pipeline import generate_graph

    model, manifest = _load_checkpoint(args.checkpoint)
    real_dir = args.real or str(Path(args.checkpoint) / "graph")
    real = load_graph_dir(_require_dir(real_dir, "real graph"))
    if real.num_nodes != model.generator.n or real.num_labels != model.caster.k:
        raise CheckpointError(f"checkpoint expects N={model.generator.n}, K={model.caster.k}; "
                              f"graph has N={real.num_nodes}, K={real.num_labels}")
    control = resolve_control(args.control, model.empirical)
    budget = args.walks if args.walks is not None else (
        DESK_WALK_BUDGET if args.desk else FULL_WALK_BUDGET)
    target = args.target_edges if args.target_edges is not None else real.num_edges
    gen, scores = generate_graph(model, real, control, budget, target, seed=seed,
                                 method=args.method)
    settings = {"control": control.to_dict(), "walk_budget": budget, "target_edges": target,
                "seed": seed, "method": args.method,
                "checkpoint_fingerprint": manifest.get("config_fingerprint")}
    return real, gen, scores, control, settings


def cmd_generate(args) -> int:
    from .assembly import dump_scores

    seed = _cli_seed(args)
    real, gen, scores, _, settings = _generate(args, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fp = fingerprint(settings)
    save_graph_dir(gen, out, header=f"config {fp}")
    dump_scores(scores, out / "scores.txt", header=f"config {fp}")
    report = metrics.stats_report(gen, "generated")
    report.update({"config": settings, "config_fingerprint": fp,
                   "difference": metrics.compare(metrics.stats(real), metrics.stats(gen))})
    _write_json(out / "stats.json", report)
    table = metrics.stats_table([("real", metrics.stats(real).as_dict()),
                                 ("generated", metrics.stats(gen).as_dict())])
    (out / "stats.txt").write_text(f"# config {fp}\n{table}", encoding="utf-8")
    print(table, end="")
    return EXIT_OK


def cmd_eval(args) -> int:
    real = load_graph_dir(_require_dir(args.real, "real graph"))
    real_stats = metrics.stats(real)
    gens, graph_fps = [], []
    for path in args.generated:
        g = load_graph_dir(_require_dir(path, "generated graph"))
        if g.num_nodes != real.num_nodes:
            logger.warning("%s has N=%d, real graph has N=%d", path, g.num_nodes, real.num_nodes)
        gens.append(metrics.stats(g))
        graph_fps.append(g.fingerprint())
    diffs = [metrics.compare(real_stats, s) for s in gens]
    agg = metrics.aggregate(gens)
    agg_diff = metrics.aggregate([metrics.GraphStats(**d) for d in diffs])
    doc = {"real": real_stats.as_dict(), "generated": [s.as_dict() for s in gens],
           "difference": diffs, "generated_mean": agg, "difference_mean": agg_diff}
    # eval has no knobs: its identity is the set of graphs it compares
    fp = fingerprint({"real": real.fingerprint(), "generated": graph_fps})
    doc["config_fingerprint"] = fp
    rows = [("real", real_stats.as_dict()),
            ("generated mean", {k: v["mean"] for k, v in agg.items()}),
            ("generated stderr", {k: v["stderr"] for k, v in agg.items()}),
            ("|diff| mean", {k: v["mean"] for k, v in agg_diff.items()})]
    table = metrics.stats_table(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "eval.json", doc)
        (out / "eval.txt").write_text(f"# config {fp}\n{table}", encoding="utf-8")
    print(table, end="")
    return EXIT_OK


def cmd_compare_random(args) -> int:
    seed = _cli_seed(args)
    real, gen, _, control, settings = _generate(args, seed)
    model, _ = _load_checkpoint(args.checkpoint)
    label = args.label if args.label is not None else _surge_label(control, model.empirical)
    move = metrics.rewire_fraction(control, model.empirical, label)
    base = metrics.random_rewire_baseline(real, label, move, seed=seed)
    rs, gs, bs = metrics.stats(real), metrics.stats(gen), metrics.stats(base)
    doc = {"config": {**settings, "label": label, "move_fraction": move},
           "real": rs.as_dict(), "shadowcast": gs.as_dict(), "random_rewire": bs.as_dict(),
           "shadowcast_difference": metrics.compare(rs, gs),
           "random_rewire_difference": metrics.compare(rs, bs),
           "intra_fraction": {"real": metrics.label_mix(real).intra_fraction.tolist(),
                              "shadowcast": metrics.label_mix(gen).intra_fraction.tolist(),
                              "random_rewire": metrics.label_mix(base).intra_fraction.tolist()}}
    doc["config_fingerprint"] = fingerprint(doc["config"])
    table = metrics.stats_table([("|diff| shadowcast", doc["shadowcast_difference"]),
                                 ("|diff| random", doc["random_rewire_difference"])])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "compare.json", doc)
        (out / "compare.txt").write_text(f"# config {doc['config_fingerprint']}\n{table}", encoding="utf-8")
    print(table, end="")
    return EXIT_OK


def _surge_label(control: MarkovControl, baseline: MarkovControl) -> int:
    """The label whose self-transition the scenario raises the most."""
    return int(np.argmax(np.diag(control.a) - np.diag(baseline.a)))


def cmd_presets(args) -> int:
    for name in PRESETS:
        ctrl = preset(name)
        if args.json:
            print(json.dumps(ctrl.to_dict()))
        else:
            print(f"{name}: pi={ctrl.pi.tolist()} a={ctrl.a.tolist()}")
    return EXIT_OK


def _cli_seed(args) -> int:
    return RunConfig(seed=args.seed).resolved_seed()


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shadowcast", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="load a labeled graph, keep its LCC, write canonical files")
    s.add_argument("--edges", required=True, help="edge list (or .npz for cora-npz)")
    s.add_argument("--labels", help="node label file")
    s.add_argument("--format", choices=("edgelist", "cora-npz", "eucore-top"), default="edgelist")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("train", help="train caster, generator and discriminator")
    s.add_argument("--config", help="JSON run configuration")
    s.add_argument("--data", help="dataset directory (edges.txt, labels.txt)")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--iterations", type=int)
    s.add_argument("--desk", action="store_true", help="CI-sized budgets")
    s.add_argument("--resume", action="store_true", help="continue from last.json in --out")
    s.set_defaults(func=cmd_train)

    def generation_args(s):
        s.add_argument("--checkpoint", required=True, help="training output directory")
        s.add_argument("--real", help="real graph directory (default: the one saved at training)")
        s.add_argument("--walks", type=int, help="walk budget")
        s.add_argument("--target-edges", type=int)
        s.add_argument("--method", choices=("probabilistic", "topk"), default="probabilistic")
        s.add_argument("--seed", type=int)
        s.add_argument("--desk", action="store_true")

    s = sub.add_parser("generate", help="generate a graph under a label control")
    generation_args(s)
    s.add_argument("--control", default="empirical", help="'empirical', a preset name or a JSON file")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("eval", help="compare generated graphs against a real graph")
    s.add_argument("--real", required=True)
    s.add_argument("generated", nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("compare-random", help="scenario generation vs random rewiring")
    generation_args(s)
    s.add_argument("--control", "--scenario", dest="control", required=True)
    s.add_argument("--label", type=int, help="label to surge (default: largest self-transition increase)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare_random)

    s = sub.add_parser("presets", help="list built-in scenario controls")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, IngestError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ShadowcastError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
