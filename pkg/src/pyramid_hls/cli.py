"""Command-line front end: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 domain error (any PyramidError), 2 usage error.
The seed is resolved as: --seed flag, then the config file, then the
PYRAMID_SEED environment variable, then 0.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path


from .dataset import GOALS, TARGETS, load_dataset, save_dataset, split
from .ensemble import PyramidConfig, load_pyramid, save_pyramid, train_pyramid
from .errors import InvalidParams, PyramidError
from .evaluation import compare_learners, evaluate
from .fixtures import bundled_landscape_names, load_bundled_landscape
from .learners import LearnerSpec, load_model, save_model, train
from .manifest import default_manifest, flatten, load_manifest, report_scalars
from .reduction import ReductionRecipe, apply_recipe, apply_recipe_dataset, build_recipe
from .report import parse_report
from .synth import OracleSpec, gen_dataset
from .timing import (
    load_landscape,
    minerva_search,
    scan_table,
)

DEFAULT_SEED = 0

BASE_SPECS = {
    "ridge": lambda a: LearnerSpec("ridge", {"lambda": a.ridge_lambda}),
    "mlp": lambda a: LearnerSpec("mlp", {
        "hidden_layers": [int(h) for h in a.hidden_layers.split(",")],
        "epochs": a.epochs, "learning_rate": a.learning_rate,
    }),
    "svr": lambda a: LearnerSpec("svr", {
        "C": a.svr_c, "epsilon": a.svr_epsilon, "gamma": a.svr_gamma,
        "max_passes": a.svr_max_passes,
    }),
    "rf": lambda a: LearnerSpec("rf", {
        "n_trees": a.n_trees, "max_depth": a.max_depth,
    }),
}


def _load_config(path: str | None) -> dict:
    """Flat key=value file; a missing section header is tolerated."""
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[pyramid]\n" + text
    parser = configparser.ConfigParser()
    parser.read_string(text)
    merged = {}
    for section in parser.sections():
        merged.update(dict(parser[section]))
    return merged


def _resolve_seed(args, config: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in config:
        return int(config["seed"])
    return int(os.environ.get("PYRAMID_SEED", DEFAULT_SEED))


def _emit(payload, fmt: str | None, csv_text: str | None = None,
          table_text: str | None = None, default: str = "json"):
    """payload is JSON-ready; csv/table renderings fall back to JSON."""
    fmt = fmt or default
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    elif fmt == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    elif fmt == "table" and table_text is not None:
        print(table_text)
    else:
        print(json.dumps(payload, indent=2))


def _get_landscape(name_or_path: str):
    if name_or_path in bundled_landscape_names():
        return load_bundled_landscape(name_or_path)
    return load_landscape(name_or_path)


def _get_manifest(path: str | None):
    return load_manifest(path) if path else default_manifest()


# --- subcommand bodies ------------------------------------------------------

def cmd_gen_synth(args, config):
    seed = _resolve_seed(args, config)
    spec = OracleSpec(noise_level=args.noise)
    ds = gen_dataset(spec, args.designs, seed=seed,
                     out_dir=args.out_dir if args.reports else None)
    out_csv = Path(args.out_dir) / "dataset.csv"
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out_csv)
    print(f"wrote {len(ds)} samples to {out_csv}")
    return 0


def cmd_parse(args, config):
    report = parse_report(Path(args.report).read_text(encoding="utf-8"))
    manifest = _get_manifest(args.manifest)
    vec = flatten(report, manifest)
    payload = {
        "device": report.device_id,
        "scalars": report_scalars(report),
        "manifest_id": vec.manifest_id,
        "features": dict(zip(manifest.names, vec.values.tolist())),
    }
    csv_text = "name,value\n" + "".join(
        f"{n},{v!r}\n" for n, v in zip(manifest.names, vec.values.tolist()))
    _emit(payload, args.output, csv_text=csv_text)
    return 0


def cmd_reduce(args, config):
    ds = load_dataset(args.dataset, feature_space_id=args.manifest_id)
    recipe = build_recipe(ds, args.manifest_id,
                          corr_threshold=args.corr_threshold,
                          lam=args.ridge_lambda,
                          coef_threshold=args.coef_threshold)
    Path(args.out).write_text(recipe.to_json(), encoding="utf-8")
    print(f"kept {len(recipe.kept_indices)} features -> {args.out}")
    return 0


def _train_one(kind, spec, goal_ds, target, seed, pyramid_seed_offset=1):
    if kind != "pyramid":
        X = goal_ds.feature_matrix()
        y = goal_ds.target_vector(target)
        return train(spec, X, y, seed=seed)
    inner_train, inner_val = split(goal_ds, 0.10, seed=seed + pyramid_seed_offset)
    cfg = PyramidConfig(seed=seed, submodel_spec=spec)
    return train_pyramid(inner_train, inner_val, cfg, target=target)


def cmd_train(args, config):
    seed = _resolve_seed(args, config)
    recipe = ReductionRecipe.from_json(Path(args.recipe).read_text(encoding="utf-8"))
    ds = load_dataset(args.dataset, feature_space_id=recipe.manifest_id)
    reduced = apply_recipe_dataset(recipe, ds)

    if args.learner == "pyramid":
        spec = LearnerSpec("mlp", {
            "hidden_layers": [40], "epochs": 200, "learning_rate": 0.05,
            "momentum": 0.9, "batch_size": None,
        })
    else:
        spec = BASE_SPECS[args.learner](args)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for goal in GOALS:
        goal_ds = reduced.filter_goal(goal)
        for target in TARGETS:
            jobs.append((goal, target, goal_ds))

    def fit(goal, target, goal_ds):
        return goal, target, _train_one(args.learner, spec, goal_ds, target, seed)

    if args.jobs > 1:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=args.jobs)(delayed(fit)(*j) for j in jobs)
    else:
        results = [fit(*j) for j in jobs]

    index = {"learner": args.learner, "seed": seed, "recipe": str(args.recipe),
             "models": {}}
    for goal, target, model in results:
        name = f"{goal}_{target}.json"
        if args.learner == "pyramid":
            save_pyramid(model, out_dir / name)
        else:
            save_model(model, out_dir / name)
        index["models"][f"{goal}/{target}"] = name
    (out_dir / "index.json").write_text(json.dumps(index, indent=2), encoding="utf-8")
    print(f"wrote 10 models to {out_dir}")
    return 0


def _load_bundle(model_path: str):
    """Accepts a bundle directory or its index.json."""
    path = Path(model_path)
    index_path = path / "index.json" if path.is_dir() else path
    index = json.loads(index_path.read_text(encoding="utf-8"))
    base = index_path.parent
    loader = load_pyramid if index["learner"] == "pyramid" else load_model
    models = {}
    for key, name in index["models"].items():
        goal, target = key.split("/")
        models[(goal, target)] = loader(base / name)
    return index, models


def cmd_predict(args, config):
    index, models = _load_bundle(args.model)
    recipe = ReductionRecipe.from_json(Path(index["recipe"]).read_text(encoding="utf-8"))
    report = parse_report(Path(args.report).read_text(encoding="utf-8"))
    manifest = _get_manifest(args.manifest)
    vec = apply_recipe(recipe, flatten(report, manifest))
    estimates = {
        target: float(models[(args.goal, target)].predict(vec.values))
        for target in TARGETS
    }
    print(json.dumps(estimates, indent=2))
    return 0


def cmd_evaluate(args, config):
    index, models = _load_bundle(args.model)
    recipe = ReductionRecipe.from_json(Path(index["recipe"]).read_text(encoding="utf-8"))
    ds = load_dataset(args.dataset, feature_space_id=recipe.manifest_id)
    reduced = apply_recipe_dataset(recipe, ds)
    report = evaluate(models, reduced, grouping=tuple(args.grouping.split(",")),
                      weighted=args.weighted)
    payload = [c.__dict__ for c in report.cells]
    _emit(payload, args.output, csv_text=report.to_csv(), table_text=report.to_table())
    return 0


def cmd_compare(args, config):
    seed = _resolve_seed(args, config)
    ds = load_dataset(args.dataset)
    if args.recipe:
        recipe = ReductionRecipe.from_json(Path(args.recipe).read_text(encoding="utf-8"))
        ds = apply_recipe_dataset(recipe, ds)
    if args.goal:
        ds = ds.filter_goal(args.goal)
    train_ds, test_ds = split(ds, args.test_fraction, seed=seed)
    class _A:     # namespace with the default hyperparameters
        ridge_lambda = 1.0
        hidden_layers = "105,60,44,30"
        epochs = 150
        learning_rate = 0.02
        svr_c = 5.0
        svr_epsilon = 0.15
        svr_gamma = 0.005
        svr_max_passes = 300
        n_trees = 10
        max_depth = 6
    specs = [BASE_SPECS[k](_A) for k in ("ridge", "mlp", "svr", "rf")]
    ranking = compare_learners(train_ds, test_ds, specs, seed=seed,
                               labels=["ridge", "mlp", "svr", "rf"])
    _emit(ranking.rows, args.output, csv_text=ranking.to_csv())
    return 0


def cmd_fmax_search(args, config):
    land = _get_landscape(args.landscape)
    result = minerva_search(land, args.goal, scan_radius=args.radius,
                            precision=args.precision)
    payload = {
        "achieved_fmax": result.achieved_fmax,
        "strategy_id": result.strategy_id,
        "lut_count": result.lut_count,
        "goal": result.goal,
        "score": result.score,
        "probes": result.probes,
    }
    csv_text = ("achieved_fmax,strategy_id,lut_count,goal,score,probes\n"
                f"{result.achieved_fmax!r},{result.strategy_id},{result.lut_count},"
                f"{result.goal},{result.score!r},{result.probes}\n")
    _emit(payload, args.output, csv_text=csv_text)
    return 0


def cmd_scan(args, config):
    land = _get_landscape(args.landscape)
    rows = scan_table(land, args.strategy, center=args.center,
                      radius=args.radius, precision=args.precision)
    csv_text = "freq_mhz,wns_ns,passes\n" + "".join(
        f"{f!r},{w!r},{int(ok)}\n" for f, w, ok in rows)
    payload = [{"freq_mhz": f, "wns_ns": w, "passes": ok} for f, w, ok in rows]
    _emit(payload, args.output, csv_text=csv_text, default="csv")
    return 0


# --- argument wiring --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyramid",
        description="HLS QoR re-calibration and Fmax search toolkit",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file; flags win")
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (fallback: config, then PYRAMID_SEED, then 0)")
    common.add_argument("--jobs", type=int, default=1, help="parallelism cap")
    # default=None so each command can pick its own fallback format; a
    # parser-level default would mutate the action shared by all subparsers
    common.add_argument("--output", choices=("csv", "json", "table"),
                        default=None, help="output format where applicable")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("gen-synth", help="generate the synthetic benchmark")
    p.add_argument("--designs", type=int, default=90)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--reports", action="store_true",
                   help="also write one canonical report file per design point")
    p.set_defaults(func=cmd_gen_synth)

    p = add_parser("parse", help="parse a report and flatten features")
    p.add_argument("--report", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_parse)

    p = add_parser("reduce", help="build a feature-reduction recipe")
    p.add_argument("--dataset", required=True)
    p.add_argument("--manifest-id", default="manifest_v1")
    p.add_argument("--corr-threshold", type=float, default=0.95)
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--coef-threshold", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = add_parser("train", help="train all 10 (goal, target) models")
    p.add_argument("--dataset", required=True)
    p.add_argument("--recipe", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--learner", choices=("ridge", "mlp", "svr", "rf", "pyramid"),
                   default="pyramid")
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--hidden-layers", default="105,60,44,30")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--learning-rate", type=float, default=0.02)
    p.add_argument("--svr-c", type=float, default=5.0)
    p.add_argument("--svr-epsilon", type=float, default=0.15)
    p.add_argument("--svr-gamma", type=float, default=0.005)
    p.add_argument("--svr-max-passes", type=int, default=300)
    p.add_argument("--n-trees", type=int, default=10)
    p.add_argument("--max-depth", type=int, default=6)
    p.set_defaults(func=cmd_train)

    p = add_parser("predict", help="predict the 5 targets for one report")
    p.add_argument("--model", required=True,
                   help="model bundle directory or its index.json")
    p.add_argument("--report", required=True)
    p.add_argument("--goal", choices=GOALS, default="TP")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_predict)

    p = add_parser("evaluate", help="per-cell relative RMSE on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--grouping", default="goal,device,category")
    p.add_argument("--weighted", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = add_parser("compare", help="rank the four base learners")
    p.add_argument("--dataset", required=True)
    p.add_argument("--recipe", default=None)
    p.add_argument("--goal", choices=GOALS, default=None)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_compare)

    p = add_parser("fmax-search", help="two-phase search over all strategies")
    p.add_argument("--landscape", required=True,
                   help="bundled landscape name or CSV path")
    p.add_argument("--goal", choices=GOALS, default="TP")
    p.add_argument("--radius", type=float, default=64.0)
    p.add_argument("--precision", type=float, default=1.0)
    p.set_defaults(func=cmd_fmax_search)

    p = add_parser("scan", help="WNS table over a frequency window")
    p.add_argument("--landscape", required=True)
    p.add_argument("--strategy", type=int, default=0)
    p.add_argument("--center", type=float, required=True)
    p.add_argument("--radius", type=float, default=64.0)
    p.add_argument("--precision", type=float, default=1.0)
    p.set_defaults(func=cmd_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load_config(args.config)
        if args.jobs < 1:
            raise InvalidParams("--jobs must be >= 1")
        return args.func(args, config)
    except PyramidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
