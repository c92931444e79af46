"""Command-line surface: dataset generation, POD extraction, training,
prediction, evaluation, cross-validation and report emission.

Subcommands: generate, import, pod, train, predict, evaluate, cv, report.
Configuration is strict JSON (unknown keys rejected); command-line flags
override config fields.  GRASSPOD_THREADS caps parallelism for generation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from . import io as gio
from .chart import wrap_back
from .cxgboost import TrainConfig
from .harness import (
    Case,
    baseline_from_model,
    evaluate_method,
    run_cv,
    train_model,
    truncation_floor,
)
from .pod import SnapshotMatrix, compute_pod
from .pdelab import (
    BeamSpec,
    BurgersSpec,
    WaveSpec,
    beam_grid,
    burgers_grid,
    run_beam,
    run_burgers,
    run_wave,
    wave_grid,
)

# Per-problem boosting presets (grid-searched values reported with each
# benchmark) and default truncation ranks.
TRAIN_PRESETS = {
    "external": dict(rounds=120, learning_rate=0.2, max_depth=2, subsample=0.7),
    "wave": dict(rounds=80, learning_rate=0.2, max_depth=4, subsample=1.0),
    "burgers": dict(rounds=100, learning_rate=0.35, max_depth=3, subsample=1.0),
    "beam": dict(rounds=80, learning_rate=0.4, max_depth=4, subsample=1.0),
}
COMMON_PRESET = dict(leaf_penalty=1e-3, l2_penalty=1e-2, min_samples_leaf=1)
DEFAULT_RANKS = {"burgers": 6, "beam": 10, "wave": 15}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "problem": {"enum": ["burgers", "beam", "wave", "external"]},
        "rank": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "reference_policy": {
            "oneOf": [{"enum": ["minimax", "first"]}, {"type": "integer"}]
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rounds": {"type": "integer", "minimum": 0},
                "learning_rate": {"type": "number"},
                "max_depth": {"type": "integer", "minimum": 0},
                "leaf_penalty": {"type": "number"},
                "l2_penalty": {"type": "number"},
                "subsample": {"type": "number"},
                "min_samples_leaf": {"type": "integer", "minimum": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "amplitudes": {"type": "array", "items": {"type": "number"}},
                "viscosities": {"type": "array", "items": {"type": "number"}},
                "frequencies": {"type": "array", "items": {"type": "number"}},
                "odd_values": {"type": "array", "items": {"type": "number"}},
                "even_values": {"type": "array", "items": {"type": "number"}},
                "nx": {"type": "integer", "minimum": 8},
                "nt": {"type": "integer", "minimum": 2},
                "n_side": {"type": "integer", "minimum": 8},
                "dt": {"type": "number"},
                "n_snapshots": {"type": "integer", "minimum": 1},
            },
        },
    },
}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    try:
        jsonschema.validate(doc, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SystemExit(f"invalid config {path}: {exc.message}")
    return doc


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GRASSPOD_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def build_train_config(problem: str, config: dict, seed: int) -> TrainConfig:
    fields = dict(COMMON_PRESET)
    fields.update(TRAIN_PRESETS.get(problem, TRAIN_PRESETS["external"]))
    fields.update(config.get("train", {}))
    return TrainConfig(rng_seed=seed, **fields)


def load_cases(manifest: gio.DatasetManifest, entries=None) -> list[Case]:
    cases = []
    for entry in entries if entries is not None else manifest.entries:
        data = gio.read_snapshot(entry.path)
        if data.shape != (manifest.n, manifest.n_t):
            raise SystemExit(
                f"{entry.path}: shape {data.shape} does not match manifest "
                f"({manifest.n}, {manifest.n_t})"
            )
        theta = np.array(entry.theta)
        cases.append(
            Case(theta=theta, snapshots=SnapshotMatrix(data, theta, manifest.problem))
        )
    return cases


# ---------------------------------------------------------------------------
# generate

def _grid_points(problem: str, grid_cfg: dict):
    if problem == "burgers":
        return burgers_grid(grid_cfg.get("amplitudes"), grid_cfg.get("viscosities"))
    if problem == "wave":
        return wave_grid(grid_cfg.get("amplitudes"), grid_cfg.get("frequencies"))
    if problem == "beam":
        return beam_grid(grid_cfg.get("odd_values"), grid_cfg.get("even_values"))
    raise SystemExit(f"cannot generate problem {problem!r}")


def _make_runner(problem: str, grid_cfg: dict):
    if problem == "burgers":
        nx = grid_cfg.get("nx", 256)
        nt = grid_cfg.get("nt", 101)
        return (
            lambda theta: run_burgers(BurgersSpec(theta[0], theta[1], nx=nx, nt=nt)),
            nx,
            nt,
        )
    if problem == "wave":
        n_side = grid_cfg.get("n_side", 64)
        dt = grid_cfg.get("dt", 0.002)
        n_snapshots = grid_cfg.get("n_snapshots", 500)
        return (
            lambda theta: run_wave(
                WaveSpec(theta[0], theta[1], n_side=n_side, dt=dt, n_snapshots=n_snapshots)
            ),
            n_side * n_side,
            n_snapshots,
        )
    nx = grid_cfg.get("nx", 200)
    nt = grid_cfg.get("nt", 100)
    return (
        lambda theta: run_beam(BeamSpec(theta[0], theta[1], nx=nx, nt=nt)),
        nx,
        nt,
    )


def cmd_generate(args) -> int:
    config = load_config(args.config)
    problem = args.problem or config.get("problem")
    if problem is None:
        raise SystemExit("generate: --problem (or config problem) is required")
    rank = args.rank or config.get("rank") or DEFAULT_RANKS.get(problem)
    if rank is None:
        raise SystemExit("generate: --rank required for this problem")
    grid_cfg = config.get("grid", {})
    points = _grid_points(problem, grid_cfg)
    runner, n, n_t = _make_runner(problem, grid_cfg)
    os.makedirs(args.out, exist_ok=True)

    def produce(item):
        index, point = item
        name = f"{problem}_{index:03d}.gpm1"
        try:
            snap = runner(point.theta)
            gio.write_snapshot(os.path.join(args.out, name), snap.data)
            return gio.ManifestEntry(theta=point.theta, path=name, split=point.split), None
        except Exception as exc:
            return None, f"{point.theta}: {type(exc).__name__}: {exc}"

    results = parallel_map(produce, list(enumerate(points)))
    entries = [entry for entry, _ in results if entry is not None]
    failures = [msg for _, msg in results if msg is not None]
    manifest = gio.DatasetManifest(
        problem=problem, n=n, n_t=n_t, rank=rank, entries=tuple(entries)
    )
    manifest_name = "manifest.json" if not failures else "manifest.incomplete.json"
    gio.write_manifest(os.path.join(args.out, manifest_name), manifest)
    for msg in failures:
        print(f"generate: FAILED {msg}", file=sys.stderr)
    print(
        f"generate: {len(entries)} snapshot files "
        f"({sum(1 for e in entries if e.split == 'train')} train / "
        f"{sum(1 for e in entries if e.split == 'test')} test) -> {args.out}"
    )
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# import

def cmd_import(args) -> int:
    thetas = [tuple(float(v) for v in spec.split(",")) for spec in args.thetas.split(";")]
    if len(thetas) != len(args.csv):
        raise SystemExit(
            f"import: {len(args.csv)} csv files but {len(thetas)} theta vectors"
        )
    os.makedirs(args.out, exist_ok=True)
    order = sorted(range(len(thetas)), key=lambda i: thetas[i])
    shape = None
    entries = []
    for rank_pos, i in enumerate(order):
        data = np.loadtxt(args.csv[i], delimiter=",", ndmin=2)
        if shape is None:
            shape = data.shape
        elif data.shape != shape:
            raise SystemExit(
                f"import: {args.csv[i]} has shape {data.shape}, expected {shape}"
            )
        name = f"{args.problem}_{rank_pos:03d}.gpm1"
        gio.write_snapshot(os.path.join(args.out, name), data)
        split = "train" if rank_pos % 3 == 0 else "test"
        entries.append(gio.ManifestEntry(theta=thetas[i], path=name, split=split))
    manifest = gio.DatasetManifest(
        problem=args.problem,
        n=shape[0],
        n_t=shape[1],
        rank=args.rank,
        entries=tuple(entries),
    )
    gio.write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    print(f"import: {len(entries)} matrices -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# pod

def cmd_pod(args) -> int:
    manifest = gio.read_manifest(args.manifest)
    rank = args.rank or manifest.rank
    cases = load_cases(manifest)
    rows = []
    for entry, case in zip(manifest.entries, cases):
        result = compute_pod(case.snapshots, rank)
        rows.append(
            list(entry.theta)
            + [
                truncation_floor(result.singular_values, rank),
                result.energy_captured,
                entry.split,
            ]
        )
    dim = len(manifest.entries[0].theta)
    header = [f"theta_{i}" for i in range(dim)] + ["floor", "energy", "split"]
    out = args.out or os.path.join(os.path.dirname(args.manifest), "pod_summary.csv")
    gio.write_csv(out, header, rows)
    print(f"pod: rank-{rank} summary for {len(rows)} cases -> {out}")
    return 0


# ---------------------------------------------------------------------------
# train

def cmd_train(args) -> int:
    config = load_config(args.config)
    manifest = gio.read_manifest(args.manifest)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    rank = args.rank or config.get("rank") or manifest.rank
    policy = args.reference or config.get("reference_policy", "minimax")
    train_entries = manifest.split("train")
    if not train_entries:
        raise SystemExit("train: manifest has no training entries")
    cases = load_cases(manifest, train_entries)
    cfg = build_train_config(manifest.problem, config, seed)
    model = train_model(cases, rank, cfg, policy, manifest.problem)
    gio.save_model(args.out, model)
    print(
        f"train: {len(cases)} cases, rank {rank}, {cfg.rounds} rounds -> {args.out}"
    )
    return 0


# ---------------------------------------------------------------------------
# predict

def cmd_predict(args) -> int:
    model = gio.load_model(args.model)
    theta = np.array([float(v) for v in args.theta.split(",")])
    y = model.predict_y(theta)
    basis = wrap_back(model.chart, y)
    gio.write_snapshot(args.out, basis.matrix)
    print(
        f"predict: theta {theta.tolist()} -> ||y|| = {np.linalg.norm(y):.6f}, "
        f"basis {basis.n} x {basis.r} -> {args.out}"
    )
    return 0


# ---------------------------------------------------------------------------
# evaluate

def _write_reports(out_dir, problem, dim, records, stats, meta):
    os.makedirs(out_dir, exist_ok=True)
    theta_cols = [f"theta_{i}" for i in range(dim)]
    rows = [
        [problem, rec.method] + list(rec.theta) + [rec.error, rec.floor, int(rec.clipped), rec.status]
        for rec in records
    ]
    gio.write_csv(
        os.path.join(out_dir, "percase.csv"),
        ["problem", "method"] + theta_cols + ["error", "floor", "clipped", "status"],
        rows,
    )
    doc = dict(meta)
    doc["stats"] = {
        method: (s.as_dict() if s is not None else None) for method, s in stats.items()
    }
    payload = json.dumps(doc, indent=1, sort_keys=True).encode() + b"\n"
    gio.atomic_write_bytes(os.path.join(out_dir, "stats.json"), payload)


def cmd_evaluate(args) -> int:
    manifest = gio.read_manifest(args.manifest)
    test_entries = manifest.split("test")
    methods = ["cxgb", "interp"] if args.method == "both" else [args.method]
    if not test_entries:
        os.makedirs(args.out, exist_ok=True)
        gio.write_csv(
            os.path.join(args.out, "percase.csv"),
            ["problem", "method", "error", "floor", "clipped", "status"],
            [],
        )
        print("evaluate: empty test split, nothing to do", file=sys.stderr)
        return 3
    cases = load_cases(manifest, test_entries)
    model = None
    baseline = None
    rank = manifest.rank
    if any(m in ("cxgb", "interp") for m in methods):
        if args.model is None:
            raise SystemExit("evaluate: --model required for cxgb/interp methods")
        model = gio.load_model(args.model)
        if model.chart.n != manifest.n:
            raise SystemExit(
                f"evaluate: model ambient dimension {model.chart.n} does not "
                f"match manifest n = {manifest.n}"
            )
        rank = model.rank
        baseline = baseline_from_model(model)

    records = []
    stats = {}
    for method in methods:
        recs, st = evaluate_method(method, cases, rank, model=model, baseline=baseline)
        records.extend(recs)
        stats[method] = st
    meta = {
        "problem": manifest.problem,
        "rank": rank,
        "methods": methods,
        "n_cases": len(cases),
        "clip_counts": {
            "cxgb": model.clip_count if model else 0,
            "interp": baseline.clip_count if baseline else 0,
        },
    }
    dim = len(manifest.entries[0].theta)
    _write_reports(args.out, manifest.problem, dim, records, stats, meta)
    failed = [r for r in records if r.status != "ok"]
    for rec in failed:
        print(f"evaluate: case {rec.theta} {rec.method}: {rec.status}", file=sys.stderr)
    print(f"evaluate: {len(records)} case records -> {args.out}")
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# cv

def cmd_cv(args) -> int:
    config = load_config(args.config)
    manifest = gio.read_manifest(args.manifest)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    rank = args.rank or config.get("rank") or manifest.rank
    policy = args.reference or config.get("reference_policy", "minimax")
    cases = load_cases(manifest)
    cfg = build_train_config(manifest.problem, config, seed)
    result = run_cv(
        cases, rank, cfg, k=args.folds, seed=seed, reference_policy=policy,
        problem=manifest.problem,
    )
    os.makedirs(args.out, exist_ok=True)
    dim = len(manifest.entries[0].theta)
    theta_cols = [f"theta_{i}" for i in range(dim)]
    rows = [
        [manifest.problem, fold, rec.method]
        + list(rec.theta)
        + [rec.error, rec.floor, int(rec.clipped), rec.status]
        for fold, rec in result["records"]
    ]
    gio.write_csv(
        os.path.join(args.out, "cv_percase.csv"),
        ["problem", "fold", "method"] + theta_cols + ["error", "floor", "clipped", "status"],
        rows,
    )
    doc = {
        "problem": manifest.problem,
        "rank": rank,
        "seed": seed,
        "folds": args.folds,
        "config": {
            "rounds": cfg.rounds,
            "learning_rate": cfg.learning_rate,
            "max_depth": cfg.max_depth,
            "leaf_penalty": cfg.leaf_penalty,
            "l2_penalty": cfg.l2_penalty,
            "subsample": cfg.subsample,
        },
        "fold_stats": [
            {
                "fold": entry["fold"],
                "stats": {
                    m: (s.as_dict() if s is not None else None)
                    for m, s in entry["stats"].items()
                },
            }
            for entry in result["fold_stats"]
        ],
        "pooled": {
            m: (s.as_dict() if s is not None else None)
            for m, s in result["pooled"].items()
        },
    }
    gio.atomic_write_bytes(
        os.path.join(args.out, "cv_stats.json"),
        json.dumps(doc, indent=1, sort_keys=True).encode() + b"\n",
    )
    for method, st in result["pooled"].items():
        if st is not None:
            print(
                f"cv[{method}]: mean {st.mean:.4e}  median {st.median:.4e}  "
                f"max {st.max:.4e}"
            )
    failed = [rec for _, rec in result["records"] if rec.status != "ok"]
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# report

def cmd_report(args) -> int:
    with open(args.stats, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    blocks = []
    if "pooled" in doc:
        blocks.append(("pooled", doc["pooled"]))
        for entry in doc.get("fold_stats", []):
            blocks.append((f"fold {entry['fold']}", entry["stats"]))
    else:
        blocks.append(("test split", doc.get("stats", {})))
    columns = ["mean", "std", "median", "q25", "q75", "min", "max"]
    print(f"problem: {doc.get('problem', '?')}   rank: {doc.get('rank', '?')}")
    for label, stats in blocks:
        print(f"-- {label}")
        print("  {:<8s}".format("method") + "".join(f"{c:>11s}" for c in columns))
        for method, values in stats.items():
            if values is None:
                print(f"  {method:<8s}  (no cases)")
                continue
            print(
                f"  {method:<8s}"
                + "".join(f"{values[c]:>11.3e}" for c in columns)
            )
    return 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="grasspod",
        description="POD subspace prediction with constrained gradient boosting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run a benchmark grid and write snapshots")
    p.add_argument("--problem", choices=["burgers", "beam", "wave"])
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--rank", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("import", help="convert CSV matrices into snapshot files")
    p.add_argument("csv", nargs="+")
    p.add_argument("--thetas", required=True, help="semicolon-separated theta vectors")
    p.add_argument("--problem", default="external")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("pod", help="per-case truncation floors and energies")
    p.add_argument("--manifest", required=True)
    p.add_argument("--rank", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pod)

    p = sub.add_parser("train", help="fit the constrained boosting model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--rank", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--reference")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict a basis at a parameter point")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True, help="comma-separated values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate methods on the test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model")
    p.add_argument("--method", choices=["cxgb", "interp", "oracle", "both"], default="both")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", help="k-fold cross-validation of both methods")
    p.add_argument("--manifest", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--rank", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--reference")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("report", help="pretty-print a stats JSON file")
    p.add_argument("--stats", required=True)
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
