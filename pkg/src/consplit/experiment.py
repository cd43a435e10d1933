"""Batch experiment driver: grids of (algorithm, dataset mode, seed) runs.

Each run splits the data, trains, shrinks the iterate trace into a sparse
stochastic classifier, and reports error rates and constraint violations.
"Training" metrics follow the split discipline of the game itself: the error
rate is measured on the data the objective player saw, violations on the data
the constraint player saw. Test metrics use a held-out set neither touched.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .datasets import (DatasetView, GroupDef, SimulatedSpec, TabularSpec,
                       generate_simulated, load_tabular, split)
from .models import Architecture
from .problems import ConstrainedProblem, RateConstraintSpec
from .shrinking import (ShrinkInput, StochasticClassifier, evaluate_stochastic,
                        shrink)
from .solvers import SolverConfig, run_solver, save_trace

log = logging.getLogger(__name__)

MODES = ("two_dataset", "one_dataset")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: dict                   # {"type": "simulated"|"tabular", ...}
    constraints: tuple              # RateConstraintSpec sequence
    model: dict                     # {"kind": "linear"} or {"kind": "mlp", "hidden": h}
    solvers: tuple                  # SolverConfig sequence
    modes: tuple = MODES
    runs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not self.solvers:
            raise ValueError("need at least one solver configuration")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown dataset mode {mode!r}")


def _parse_solver(entry: dict) -> SolverConfig:
    return SolverConfig(**entry)


def _parse_constraint(entry: dict) -> RateConstraintSpec:
    return RateConstraintSpec(entry["kind"], entry.get("threshold", 0.0),
                              entry.get("group"))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    return ExperimentConfig(
        name=raw.get("name", Path(path).stem),
        dataset=raw["dataset"],
        constraints=tuple(_parse_constraint(c) for c in raw["constraints"]),
        model=raw.get("model", {"kind": "linear"}),
        solvers=tuple(_parse_solver(s) for s in raw["solvers"]),
        modes=tuple(raw.get("modes", MODES)),
        runs=int(raw.get("runs", 10)),
        seed=int(raw.get("seed", 0)),
    )


def concat_views(a: DatasetView, b: DatasetView, role: str) -> DatasetView:
    return DatasetView(np.vstack([a.features, b.features]),
                       np.concatenate([a.labels, b.labels]),
                       np.vstack([a.groups, b.groups]), role)


def _tabular_spec(dataset: dict) -> TabularSpec:
    groups = tuple(GroupDef(g["column"], g["op"], g.get("value"))
                   for g in dataset.get("groups", ()))
    return TabularSpec(
        source=dataset["source"],
        label_column=dataset["label_column"],
        positive_value=dataset["positive_value"],
        feature_columns=tuple(dataset.get("feature_columns", ())),
        categorical_columns=tuple(dataset.get("categorical_columns", ())),
        bucketize_columns=tuple(dataset.get("bucketize_columns", ())),
        groups=groups,
        num_buckets=int(dataset.get("num_buckets", 10)),
    )


def build_run_data(dataset: dict, run_seed: int):
    """Materialize (pool_train, pool_val, test) views for one seeded run."""
    kind = dataset.get("type", "simulated")
    if kind == "simulated":
        spec = SimulatedSpec(n=int(dataset.get("n", 1000)),
                             sigma=float(dataset.get("sigma", 1.0)),
                             seed=run_seed)
        return generate_simulated(spec)
    if kind != "tabular":
        raise ValueError(f"unknown dataset type {kind!r}")
    spec = _tabular_spec(dataset)
    if dataset.get("test_source"):
        pool, test = load_tabular(spec, dataset["test_source"])
    else:
        full = load_tabular(spec)
        rng = np.random.default_rng(run_seed)
        perm = rng.permutation(full.n)
        third = full.n // 3
        test = full.subset(perm[:third], "test")
        pool = full.subset(perm[third:], "train")
    train, val = split(pool, "two_dataset", run_seed)
    return train, val, test


def player_views(train: DatasetView, val: DatasetView, mode: str):
    """The datasets each player sees: independent halves, or a shared union."""
    if mode == "two_dataset":
        return train, val
    union = concat_views(train, val, "train")
    return union, union


def execute_run(config: ExperimentConfig, solver_index: int, mode: str,
                run: int, output_dir: str | None = None) -> dict:
    """One (solver, mode, seed) cell: split, train, shrink, evaluate.

    Returns a record with per-split metrics, or status=failed with a reason.
    """
    solver = config.solvers[solver_index]
    run_seed = config.seed + run
    tag = f"{config.name}_{solver.algorithm}_{mode}_run{run}"
    try:
        train, val, test = build_run_data(config.dataset, run_seed)
        theta_train, theta_val = player_views(train, val, mode)
        problem = ConstrainedProblem(config.constraints)
        arch = Architecture(config.model.get("kind", "linear"),
                            theta_train.dim,
                            int(config.model.get("hidden", 0)))
        cfg = replace(solver, dataset_mode=mode, seed=run_seed)
        trace = run_solver(problem, arch, theta_train, theta_val, cfg)
        weights, epsilon = shrink(ShrinkInput(trace.train_objectives,
                                              trace.val_violations.T))
        classifier = StochasticClassifier.from_trace(trace.thetas, weights)

        train_err, _ = evaluate_stochastic(classifier, arch, problem, theta_train)
        _, train_side_cons = evaluate_stochastic(classifier, arch, problem,
                                                 theta_val)
        test_err, test_cons = evaluate_stochastic(classifier, arch, problem, test)

        artifacts = {}
        if output_dir is not None:
            run_dir = Path(output_dir) / "runs"
            run_dir.mkdir(parents=True, exist_ok=True)
            trace_path = run_dir / f"{tag}.trace.csv"
            save_trace(trace, trace_path)
            clf_path = run_dir / f"{tag}.classifier.csv"
            with open(clf_path, "w") as fh:
                fh.write("index,probability\n")
                for idx, w in zip(trace.indices, weights):
                    if w > 0:
                        fh.write(f"{int(idx)},{w!r}\n")
            artifacts = {"trace": trace_path.name, "classifier": clf_path.name}

        return {"status": "ok", "tag": tag, "algorithm": solver.algorithm,
                "mode": mode, "run": run, "seed": run_seed,
                "shrink_epsilon": float(epsilon),
                "train_error": float(train_err),
                "train_max_violation": float(train_side_cons.max()),
                "test_error": float(test_err),
                "test_max_violation": float(test_cons.max()),
                "artifacts": artifacts}
    except Exception as exc:  # noqa: BLE001 - failed runs become report rows
        log.exception("run %s failed", tag)
        return {"status": "failed", "tag": tag, "algorithm": solver.algorithm,
                "mode": mode, "run": run, "seed": run_seed, "reason": repr(exc)}


def _cells(config: ExperimentConfig):
    for solver_index in range(len(config.solvers)):
        for mode in config.modes:
            for run in range(config.runs):
                yield solver_index, mode, run


def run_experiment(config: ExperimentConfig, output_dir, workers: int = 1) -> dict:
    """Execute the full grid and write per-run, aggregated and summary reports.

    Returns the summary dict; summary["failed"] counts incomplete runs.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    cells = list(_cells(config))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(execute_run, [config] * len(cells),
                                    *zip(*cells), [str(output_dir)] * len(cells)))
    else:
        records = [execute_run(config, s, m, r, str(output_dir))
                   for s, m, r in cells]
    records.sort(key=lambda r: r["tag"])

    _write_runs_csv(records, output_dir / "runs.csv")
    aggregated = aggregate(records)
    _write_aggregated_csv(aggregated, output_dir / "aggregated.csv")
    summary = {
        "name": config.name,
        "completed": sum(r["status"] == "ok" for r in records),
        "failed": sum(r["status"] != "ok" for r in records),
        "failures": [{"tag": r["tag"], "reason": r["reason"]}
                     for r in records if r["status"] != "ok"],
        "aggregated": aggregated,
        "comparison": compare_generalization(aggregated),
        "runs_file": "runs.csv",
        "aggregated_file": "aggregated.csv",
    }
    with open(output_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


_METRICS = ("train_error", "train_max_violation", "test_error",
            "test_max_violation", "shrink_epsilon")


def _write_runs_csv(records, path) -> None:
    cols = ["tag", "algorithm", "mode", "run", "seed", "status", *_METRICS, "reason"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in records:
            row = [str(r.get(c, "")) if c not in _METRICS
                   else (repr(r[c]) if c in r else "") for c in cols]
            fh.write(",".join(row) + "\n")


def aggregate(records) -> list:
    """Mean/std of every metric per (algorithm, mode), completed runs only."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r["algorithm"], r["mode"]), []).append(r)
    out = []
    for (algorithm, mode), rs in sorted(groups.items()):
        ok = [r for r in rs if r["status"] == "ok"]
        row = {"algorithm": algorithm, "mode": mode,
               "completed": len(ok), "attempted": len(rs)}
        for metric in _METRICS:
            vals = np.array([r[metric] for r in ok]) if ok else np.array([])
            row[f"{metric}_mean"] = float(vals.mean()) if len(vals) else None
            row[f"{metric}_std"] = float(vals.std()) if len(vals) else None
        out.append(row)
    return out


def _write_aggregated_csv(rows, path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    cols = list(rows[0])
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join("" if row[c] is None
                              else (repr(row[c]) if isinstance(row[c], float)
                                    else str(row[c])) for c in cols) + "\n")


def compare_generalization(aggregated) -> list:
    """Per algorithm: test-violation gap (one_dataset minus two_dataset) and
    the train-to-test violation spread within each mode."""
    by_key = {(r["algorithm"], r["mode"]): r for r in aggregated}
    out = []
    for algorithm in sorted({r["algorithm"] for r in aggregated}):
        one = by_key.get((algorithm, "one_dataset"))
        two = by_key.get((algorithm, "two_dataset"))
        row = {"algorithm": algorithm}
        if one and two and one["test_max_violation_mean"] is not None \
                and two["test_max_violation_mean"] is not None:
            gap = one["test_max_violation_mean"] - two["test_max_violation_mean"]
            row["test_violation_gap"] = gap
            row["split_helps_constraints"] = bool(gap > 0)
        for label, agg in (("one_dataset", one), ("two_dataset", two)):
            if agg and agg["test_max_violation_mean"] is not None:
                row[f"{label}_violation_spread"] = (
                    agg["test_max_violation_mean"] - agg["train_max_violation_mean"])
        out.append(row)
    return out


def run_sweep(config: ExperimentConfig, sigmas, output_dir, workers: int = 1) -> dict:
    """Repeat a simulated experiment across kernel widths; one CSV row per
    (sigma, algorithm, mode)."""
    if config.dataset.get("type", "simulated") != "simulated":
        raise ValueError("sweeps are defined for simulated datasets")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    rows, failed = [], 0
    for sigma in sigmas:
        sub = replace(config, name=f"{config.name}_sigma{sigma}",
                      dataset={**config.dataset, "sigma": float(sigma)})
        summary = run_experiment(sub, output_dir / f"sigma_{sigma}", workers)
        failed += summary["failed"]
        for agg in summary["aggregated"]:
            rows.append({"sigma": float(sigma), **agg})
    cols = list(rows[0]) if rows else []
    with open(output_dir / "sweep.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join("" if row[c] is None
                              else (repr(row[c]) if isinstance(row[c], float)
                                    else str(row[c])) for c in cols) + "\n")
    summary = {"rows": rows, "failed": failed, "sweep_file": "sweep.csv"}
    with open(output_dir / "sweep_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
