"""Experiment runner: data -> fit -> score -> metrics -> report.

A run is fully determined by its config: seeds only reseed the data
generator, every fit/score path is deterministic, and report rows are
assembled in (method, seed) order so output does not depend on how the
work was scheduled.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .baselines import (
    GaussianModel,
    HeadConfig,
    LinearHead,
    head_train,
    knn_score,
    logit_scores,
    mds_fit,
    mds_score,
)
from .data import EmbeddingSet, ScoreVector, load_embeddings, normalize
from .exceptions import ConfigError, TooFewSamples
from .prototypes import (
    PrototypeBank,
    fit_converged,
    fit_kmeans,
    fit_stage1,
    fit_stage2,
    fit_stage3,
    score_distance,
    score_softmax,
)
from .synth import SyntheticSpec, generate, subsample_lowshot
from . import metrics as metrics_mod

PROTOTYPE_METHODS = ("stage1", "stage2", "stage3", "converged", "kmeans")
BASELINE_METHODS = ("mds", "knn", "msp", "energy", "mls")
ALL_METHODS = PROTOTYPE_METHODS + BASELINE_METHODS


@dataclass(frozen=True)
class MethodSpec:
    name: str
    scoring: str = "distance"  # prototype methods only: distance | softmax
    temperature: float = 1.0
    k: int = 50  # knn neighbor count / kmeans clusters per class
    metric: str = "euclidean"

    def label(self) -> str:
        if self.name in PROTOTYPE_METHODS and self.scoring != "distance":
            return f"{self.name}-{self.scoring}"
        return self.name


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[MethodSpec, ...]
    seeds: tuple[int, ...]
    synthetic: SyntheticSpec | None = None
    files: dict | None = None  # {"train":..., "id_test":..., "ood": {name: path}}
    tpr_target: float = 0.95
    lowshot: tuple[int, ...] = ()
    out: str | None = None

    def validate(self) -> None:
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for m in self.methods:
            if m.name not in ALL_METHODS:
                raise ConfigError(f"unknown method {m.name!r}")
            if m.scoring not in ("distance", "softmax"):
                raise ConfigError(f"unknown scoring mode {m.scoring!r}")
        if (self.synthetic is None) == (self.files is None):
            raise ConfigError("config needs exactly one of 'synthetic' or 'files'")
        if self.files is not None:
            for key in ("train", "id_test", "ood"):
                if key not in self.files:
                    raise ConfigError(f"file mode requires '{key}'")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            methods = tuple(
                MethodSpec(**m) if isinstance(m, dict) else MethodSpec(name=m)
                for m in doc["methods"]
            )
            cfg = cls(
                methods=methods,
                seeds=tuple(int(s) for s in doc.get("seeds", [0])),
                synthetic=(
                    SyntheticSpec.from_dict(doc["synthetic"]) if "synthetic" in doc else None
                ),
                files=doc.get("files"),
                tpr_target=float(doc.get("tpr_target", 0.95)),
                lowshot=tuple(int(m) for m in doc.get("lowshot", [])),
                out=doc.get("out"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        doc: dict = {
            "methods": [
                {
                    "name": m.name,
                    "scoring": m.scoring,
                    "temperature": m.temperature,
                    "k": m.k,
                    "metric": m.metric,
                }
                for m in self.methods
            ],
            "seeds": list(self.seeds),
            "tpr_target": self.tpr_target,
        }
        if self.synthetic is not None:
            doc["synthetic"] = self.synthetic.to_dict()
        if self.files is not None:
            doc["files"] = self.files
        if self.lowshot:
            doc["lowshot"] = list(self.lowshot)
        return doc


@dataclass(frozen=True)
class Dataset:
    train: EmbeddingSet
    id_test: EmbeddingSet
    ood: dict  # name -> EmbeddingSet


def load_dataset(config: ExperimentConfig, seed: int) -> Dataset:
    if config.synthetic is not None:
        spec = replace(config.synthetic, seed=seed)
        train, id_test, sp_ood, nsp_ood = generate(spec)
        return Dataset(train, id_test, {"sp_ood": sp_ood, "nsp_ood": nsp_ood})
    files = config.files
    train = normalize(load_embeddings(files["train"]))
    id_test = normalize(load_embeddings(files["id_test"]))
    ood_paths = files["ood"]
    if isinstance(ood_paths, str):
        ood_paths = {"ood": ood_paths}
    ood = {name: normalize(load_embeddings(path)) for name, path in ood_paths.items()}
    return Dataset(train, id_test, ood)


# --- method fit/score dispatch ---------------------------------------------


@dataclass(frozen=True)
class KnnModel:
    train: EmbeddingSet
    k: int


def fit_method(spec: MethodSpec, train: EmbeddingSet, seed: int = 0):
    name = spec.name
    if name == "stage1":
        return fit_stage1(train, spec.metric)
    if name == "stage2":
        return fit_stage2(train, fit_stage1(train, spec.metric))[0]
    if name == "stage3":
        bank1 = fit_stage1(train, spec.metric)
        bank2, assign2 = fit_stage2(train, bank1)
        return fit_stage3(train, bank2, assign2)[0]
    if name == "converged":
        bank2, _ = fit_stage2(train, fit_stage1(train, spec.metric))
        return fit_converged(train, bank2)[0]
    if name == "kmeans":
        return fit_kmeans(train, spec.k, seed=seed, metric=spec.metric)
    if name == "mds":
        return mds_fit(train)
    if name == "knn":
        return KnnModel(train=train, k=spec.k)
    if name in ("msp", "energy", "mls"):
        return head_train(train, HeadConfig())
    raise ConfigError(f"unknown method {name!r}")


def score_method(spec: MethodSpec, model, query: EmbeddingSet) -> ScoreVector:
    if isinstance(model, PrototypeBank):
        if spec.scoring == "softmax":
            return score_softmax(model, query, spec.temperature, method=spec.label())
        return score_distance(model, query, method=spec.label())
    if isinstance(model, GaussianModel):
        return mds_score(model, query)
    if isinstance(model, KnnModel):
        return knn_score(model.train, query, model.k)
    if isinstance(model, LinearHead):
        return logit_scores(model, query, spec.name)
    raise ConfigError(f"cannot score model of type {type(model).__name__}")


# --- runs -------------------------------------------------------------------

_METRIC_FIELDS = ("auroc", "fpr_at_95tpr", "aupr_in", "aupr_out")


def _evaluate(spec: MethodSpec, model, data: Dataset, tpr_target: float) -> dict:
    id_scores = score_method(spec, model, data.id_test).scores
    out = {}
    for name, ood_set in sorted(data.ood.items()):
        ood_scores = score_method(spec, model, ood_set).scores
        out[name] = metrics_mod.summarize(id_scores, ood_scores, tpr_target).to_dict()
    return out


def _aggregate(rows: list[dict]) -> list[dict]:
    """Mean and std per (method, ood split), recomputed from the rows."""
    keys = []
    for row in rows:
        if row.get("error"):
            continue
        for split in row["metrics"]:
            key = (row["method"], split)
            if key not in keys:
                keys.append(key)
    aggregates = []
    for method, split in keys:
        summaries = [
            r["metrics"][split] for r in rows
            if r["method"] == method and not r.get("error") and split in r["metrics"]
        ]
        agg = {"method": method, "ood_split": split, "n_seeds": len(summaries)}
        for f in _METRIC_FIELDS:
            vals = np.array([s[f] for s in summaries])
            agg[f"{f}_mean"] = float(vals.mean())
            agg[f"{f}_std"] = float(vals.std())
        aggregates.append(agg)
    return aggregates


def run(config: ExperimentConfig) -> dict:
    """Fit and evaluate every (method, seed) cell; returns the report."""
    config.validate()
    wall = {}
    rows = []
    t0 = time.perf_counter()
    for seed in config.seeds:
        data = load_dataset(config, seed)
        for mspec in config.methods:
            row = {"method": mspec.label(), "seed": seed}
            try:
                model = fit_method(mspec, data.train, seed=seed)
                row["metrics"] = _evaluate(mspec, model, data, config.tpr_target)
            except Exception as exc:  # keep partial results, mark the cell
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    rows.sort(key=lambda r: ([m.label() for m in config.methods].index(r["method"]), r["seed"]))
    wall["total_s"] = time.perf_counter() - t0
    return {
        "toolkit_version": __version__,
        "config": config.to_dict(),
        "rows": rows,
        "aggregates": _aggregate(rows),
        "wall_clock": wall,
    }


def ablate_scoring(config: ExperimentConfig) -> dict:
    """Distance vs softmax scoring on identical prototype banks."""
    config.validate()
    proto = [m for m in config.methods if m.name in PROTOTYPE_METHODS]
    if not proto:
        raise ConfigError("scoring ablation needs a prototype-based method")
    t0 = time.perf_counter()
    rows = []
    for seed in config.seeds:
        data = load_dataset(config, seed)
        for mspec in proto:
            model = fit_method(mspec, data.train, seed=seed)
            for scoring in ("distance", "softmax"):
                variant = replace(mspec, scoring=scoring)
                rows.append(
                    {
                        "method": f"{mspec.name}-{scoring}",
                        "seed": seed,
                        "metrics": _evaluate(variant, model, data, config.tpr_target),
                    }
                )
    return {
        "toolkit_version": __version__,
        "config": config.to_dict(),
        "rows": rows,
        "aggregates": _aggregate(rows),
        "wall_clock": {"total_s": time.perf_counter() - t0},
    }


def lowshot_sweep(config: ExperimentConfig) -> dict:
    """Evaluate at shrinking training sizes, plus the full-data reference."""
    config.validate()
    if not config.lowshot:
        raise ConfigError("lowshot sweep needs a nonempty 'lowshot' list of m values")
    t0 = time.perf_counter()
    blocks = []
    for m in list(config.lowshot) + ["full"]:
        rows = []
        skipped = None
        for seed in config.seeds:
            data = load_dataset(config, seed)
            if m != "full":
                try:
                    train = subsample_lowshot(data.train, int(m), seed)
                except TooFewSamples as exc:
                    skipped = str(exc)
                    break
                data = Dataset(train, data.id_test, data.ood)
            for mspec in config.methods:
                model = fit_method(mspec, data.train, seed=seed)
                rows.append(
                    {
                        "method": mspec.label(),
                        "seed": seed,
                        "metrics": _evaluate(mspec, model, data, config.tpr_target),
                    }
                )
        block = {"m_per_minority": m}
        if skipped is not None:
            block["skipped"] = skipped
        else:
            block["rows"] = rows
            block["aggregates"] = _aggregate(rows)
        blocks.append(block)
    return {
        "toolkit_version": __version__,
        "config": config.to_dict(),
        "blocks": blocks,
        "wall_clock": {"total_s": time.perf_counter() - t0},
    }


def report_csv_rows(report: dict) -> list[list]:
    header = ["method", "seed", "ood_split"] + list(_METRIC_FIELDS) + ["n_id", "n_ood", "error"]
    out = [header]
    blocks = report.get("blocks") or [report]
    for block in blocks:
        prefix = block.get("m_per_minority")
        for row in block.get("rows", []):
            if row.get("error"):
                out.append([row["method"], row["seed"], "", *[""] * 6, row["error"]])
                continue
            for split, s in sorted(row["metrics"].items()):
                label = row["method"] if prefix is None else f"{row['method']}@m={prefix}"
                out.append(
                    [label, row["seed"], split]
                    + [repr(s[f]) for f in _METRIC_FIELDS]
                    + [s["n_id"], s["n_ood"], ""]
                )
    return out


def write_csv(report: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(report_csv_rows(report))


def write_gnuplot(report: dict, path) -> None:
    """Flat whitespace-separated table, one line per (method, split, seed)."""
    with open(path, "w") as fh:
        fh.write("# method seed split " + " ".join(_METRIC_FIELDS) + "\n")
        for row in report.get("rows", []):
            if row.get("error"):
                continue
            for split, s in sorted(row["metrics"].items()):
                vals = " ".join(repr(s[f]) for f in _METRIC_FIELDS)
                fh.write(f"{row['method']} {row['seed']} {split} {vals}\n")
