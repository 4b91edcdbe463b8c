"""Command-line entry point.

Subcommands: synth, fit, score, eval, bench, ablate, lowshot.
Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
Failures print one machine-parsable line on stderr: "error: Type: message".
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import serialize
from .baselines import GaussianModel, LinearHead, logit_scores, knn_score, mds_score
from .data import EmbeddingSet, load_embeddings, normalize, save_embeddings
from .exceptions import (
    BadK,
    ConfigError,
    Degenerate,
    DimMismatch,
    EmptyClass,
    EmptyInput,
    FormatError,
    IoError,
    SpecError,
    SprodError,
    TooFewSamples,
    ZeroVector,
)
from .harness import (
    ExperimentConfig,
    KnnModel,
    MethodSpec,
    ablate_scoring,
    fit_method,
    lowshot_sweep,
    run,
    score_method,
    write_csv,
    write_gnuplot,
)
from .metrics import summarize
from .prototypes import PrototypeBank
from .synth import SyntheticSpec, generate

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_CONFIG_ERRORS = (ConfigError, SpecError, BadK, argparse.ArgumentTypeError)
_DATA_ERRORS = (
    FormatError,
    IoError,
    DimMismatch,
    EmptyClass,
    TooFewSamples,
    EmptyInput,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)
_NUMERIC_ERRORS = (Degenerate, ZeroVector, FloatingPointError)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def _write_scores_csv(scores: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["score"])
        for s in scores:
            writer.writerow([repr(float(s))])


def _read_scores_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != ["score"]:
        raise FormatError(f"{path}: expected a one-column CSV with header 'score'")
    try:
        return np.array([float(r[0]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _load_model(path):
    doc = _read_json(path)
    if "stage" in doc and "entries" in doc:
        return PrototypeBank.from_dict(doc)
    kind = doc.get("kind")
    if kind == "gaussian":
        return GaussianModel.from_dict(doc)
    if kind == "linear_head":
        return LinearHead.from_dict(doc)
    if kind == "knn":
        train = EmbeddingSet(
            features=np.asarray(doc["features"], dtype=np.float32),
            labels=np.asarray(doc["labels"], dtype=np.int32),
            class_count=int(doc["class_count"]),
            normalized=True,
        )
        return KnnModel(train=train, k=int(doc["k"]))
    raise FormatError(f"{path}: unrecognized model document")


def _model_to_dict(model):
    if isinstance(model, PrototypeBank):
        return model.to_dict()
    if isinstance(model, (GaussianModel, LinearHead)):
        return model.to_dict()
    if isinstance(model, KnnModel):
        return {
            "kind": "knn",
            "k": model.k,
            "class_count": model.train.class_count,
            "features": [row for row in model.train.features.astype(np.float64)],
            "labels": model.train.labels,
        }
    raise ConfigError(f"cannot serialize model of type {type(model).__name__}")


def _cmd_synth(args) -> int:
    doc = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        spec = SyntheticSpec.from_dict(doc)
    except TypeError as exc:
        raise ConfigError(f"bad synthetic spec: {exc}") from exc
    train, id_test, sp_ood, nsp_ood = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    for name, es in [
        ("train", train), ("id_test", id_test), ("sp_ood", sp_ood), ("nsp_ood", nsp_ood)
    ]:
        save_embeddings(es, os.path.join(args.out, f"{name}.emb1"))
    print(f"wrote 4 EMB1 sets to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    train = normalize(load_embeddings(args.train))
    spec = MethodSpec(name=args.method, metric=args.metric, k=args.k)
    model = fit_method(spec, train, seed=args.seed or 0)
    serialize.dump(_model_to_dict(model), args.out)
    print(f"fitted {args.method}, model written to {args.out}")
    return 0


def _cmd_score(args) -> int:
    model = _load_model(args.model)
    query = normalize(load_embeddings(args.data))
    if isinstance(model, PrototypeBank):
        spec = MethodSpec(name=model.stage, scoring=args.scoring,
                          temperature=args.temperature, metric=model.metric)
        sv = score_method(spec, model, query)
    elif isinstance(model, GaussianModel):
        sv = mds_score(model, query)
    elif isinstance(model, KnnModel):
        k = args.k if args.k else model.k
        sv = knn_score(model.train, query, k)
    else:
        sv = logit_scores(model, query, args.logit_method)
    _write_scores_csv(sv.scores, args.out)
    print(f"{sv.method}: {sv.scores.size} scores written to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    id_scores = _read_scores_csv(args.id_scores)
    ood_scores = _read_scores_csv(args.ood_scores)
    summary = summarize(id_scores, ood_scores, args.tpr)
    text = serialize.dumps(summary.to_dict())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def _write_report(report: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    serialize.dump(report, os.path.join(out_dir, "report.json"))
    write_csv(report, os.path.join(out_dir, "report.csv"))
    if "rows" in report:
        write_gnuplot(report, os.path.join(out_dir, "report.dat"))


def _run_config(args) -> ExperimentConfig:
    doc = _read_json(args.config)
    if args.seed is not None:
        doc["seeds"] = [args.seed]
    if args.metric:
        for m in doc.get("methods", []):
            if isinstance(m, dict):
                m["metric"] = args.metric
    if args.scoring:
        for m in doc.get("methods", []):
            if isinstance(m, dict):
                m["scoring"] = args.scoring
    if args.k:
        for m in doc.get("methods", []):
            if isinstance(m, dict):
                m["k"] = args.k
    return ExperimentConfig.from_dict(doc)


def _cmd_bench(args) -> int:
    report = run(_run_config(args))
    _write_report(report, args.out)
    print(f"report written to {args.out}")
    return 0


def _cmd_ablate(args) -> int:
    config = _run_config(args)
    if args.what == "scoring":
        report = ablate_scoring(config)
    else:  # stages
        stage_methods = tuple(
            MethodSpec(name=n, metric=config.methods[0].metric)
            for n in ("stage1", "stage2", "stage3", "kmeans", "converged")
        )
        from dataclasses import replace as _replace

        report = run(_replace(config, methods=stage_methods))
    _write_report(report, args.out)
    print(f"ablation report written to {args.out}")
    return 0


def _cmd_lowshot(args) -> int:
    report = lowshot_sweep(_run_config(args))
    _write_report(report, args.out)
    print(f"lowshot report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sprod", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic EMB1 benchmark sets")
    p.add_argument("--config", help="JSON file with SyntheticSpec fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="fit one method, write its model JSON")
    p.add_argument("--method", required=True)
    p.add_argument("--train", required=True, help="EMB1 training embeddings")
    p.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("score", help="score EMB1 embeddings with a model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scoring", choices=["distance", "softmax"], default="distance")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--logit-method", choices=["msp", "energy", "mls"], default="msp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="metrics from ID and OOD score CSVs")
    p.add_argument("--id", dest="id_scores", required=True)
    p.add_argument("--ood", dest="ood_scores", required=True)
    p.add_argument("--tpr", type=float, default=0.95)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    for name, fn, help_text in [
        ("bench", _cmd_bench, "full run: data, fit, score, metrics, report"),
        ("ablate", _cmd_ablate, "stage or scoring ablation"),
        ("lowshot", _cmd_lowshot, "low-shot training-size sweep"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--metric", choices=["euclidean", "cosine"])
        p.add_argument("--scoring", choices=["distance", "softmax"])
        p.add_argument("--k", type=int)
        p.add_argument("--out", required=True)
        if name == "ablate":
            p.add_argument("--what", choices=["scoring", "stages"], default="scoring")
        p.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (_NUMERIC_ERRORS, SprodError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
