import copy
import json

import numpy as np
import pytest

from sprod.data import save_embeddings
from sprod.exceptions import ConfigError
from sprod.harness import (
    ExperimentConfig,
    MethodSpec,
    ablate_scoring,
    load_dataset,
    lowshot_sweep,
    report_csv_rows,
    run,
    write_csv,
    write_gnuplot,
)
from sprod.synth import SyntheticSpec, generate

SMALL_SPEC = {
    "class_count": 2,
    "core_dims": 4,
    "spurious_dims": 4,
    "correlation_rate": 0.9,
    "samples_per_class": 40,
    "noise_sigma": 0.15,
}


def small_config(**overrides):
    doc = {
        "methods": [{"name": "stage1"}, {"name": "stage3"}],
        "seeds": [0, 1, 2, 3, 4],
        "synthetic": dict(SMALL_SPEC),
    }
    doc.update(overrides)
    return ExperimentConfig.from_dict(doc)


def strip_volatile(report):
    report = copy.deepcopy(report)
    report.pop("wall_clock", None)
    return report


class TestConfig:
    def test_method_shorthand(self):
        cfg = ExperimentConfig.from_dict(
            {"methods": ["stage1", "mds"], "seeds": [0], "synthetic": SMALL_SPEC}
        )
        assert [m.name for m in cfg.methods] == ["stage1", "mds"]

    def test_requires_methods_and_seeds(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"methods": [], "seeds": [0], "synthetic": SMALL_SPEC})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(
                {"methods": ["stage1"], "seeds": [], "synthetic": SMALL_SPEC}
            )

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(
                {"methods": ["vim"], "seeds": [0], "synthetic": SMALL_SPEC}
            )

    def test_exactly_one_source(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"methods": ["stage1"], "seeds": [0]})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(
                {
                    "methods": ["stage1"],
                    "seeds": [0],
                    "synthetic": SMALL_SPEC,
                    "files": {"train": "x", "id_test": "y", "ood": "z"},
                }
            )

    def test_file_mode_requires_paths(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(
                {"methods": ["stage1"], "seeds": [0], "files": {"train": "x"}}
            )


class TestRun:
    def test_row_and_aggregate_cardinality(self):
        report = run(small_config())
        assert len(report["rows"]) == 10  # 2 methods x 5 seeds
        assert len(report["aggregates"]) == 4  # 2 methods x 2 ood splits

    def test_determinism(self):
        a = run(small_config())
        b = run(small_config())
        assert strip_volatile(a) == strip_volatile(b)

    def test_aggregates_recompute_from_rows(self):
        report = run(small_config())
        for agg in report["aggregates"]:
            vals = [
                row["metrics"][agg["ood_split"]]["auroc"]
                for row in report["rows"]
                if row["method"] == agg["method"]
            ]
            assert agg["auroc_mean"] == pytest.approx(np.mean(vals), abs=1e-12)
            assert agg["auroc_std"] == pytest.approx(np.std(vals), abs=1e-12)
            assert agg["n_seeds"] == 5

    def test_error_row(self, monkeypatch):
        import sprod.harness as H

        original = H.fit_method

        def flaky(spec, train, seed=0):
            if spec.name == "mds":
                raise RuntimeError("boom")
            return original(spec, train, seed=seed)

        monkeypatch.setattr(H, "fit_method", flaky)
        cfg = ExperimentConfig.from_dict(
            {"methods": ["mds", "stage1"], "seeds": [0, 1], "synthetic": SMALL_SPEC}
        )
        report = H.run(cfg)
        errors = [r for r in report["rows"] if r.get("error")]
        ok = [r for r in report["rows"] if r.get("metrics")]
        assert len(errors) == 2 and len(ok) == 2
        assert all(r["method"] == "mds" for r in errors)
        assert {a["method"] for a in report["aggregates"]} == {"stage1"}

    def test_file_mode(self, tmp_path):
        train, id_test, sp_ood, _ = generate(SyntheticSpec(seed=0, samples_per_class=30))
        paths = {}
        for name, es in [("train", train), ("id_test", id_test), ("ood", sp_ood)]:
            p = tmp_path / f"{name}.emb1"
            save_embeddings(es, p)
            paths[name] = str(p)
        cfg = ExperimentConfig.from_dict(
            {
                "methods": ["stage3", "knn"],
                "seeds": [0],
                "files": {"train": paths["train"], "id_test": paths["id_test"],
                          "ood": {"sp": paths["ood"]}},
            }
        )
        report = run(cfg)
        assert len(report["rows"]) == 2
        assert set(report["rows"][0]["metrics"]) == {"sp"}


class TestAblateScoring:
    def test_pairs_per_seed(self):
        cfg = ExperimentConfig.from_dict(
            {"methods": [{"name": "stage3"}], "seeds": [0, 1], "synthetic": SMALL_SPEC}
        )
        report = ablate_scoring(cfg)
        methods = sorted({r["method"] for r in report["rows"]})
        assert methods == ["stage3-distance", "stage3-softmax"]
        assert len(report["rows"]) == 4

    def test_needs_prototype_method(self):
        cfg = ExperimentConfig.from_dict(
            {"methods": ["mds"], "seeds": [0], "synthetic": SMALL_SPEC}
        )
        with pytest.raises(ConfigError):
            ablate_scoring(cfg)

    def test_classification_identical_under_both_scorers(self):
        from sprod.harness import fit_method
        from sprod.prototypes import classify

        cfg = small_config()
        data = load_dataset(cfg, seed=0)
        bank = fit_method(MethodSpec(name="stage3"), data.train)
        # scoring mode cannot change predictions: both rank by distance
        preds = classify(bank, data.id_test)
        assert preds.shape == (data.id_test.n,)


class TestLowshot:
    def test_blocks_and_reference(self):
        cfg = ExperimentConfig.from_dict(
            {
                "methods": ["stage3"],
                "seeds": [0, 1],
                "synthetic": SMALL_SPEC,
                "lowshot": [2, 4],
            }
        )
        report = lowshot_sweep(cfg)
        keys = [b["m_per_minority"] for b in report["blocks"]]
        assert keys == [2, 4, "full"]
        assert all("rows" in b for b in report["blocks"])

    def test_oversized_m_skipped_with_marker(self):
        cfg = ExperimentConfig.from_dict(
            {
                "methods": ["stage3"],
                "seeds": [0],
                "synthetic": SMALL_SPEC,
                "lowshot": [2, 1000],
            }
        )
        report = lowshot_sweep(cfg)
        by_m = {b["m_per_minority"]: b for b in report["blocks"]}
        assert "rows" in by_m[2]
        assert "skipped" in by_m[1000] and "rows" not in by_m[1000]

    def test_requires_m_values(self):
        with pytest.raises(ConfigError):
            lowshot_sweep(small_config())


class TestReports:
    def test_csv_rows(self, tmp_path):
        report = run(small_config())
        rows = report_csv_rows(report)
        assert rows[0][0] == "method"
        assert len(rows) == 1 + 10 * 2  # header + rows x ood splits
        write_csv(report, tmp_path / "r.csv")
        assert (tmp_path / "r.csv").exists()

    def test_gnuplot_file(self, tmp_path):
        report = run(small_config())
        write_gnuplot(report, tmp_path / "r.dat")
        lines = (tmp_path / "r.dat").read_text().splitlines()
        assert lines[0].startswith("# method")
        assert len(lines) == 1 + 20

    def test_report_json_serializable(self):
        from sprod import serialize

        report = run(small_config())
        doc = json.loads(serialize.dumps(report))
        assert doc["rows"][0]["metrics"]["sp_ood"]["auroc"] == pytest.approx(
            report["rows"][0]["metrics"]["sp_ood"]["auroc"]
        )
