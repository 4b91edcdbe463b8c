import csv
import struct

import numpy as np
import pytest
from PIL import Image

from embex import ExtractionJob, extract, load_manifest, write_emb1
from embex.backbones import BackboneError, load_backbone
from embex.manifest import ManifestError

BACKBONE = "mobilenet_v3_small"  # smallest in the registry, keeps tests fast


@pytest.fixture(scope="module")
def toy_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    rng = np.random.default_rng(0)
    rows = []
    for i in range(10):
        arr = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        name = f"img_{i}.png"
        Image.fromarray(arr).save(root / name)
        rows.append((name, i % 3, i % 2))
    path = root / "manifest.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "group"])
        writer.writerows(rows)
    return path


def read_header(path):
    with open(path, "rb") as fh:
        return struct.unpack("<4sIIIIBBxx", fh.read(24))


class TestManifest:
    def test_loads_with_groups(self, toy_manifest):
        m = load_manifest(toy_manifest)
        assert len(m) == 10 and m.class_count == 3
        assert m.groups == [i % 2 for i in range(10)]

    def test_missing_image_names_row(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("path,label\nnope.png,0\n")
        with pytest.raises(ManifestError, match="row 2"):
            load_manifest(path)

    def test_noncontiguous_labels_rejected(self, tmp_path):
        img = tmp_path / "a.png"
        Image.new("RGB", (8, 8)).save(img)
        path = tmp_path / "m.csv"
        path.write_text("path,label\na.png,0\na.png,2\n")
        with pytest.raises(ManifestError, match="contiguous"):
            load_manifest(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("file,cls\nx,0\n")
        with pytest.raises(ManifestError, match="header"):
            load_manifest(path)


class TestEmb1Writer:
    def test_header_layout(self, tmp_path):
        out = tmp_path / "x.emb1"
        write_emb1(out, np.zeros((3, 4), np.float32), [0, 1, 1], 2)
        magic, version, n, d, c, has_labels, has_groups = read_header(out)
        assert (magic, version, n, d, c) == (b"EMB1", 1, 3, 4, 2)
        assert (has_labels, has_groups) == (1, 0)
        assert out.stat().st_size == 24 + 3 * 4 * 4 + 3 * 4

    def test_label_range_checked(self, tmp_path):
        with pytest.raises(ValueError):
            write_emb1(tmp_path / "x.emb1", np.zeros((1, 2), np.float32), [5], 2)


class TestExtraction:
    def test_round_trip_into_primary_toolkit(self, toy_manifest, tmp_path):
        out = tmp_path / "toy.emb1"
        job = ExtractionJob(backbone=BACKBONE, manifest_path=str(toy_manifest),
                            output_path=str(out))
        n, d = extract(job)
        assert (n, d) == (10, 576)

        from sprod.data import load_embeddings

        es = load_embeddings(out)
        assert es.n == 10 and es.dim == 576 and es.class_count == 3
        np.testing.assert_array_equal(es.labels, [i % 3 for i in range(10)])
        np.testing.assert_array_equal(es.group_ids, [i % 2 for i in range(10)])
        assert not es.normalized

    def test_repeat_extraction_byte_identical(self, toy_manifest, tmp_path):
        outs = []
        for name in ("a.emb1", "b.emb1"):
            out = tmp_path / name
            extract(ExtractionJob(backbone=BACKBONE,
                                  manifest_path=str(toy_manifest),
                                  output_path=str(out)))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_batch_size_does_not_change_values(self, toy_manifest, tmp_path):
        feats = {}
        for bs in (3, 10):
            out = tmp_path / f"bs{bs}.emb1"
            extract(ExtractionJob(backbone=BACKBONE,
                                  manifest_path=str(toy_manifest),
                                  output_path=str(out), batch_size=bs))
            raw = out.read_bytes()
            feats[bs] = np.frombuffer(raw[24 : 24 + 10 * 576 * 4], np.float32)
        np.testing.assert_allclose(feats[3], feats[10], atol=1e-5)

    def test_unknown_backbone(self, toy_manifest, tmp_path):
        with pytest.raises(BackboneError):
            extract(ExtractionJob(backbone="alexnet9000",
                                  manifest_path=str(toy_manifest),
                                  output_path=str(tmp_path / "x.emb1")))


class TestBackbones:
    def test_headless_eval_mode(self):
        model, width = load_backbone(BACKBONE)
        assert not model.training
        assert width == 576

    def test_seeded_weights_reproducible(self):
        a, _ = load_backbone(BACKBONE)
        b, _ = load_backbone(BACKBONE)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert pa.detach().equal(pb.detach())


class TestCli:
    def test_cli_end_to_end(self, toy_manifest, tmp_path, capsys):
        from embex.cli import main

        out = tmp_path / "cli.emb1"
        rc = main(["--backbone", BACKBONE, "--manifest", str(toy_manifest),
                   "--out", str(out), "--batch-size", "4"])
        assert rc == 0 and out.exists()
        assert "wrote 10 embeddings of width 576" in capsys.readouterr().out

    def test_cli_error_exit(self, tmp_path, capsys):
        from embex.cli import main

        rc = main(["--backbone", BACKBONE, "--manifest",
                   str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("error: ")
