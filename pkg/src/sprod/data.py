"""Core domain types and embedding-file I/O.

Features are stored as 32-bit floats (what backbones emit); every
computation downstream promotes to 64-bit. ``group_ids`` are annotation
only: no fitting code may read them, they exist for the evaluator.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import FormatError, IoError, ZeroVector

NORM_TOL = 1e-5
ZERO_NORM_THRESHOLD = 1e-12

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1


@dataclass(frozen=True)
class EmbeddingSet:
    """N x D embedding matrix with labels and optional group annotation."""

    features: np.ndarray  # (N, D) float32
    labels: np.ndarray  # (N,) int32, values in [0, class_count)
    class_count: int
    group_ids: np.ndarray | None = None  # (N,) int32, evaluation-only
    normalized: bool = False

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise FormatError(f"features must be a nonempty 2-D matrix, got shape {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise FormatError("labels length must match feature row count")
        if self.class_count < 1:
            raise FormatError("class_count must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise FormatError(
                f"labels must lie in [0, {self.class_count}), got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        groups = self.group_ids
        if groups is not None:
            groups = np.ascontiguousarray(groups, dtype=np.int32)
            if groups.shape != (feats.shape[0],):
                raise FormatError("group_ids length must match feature row count")
            groups.setflags(write=False)
        if self.normalized:
            norms = np.linalg.norm(feats.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > NORM_TOL):
                raise FormatError("normalized flag set but some rows are not unit norm")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "group_ids", groups)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ScoreVector:
    """Per-sample OOD scores for one method; larger score = more ID-like."""

    method: str
    scores: np.ndarray  # (M,) float64, all finite

    def __post_init__(self):
        s = np.ascontiguousarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise ValueError(f"non-finite score produced by method {self.method!r}")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)


def normalize(embedding_set: EmbeddingSet) -> EmbeddingSet:
    """Return a copy with every feature row scaled to unit L2 norm.

    Raises ZeroVector for any row whose norm is at or below 1e-12;
    zero embeddings indicate upstream extraction bugs, not valid data.
    """
    feats = embedding_set.features.astype(np.float64)
    norms = np.linalg.norm(feats, axis=1)
    bad = np.nonzero(norms <= ZERO_NORM_THRESHOLD)[0]
    if bad.size:
        raise ZeroVector(int(bad[0]))
    unit = (feats / norms[:, None]).astype(np.float32)
    return replace(embedding_set, features=unit, normalized=True)


# --- EMB1 binary format -----------------------------------------------------
#
# Little-endian layout:
#   magic "EMB1" | u32 version=1 | u32 N | u32 D | u32 C
#   | u8 has_labels | u8 has_groups | 2 zero pad bytes
#   | N*D f32 row-major features
#   | N i32 labels      (if has_labels)
#   | N i32 group ids   (if has_groups)

_HEADER = struct.Struct("<4sIIIIBBxx")


def save_embeddings(embedding_set: EmbeddingSet, path, format: str = "emb1") -> None:
    fmt = format.lower()
    if fmt == "emb1":
        _save_emb1(embedding_set, path)
    elif fmt == "csv":
        _save_csv(embedding_set, path)
    else:
        raise FormatError(f"unknown format {format!r}")


def load_embeddings(path, format: str = "emb1") -> EmbeddingSet:
    fmt = format.lower()
    if fmt == "emb1":
        return _load_emb1(path)
    if fmt == "csv":
        return _load_csv(path)
    raise FormatError(f"unknown format {format!r}")


def _save_emb1(es: EmbeddingSet, path) -> None:
    has_groups = es.group_ids is not None
    header = _HEADER.pack(
        EMB1_MAGIC, EMB1_VERSION, es.n, es.dim, es.class_count, 1, 1 if has_groups else 0
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(es.features, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(es.labels, dtype="<i4").tobytes())
            if has_groups:
                fh.write(np.ascontiguousarray(es.group_ids, dtype="<i4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _load_emb1(path) -> EmbeddingSet:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, d, c, has_labels, has_groups = _HEADER.unpack_from(blob)
    if magic != EMB1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != EMB1_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    off = _HEADER.size
    need = n * d * 4 + (n * 4 if has_labels else 0) + (n * 4 if has_groups else 0)
    if len(blob) - off != need:
        raise FormatError(f"{path}: expected {need} payload bytes, found {len(blob) - off}")
    feats = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    off += n * d * 4
    if has_labels:
        labels = np.frombuffer(blob, dtype="<i4", count=n, offset=off)
        off += n * 4
    else:
        labels = np.zeros(n, dtype=np.int32)
    groups = None
    if has_groups:
        groups = np.frombuffer(blob, dtype="<i4", count=n, offset=off)
    try:
        return EmbeddingSet(
            features=feats, labels=labels, class_count=c, group_ids=groups, normalized=False
        )
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# --- CSV format -------------------------------------------------------------
# header: [group,]label,f_0,...,f_{D-1}; one sample per row, decimal floats.


def _save_csv(es: EmbeddingSet, path) -> None:
    has_groups = es.group_ids is not None
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            head = ["label"] + [f"f_{j}" for j in range(es.dim)]
            if has_groups:
                head = ["group"] + head
            writer.writerow(head)
            for i in range(es.n):
                row = [int(es.labels[i])] + [repr(float(v)) for v in es.features[i]]
                if has_groups:
                    row = [int(es.group_ids[i])] + row
                writer.writerow(row)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _load_csv(path) -> EmbeddingSet:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: empty file")
    head = rows[0]
    if head[:1] == ["group"]:
        has_groups, base = True, 2
    elif head[:1] == ["label"]:
        has_groups, base = False, 1
    else:
        raise FormatError(f"{path}: header must start with 'label' or 'group,label'")
    d = len(head) - base
    if d < 1:
        raise FormatError(f"{path}: no feature columns")
    feats, labels, groups = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(head):
            raise FormatError(f"{path}:{lineno}: expected {len(head)} columns, got {len(row)}")
        try:
            if has_groups:
                groups.append(int(row[0]))
            labels.append(int(row[base - 1]))
            feats.append([float(v) for v in row[base:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    labels_arr = np.asarray(labels, dtype=np.int32)
    class_count = int(labels_arr.max()) + 1 if labels_arr.size else 1
    return EmbeddingSet(
        features=np.asarray(feats, dtype=np.float32),
        labels=labels_arr,
        class_count=class_count,
        group_ids=np.asarray(groups, dtype=np.int32) if has_groups else None,
        normalized=False,
    )
