"""Spurious-aware prototype refinement.

Fits class prototypes in three stages: per-class means, a split into
correctly- and mis-classified group prototypes, and one k-means-style
reassign+recompute pass over each class's own groups. Two appendix-style
variants (iterate-to-convergence, per-class k-means) and two scoring
modes (nearest-prototype distance, softmax over negated distances) are
included.

Group prototypes carry a kind: the ``majority`` entry descends from the
correctly-classified pool, ``minority`` entries from samples drawn toward
some other class ``target``. Prediction ignores kind: nearest prototype
wins. Prototype vectors are plain means and are never re-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._kernels import as_f64, dot_matrix, sqdist_matrix
from .data import EmbeddingSet, ScoreVector
from .exceptions import BadK, DimMismatch, EmptyClass, FormatError
from .rng import make_rng

MAJORITY = "majority"
MINORITY = "minority"

EUCLIDEAN = "euclidean"
COSINE = "cosine"


@dataclass(frozen=True)
class ProtoEntry:
    class_id: int
    kind: str  # majority | minority
    target: int | None  # the drawn-toward class, minority entries only
    vector: np.ndarray  # (D,) float64

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise ValueError("prototype vector must be finite")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    def sort_key(self):
        # class ascending, majority before minority, minority target ascending
        return (self.class_id, 0 if self.kind == MAJORITY else 1,
                -1 if self.target is None else self.target)


@dataclass(frozen=True)
class PrototypeBank:
    stage: str  # stage1 | stage2 | stage3 | kmeans | converged
    metric: str  # euclidean | cosine
    entries: tuple[ProtoEntry, ...]

    def __post_init__(self):
        if self.metric not in (EUCLIDEAN, COSINE):
            raise ValueError(f"unknown metric {self.metric!r}")
        ordered = tuple(sorted(self.entries, key=ProtoEntry.sort_key))
        object.__setattr__(self, "entries", ordered)

    @property
    def dim(self) -> int:
        return self.entries[0].vector.shape[0]

    def matrix(self) -> np.ndarray:
        return np.stack([e.vector for e in self.entries])

    def entry_classes(self) -> np.ndarray:
        return np.array([e.class_id for e in self.entries], dtype=np.int64)

    def class_entry_indices(self, class_id: int) -> np.ndarray:
        return np.array(
            [i for i, e in enumerate(self.entries) if e.class_id == class_id], dtype=np.int64
        )

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "metric": self.metric,
            "entries": [
                {
                    "class": e.class_id,
                    "kind": e.kind,
                    "target": e.target,
                    "vector": e.vector,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PrototypeBank":
        entries = tuple(
            ProtoEntry(
                class_id=int(e["class"]),
                kind=e["kind"],
                target=None if e["target"] is None else int(e["target"]),
                vector=np.asarray(e["vector"], dtype=np.float64),
            )
            for e in doc["entries"]
        )
        return cls(stage=doc["stage"], metric=doc["metric"], entries=entries)


@dataclass(frozen=True)
class GroupAssignment:
    """Per training sample, the index of its bank entry."""

    entry_index: np.ndarray  # (N,) int64

    def __post_init__(self):
        idx = np.ascontiguousarray(self.entry_index, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "entry_index", idx)


def _require_normalized(es: EmbeddingSet) -> None:
    if not es.normalized:
        raise FormatError("embedding set must be normalized (call normalize() first)")


def _check_dims(bank: PrototypeBank, es: EmbeddingSet) -> None:
    if bank.dim != es.dim:
        raise DimMismatch(bank.dim, es.dim)


def distances_to(bank: PrototypeBank, feats: np.ndarray) -> np.ndarray:
    """(n_samples, n_entries) distance matrix under the bank's metric."""
    protos = bank.matrix()
    z = as_f64(feats)
    if bank.metric == EUCLIDEAN:
        return np.sqrt(sqdist_matrix(z, protos))
    sims = dot_matrix(z, protos)
    z_norm = np.linalg.norm(z, axis=1)[:, None]
    p_norm = np.linalg.norm(protos, axis=1)[None, :]
    return 1.0 - sims / (z_norm * p_norm)


def fit_stage1(train: EmbeddingSet, metric: str = EUCLIDEAN) -> PrototypeBank:
    """One prototype per class: the mean of that class's normalized rows."""
    _require_normalized(train)
    feats = as_f64(train.features)
    entries = []
    for c in range(train.class_count):
        members = feats[train.labels == c]
        if members.shape[0] == 0:
            raise EmptyClass(c)
        entries.append(ProtoEntry(class_id=c, kind=MAJORITY, target=None,
                                  vector=members.mean(axis=0)))
    return PrototypeBank(stage="stage1", metric=metric, entries=tuple(entries))


def classify(bank: PrototypeBank, es: EmbeddingSet) -> np.ndarray:
    """Class of the nearest prototype, group kind ignored.

    Ties resolve to the first entry in canonical bank order (class
    ascending, majority before minority, minority target ascending).
    """
    _require_normalized(es)
    _check_dims(bank, es)
    dists = distances_to(bank, es.features)
    nearest = np.argmin(dists, axis=1)  # argmin keeps the first minimum
    return bank.entry_classes()[nearest].astype(np.int32)


def fit_stage2(
    train: EmbeddingSet, bank1: PrototypeBank
) -> tuple[PrototypeBank, GroupAssignment]:
    """Split each class by its stage-1 prediction outcome.

    Correctly classified samples form the class's majority prototype;
    samples predicted as some other class m form one minority prototype
    per m. A class whose every sample is misclassified keeps only its
    minority prototypes.
    """
    _require_normalized(train)
    _check_dims(bank1, train)
    preds = classify(bank1, train)
    feats = as_f64(train.features)
    entries: list[ProtoEntry] = []
    owner: list[np.ndarray] = []  # member row indices, parallel to entries
    for c in range(train.class_count):
        in_class = np.nonzero(train.labels == c)[0]
        if in_class.size == 0:
            raise EmptyClass(c)
        class_preds = preds[in_class]
        correct = in_class[class_preds == c]
        if correct.size:
            entries.append(ProtoEntry(c, MAJORITY, None, feats[correct].mean(axis=0)))
            owner.append(correct)
        for m in range(train.class_count):
            if m == c:
                continue
            wrong = in_class[class_preds == m]
            if wrong.size:
                entries.append(ProtoEntry(c, MINORITY, m, feats[wrong].mean(axis=0)))
                owner.append(wrong)
    bank = PrototypeBank(stage="stage2", metric=bank1.metric, entries=tuple(entries))
    # entries were built in canonical order already, so owner aligns
    entry_index = np.empty(train.n, dtype=np.int64)
    for idx, members in enumerate(owner):
        entry_index[members] = idx
    return bank, GroupAssignment(entry_index)


def _reassign_pass(
    train: EmbeddingSet, bank: PrototypeBank, stage: str
) -> tuple[PrototypeBank, GroupAssignment]:
    """One within-class reassign + recompute-means pass; empty groups drop."""
    feats = as_f64(train.features)
    dists = distances_to(bank, train.features)
    entries: list[ProtoEntry] = []
    owner: list[np.ndarray] = []
    for c in range(train.class_count):
        in_class = np.nonzero(train.labels == c)[0]
        if in_class.size == 0:
            raise EmptyClass(c)
        candidates = bank.class_entry_indices(c)
        local = np.argmin(dists[np.ix_(in_class, candidates)], axis=1)
        for j, entry_idx in enumerate(candidates):
            members = in_class[local == j]
            if members.size == 0:
                continue
            src = bank.entries[entry_idx]
            entries.append(replace(src, vector=feats[members].mean(axis=0)))
            owner.append(members)
    new_bank = PrototypeBank(stage=stage, metric=bank.metric, entries=tuple(entries))
    entry_index = np.empty(train.n, dtype=np.int64)
    for idx, members in enumerate(owner):
        entry_index[members] = idx
    return new_bank, GroupAssignment(entry_index)


def fit_stage3(
    train: EmbeddingSet, bank2: PrototypeBank, assign2: GroupAssignment | None = None
) -> tuple[PrototypeBank, GroupAssignment]:
    """Exactly one reassignment pass over each class's own group prototypes."""
    _require_normalized(train)
    _check_dims(bank2, train)
    return _reassign_pass(train, bank2, stage="stage3")


def clustering_objective(
    train: EmbeddingSet, bank: PrototypeBank, assign: GroupAssignment
) -> float:
    """Within-group sum of squared Euclidean distances over all classes."""
    feats = as_f64(train.features)
    protos = bank.matrix()[assign.entry_index]
    return float(np.sum((feats - protos) ** 2))


def fit_converged(
    train: EmbeddingSet,
    bank2: PrototypeBank,
    max_iters: int = 100,
) -> tuple[PrototypeBank, GroupAssignment, list[float]]:
    """Repeat the stage-3 pass until assignments stop changing.

    Returns the final bank, its assignment, and the per-iteration
    objective values (within-group SSD), which are non-increasing for
    the Euclidean metric by the usual Lloyd argument.
    """
    _require_normalized(train)
    _check_dims(bank2, train)
    bank = bank2
    prev_sig = None
    objectives: list[float] = []
    assign = None
    for _ in range(max_iters):
        bank, assign = _reassign_pass(train, bank, stage="converged")
        sig = tuple(
            (bank.entries[i].kind, bank.entries[i].target) for i in assign.entry_index
        )
        objectives.append(clustering_objective(train, bank, assign))
        if len(objectives) >= 2 and bank.metric == EUCLIDEAN:
            assert objectives[-1] <= objectives[-2] + 1e-9, "objective increased"
        if sig == prev_sig:
            break
        prev_sig = sig
    return bank, assign, objectives


def fit_kmeans(
    train: EmbeddingSet,
    k_per_class,
    seed: int,
    metric: str = EUCLIDEAN,
    max_iters: int = 100,
) -> PrototypeBank:
    """Per-class k-means baseline.

    Seeding is greedy farthest-point: the first center is a PRNG-chosen
    sample, each next center is the point farthest from all chosen
    centers. Lloyd iterations then run to stability (or ``max_iters``),
    dropping clusters that empty out. The largest final cluster becomes
    the majority prototype; the rest become minority prototypes with
    synthetic targets (ascending class ids, skipping the own class).
    """
    _require_normalized(train)
    entries: list[ProtoEntry] = []
    for c in range(train.class_count):
        pts = as_f64(train.features[train.labels == c])
        n_c = pts.shape[0]
        if n_c == 0:
            raise EmptyClass(c)
        k = int(k_per_class[c]) if hasattr(k_per_class, "__getitem__") else int(k_per_class)
        if not 1 <= k <= n_c:
            raise BadK(f"class {c}: k={k} not in [1, {n_c}]")
        centers = _farthest_point_seed(pts, k, make_rng(seed, 7, c))
        labels = None
        for _ in range(max_iters):
            d2 = sqdist_matrix(pts, centers)
            new_labels = np.argmin(d2, axis=1)
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            kept = []
            for j in range(centers.shape[0]):
                members = pts[labels == j]
                if members.shape[0]:
                    kept.append(members.mean(axis=0))
            centers = np.stack(kept)
            if centers.shape[0] < np.max(labels) + 1:
                # renumber after dropping empties
                d2 = sqdist_matrix(pts, centers)
                labels = np.argmin(d2, axis=1)
        sizes = np.bincount(labels, minlength=centers.shape[0])
        major = int(np.argmax(sizes))  # ties keep the lowest cluster index
        synthetic_targets = iter(t for t in range(2 * centers.shape[0] + 1) if t != c)
        for j in range(centers.shape[0]):
            if j == major:
                entries.append(ProtoEntry(c, MAJORITY, None, centers[j]))
            else:
                entries.append(ProtoEntry(c, MINORITY, next(synthetic_targets), centers[j]))
    return PrototypeBank(stage="kmeans", metric=metric, entries=tuple(entries))


def _farthest_point_seed(pts: np.ndarray, k: int, rng) -> np.ndarray:
    first = int(rng.integers(pts.shape[0]))
    chosen = [first]
    min_d2 = sqdist_matrix(pts, pts[first:first + 1])[:, 0]
    while len(chosen) < k:
        nxt = int(np.argmax(min_d2))
        chosen.append(nxt)
        min_d2 = np.minimum(min_d2, sqdist_matrix(pts, pts[nxt:nxt + 1])[:, 0])
    return pts[chosen].copy()


def score_distance(bank: PrototypeBank, query: EmbeddingSet, method: str | None = None) -> ScoreVector:
    """Negated distance to the nearest prototype of any class or group."""
    _require_normalized(query)
    _check_dims(bank, query)
    dists = distances_to(bank, query.features)
    return ScoreVector(method=method or f"{bank.stage}-distance",
                       scores=-np.min(dists, axis=1))


def score_softmax(
    bank: PrototypeBank,
    query: EmbeddingSet,
    temperature: float = 1.0,
    method: str | None = None,
) -> ScoreVector:
    """Max softmax probability over negated prototype distances.

    The argmax prototype equals the nearest one, so classification is
    unchanged; only the score values differ from distance scoring.
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    _require_normalized(query)
    _check_dims(bank, query)
    logits = -distances_to(bank, query.features) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    return ScoreVector(method=method or f"{bank.stage}-softmax",
                       scores=np.max(probs, axis=1))
