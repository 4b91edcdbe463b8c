"""Binary OOD detection metrics, defined so a brute-force oracle can
reproduce them exactly.

Conventions (normative for this toolkit):
  - scores follow "higher = more ID-like"; ID samples are the positives
    for AUROC/FPR, and either side can be the positive class for AUPR;
  - thresholds are drawn from observed score values and compared with
    ">=", never interpolated;
  - AUROC is the tie-aware Mann-Whitney statistic;
  - AUPR is the step-wise precision sum over recall increments, with
    tied scores processed as one block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyInput


@dataclass(frozen=True)
class MetricsSummary:
    auroc: float
    fpr_at_95tpr: float
    aupr_in: float
    aupr_out: float
    n_id: int
    n_ood: int

    def to_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "fpr_at_95tpr": self.fpr_at_95tpr,
            "aupr_in": self.aupr_in,
            "aupr_out": self.aupr_out,
            "n_id": self.n_id,
            "n_ood": self.n_ood,
        }


def _validate(id_scores, ood_scores) -> tuple[np.ndarray, np.ndarray]:
    id_s = np.asarray(id_scores, dtype=np.float64).ravel()
    ood_s = np.asarray(ood_scores, dtype=np.float64).ravel()
    if id_s.size == 0 or ood_s.size == 0:
        raise EmptyInput("both ID and OOD score sets must be nonempty")
    if not (np.all(np.isfinite(id_s)) and np.all(np.isfinite(ood_s))):
        raise EmptyInput("scores must be finite")
    return id_s, ood_s


def _rankdata(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based), ties share the mean of their rank span."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(id_scores, ood_scores) -> float:
    """Fraction of (id, ood) pairs with id > ood; ties count one half."""
    id_s, ood_s = _validate(id_scores, ood_scores)
    n, m = id_s.size, ood_s.size
    ranks = _rankdata(np.concatenate([id_s, ood_s]))
    u = ranks[:n].sum() - n * (n + 1) / 2.0
    return float(u / (n * m))


def fpr_at_tpr(id_scores, ood_scores, tpr_target: float = 0.95) -> float:
    """FPR at the loosest threshold that still accepts >= target TPR.

    The threshold is the largest observed ID score t with
    #{id >= t}/n_id >= tpr_target; the return is #{ood >= t}/n_ood.
    """
    id_s, ood_s = _validate(id_scores, ood_scores)
    if not 0.0 < tpr_target <= 1.0:
        raise ValueError("tpr_target must be in (0, 1]")
    desc = np.sort(id_s)[::-1]
    # after sorting descending, #{id >= desc[i]} >= i+1, with equality
    # unless ties extend past i; scan for the first index reaching target
    need = int(np.ceil(tpr_target * id_s.size))
    counts = np.array([np.sum(id_s >= t) for t in desc])
    ok = np.nonzero(counts >= need)[0]
    threshold = desc[ok[0]]
    return float(np.sum(ood_s >= threshold) / ood_s.size)


def aupr(id_scores, ood_scores, positive: str = "id") -> float:
    """Area under the precision-recall curve, step-wise summation.

    positive="id" treats ID as the positive class; positive="ood"
    negates all scores first so the sweep runs from most-OOD down.
    """
    id_s, ood_s = _validate(id_scores, ood_scores)
    side = positive.lower()
    if side == "id":
        pos, neg = id_s, ood_s
    elif side == "ood":
        pos, neg = -ood_s, -id_s
    else:
        raise ValueError(f"positive must be 'id' or 'ood', got {positive!r}")
    scores = np.concatenate([pos, neg])
    is_pos = np.concatenate([np.ones(pos.size, bool), np.zeros(neg.size, bool)])
    order = np.argsort(-scores, kind="stable")
    scores, is_pos = scores[order], is_pos[order]
    tp = np.cumsum(is_pos)
    fp = np.cumsum(~is_pos)
    # last index of each tie block: these are the only valid operating points
    block_end = np.nonzero(np.diff(scores, append=-np.inf) != 0)[0]
    tp_b, fp_b = tp[block_end], fp[block_end]
    recall = tp_b / pos.size
    precision = tp_b / (tp_b + fp_b)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def summarize(id_scores, ood_scores, tpr_target: float = 0.95) -> MetricsSummary:
    id_s, ood_s = _validate(id_scores, ood_scores)
    return MetricsSummary(
        auroc=auroc(id_s, ood_s),
        fpr_at_95tpr=fpr_at_tpr(id_s, ood_s, tpr_target),
        aupr_in=aupr(id_s, ood_s, "id"),
        aupr_out=aupr(id_s, ood_s, "ood"),
        n_id=id_s.size,
        n_ood=ood_s.size,
    )
