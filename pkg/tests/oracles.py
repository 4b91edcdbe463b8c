"""Brute-force reference implementations used to pin expected values.

These stay deliberately naive (pair loops, threshold enumeration, full
sorts) and independent of the fast code paths they check.
"""

import numpy as np


def auroc_bruteforce(id_scores, ood_scores) -> float:
    total = 0.0
    for a in id_scores:
        for b in ood_scores:
            if a > b:
                total += 1.0
            elif a == b:
                total += 0.5
    return total / (len(id_scores) * len(ood_scores))


def fpr_at_tpr_bruteforce(id_scores, ood_scores, tpr_target=0.95) -> float:
    id_s = np.asarray(id_scores, float)
    ood_s = np.asarray(ood_scores, float)
    candidates = sorted(set(id_s.tolist()), reverse=True)
    best_t = None
    for t in candidates:
        tpr = np.mean(id_s >= t)
        if tpr >= tpr_target and (best_t is None or t > best_t):
            best_t = t
    return float(np.mean(ood_s >= best_t))


def aupr_bruteforce(id_scores, ood_scores, positive="id") -> float:
    if positive == "id":
        pos = np.asarray(id_scores, float)
        neg = np.asarray(ood_scores, float)
    else:
        pos = -np.asarray(ood_scores, float)
        neg = -np.asarray(id_scores, float)
    thresholds = sorted(set(pos.tolist()) | set(neg.tolist()), reverse=True)
    area = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = float(np.sum(pos >= t))
        fp = float(np.sum(neg >= t))
        recall = tp / pos.size
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def kth_nn_bruteforce(train, queries, k) -> np.ndarray:
    out = []
    for q in queries:
        dists = sorted(np.sqrt(np.sum((train - q) ** 2, axis=1)).tolist())
        out.append(dists[k - 1])
    return np.array(out)


def nearest_prototype_bruteforce(protos, queries) -> np.ndarray:
    """Index of the nearest prototype per query, first-wins on ties."""
    out = []
    for q in queries:
        best, best_d = 0, None
        for j, p in enumerate(protos):
            d = float(np.sqrt(np.sum((q - p) ** 2)))
            if best_d is None or d < best_d:
                best, best_d = j, d
        out.append(best)
    return np.array(out)
