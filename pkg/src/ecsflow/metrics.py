"""Clustering agreement, separation, spatial variance, reference labels, PAC bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from .kernels import kernel_distance_matrix


@dataclass
class EvalReport:
    ari: float
    accuracy: float
    separation: float
    confusion: np.ndarray


def contingency(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    C = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(C, (ai, bi), 1)
    return C


def ari(a, b) -> float:
    """Adjusted Rand index from the pair-count contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("label vectors differ in length")
    n = a.size
    if n < 2:
        raise ValueError("ARI needs at least two items")
    C = contingency(a, b)
    sum_ij = comb(C, 2).sum()
    sum_a = comb(C.sum(axis=1), 2).sum()
    sum_b = comb(C.sum(axis=0), 2).sum()
    total = comb(n, 2)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # only reachable when both are one cluster or both are all singletons
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def confusion_matrix(pred, truth, k: int) -> np.ndarray:
    """``C[t, p]``: number of items with true id ``t`` and predicted id ``p``."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("label vectors differ in length")
    for lab in (pred, truth):
        if lab.size and (lab.min() < 0 or lab.max() >= k):
            raise ValueError(f"labels must lie in [0, {k})")
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (truth, pred), 1)
    return C


def hungarian_align(labels_a, labels_b, k: int) -> np.ndarray:
    """Permutation ``perm`` with ``perm[b_id] = a_id`` maximizing agreement."""
    C = confusion_matrix(labels_b, labels_a, k)  # rows: a ids, cols: b ids
    rows, cols = linear_sum_assignment(-C)
    perm = np.empty(k, dtype=np.int64)
    perm[cols] = rows
    return perm


def accuracy_aligned(pred, truth, k: int) -> tuple[float, np.ndarray]:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    perm = hungarian_align(truth, pred, k)
    aligned = perm[pred]
    C = confusion_matrix(aligned, truth, k)
    return float(np.trace(C)) / truth.size, C


def separation(K_or_D, labels, is_kernel: bool = True) -> float:
    """Mean inter-cluster over mean intra-cluster distance (diagonal excluded)."""
    M = np.asarray(K_or_D, dtype=np.float64)
    D = kernel_distance_matrix(M) if is_kernel else M
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(labels.size, dtype=bool)
    intra = same & off
    inter = ~same
    if not intra.any():
        raise ValueError("no intra-cluster pairs")
    if not inter.any():
        raise ValueError("need at least two clusters")
    return float(D[inter].mean() / D[intra].mean())


def evaluate(pred, truth, K_beta, k: int) -> EvalReport:
    acc, C = accuracy_aligned(pred, truth, k)
    return EvalReport(ari(pred, truth), acc, separation(K_beta, pred), C)


def spatial_variance(ecs_row) -> float:
    """Population variance of chi across scales for one image."""
    x = np.asarray(ecs_row, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("need at least two scales")
    return float(x.var())


def reference_labels(ugs, b_sc: float, b_ca: float) -> np.ndarray:
    """0 slug below ``b_sc``, 1 churn on ``[b_sc, b_ca)``, 2 annular above."""
    if not b_sc < b_ca:
        raise ValueError("boundaries must satisfy b_sc < b_ca")
    u = np.asarray(ugs, dtype=np.float64)
    return np.where(u < b_sc, 0, np.where(u < b_ca, 1, 2)).astype(np.int64)


def pac_bound(n: int, M: int, delta: float, kappa: float) -> float:
    """Excess-risk bound ``2k sqrt(2M ln(2/d)) / sqrt(n) + 4kM/n``."""
    if n < 1 or M < 1 or not 0 < delta < 1 or not kappa > 0:
        raise ValueError("pac_bound arguments out of domain")
    return 2 * kappa * math.sqrt(2 * M * math.log(2 / delta)) / math.sqrt(n) + 4 * kappa * M / n


def welch_t_test(sample_a, sample_b) -> tuple[float, float]:
    """Two-sided Welch t statistic and p-value."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    if va + vb <= 0:
        raise ValueError("both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    p = 2.0 * stats.t.sf(abs(t), df)
    return float(t), float(min(1.0, p))
