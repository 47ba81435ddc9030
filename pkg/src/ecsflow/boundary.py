"""Regime boundaries from the best contiguous partition along gas velocity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class BoundaryResult:
    cut_indices: tuple[int, int]  # 1-based starts of the 2nd and 3rd groups in sorted order
    boundaries: tuple[float, float]
    objective: float
    order: list[int]  # original trial index at each sorted position
    labels: np.ndarray  # group id per original trial
    n_candidates: int
    shifts_vs_reference: tuple[float, float] | None = None


def sort_order(ugs: Sequence[float], trial_ids: Sequence[str] | None = None) -> list[int]:
    """Indices sorting by velocity; ties by trial id, then input position."""
    ugs = [float(u) for u in ugs]
    ids = list(trial_ids) if trial_ids is not None else [""] * len(ugs)
    return sorted(range(len(ugs)), key=lambda i: (ugs[i], ids[i], i))


def _block_sums(K: np.ndarray) -> np.ndarray:
    # P[a, b] = sum of K[:a, :b]
    n = K.shape[0]
    P = np.zeros((n + 1, n + 1))
    P[1:, 1:] = K.cumsum(axis=0).cumsum(axis=1)
    return P


def _group(P: np.ndarray, a: int, b: int) -> float:
    # sum of K[a:b, a:b] for 0-based half-open [a, b)
    return P[b, b] - P[a, b] - P[b, a] + P[a, a]


def monotone_partition(
    K_beta: np.ndarray, ugs: Sequence[float], trial_ids: Sequence[str] | None = None
) -> BoundaryResult:
    """Exhaustive search over contiguous 3-partitions of the velocity-sorted trials.

    Scores ``sum_r (1/|G_r|) sum_{i,j in G_r} K_ij`` (diagonal and both
    orderings included). Ties resolve to the lexicographically smallest cuts.
    """
    K = np.asarray(K_beta, dtype=np.float64)
    n = K.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 trials, got {n}")
    if len(ugs) != n:
        raise ValueError("velocity list does not match the kernel size")
    order = sort_order(ugs, trial_ids)
    Kp = K[np.ix_(order, order)]
    P = _block_sums(Kp)
    best_val, best_cut = -np.inf, None
    scale = max(1.0, float(np.abs(Kp).sum()))
    count = 0
    for c1 in range(2, n):
        g1 = _group(P, 0, c1 - 1) / (c1 - 1)
        for c2 in range(c1 + 1, n + 1):
            count += 1
            val = g1 + _group(P, c1 - 1, c2 - 1) / (c2 - c1) + _group(P, c2 - 1, n) / (n - c2 + 1)
            if val > best_val + 1e-12 * scale:
                best_val, best_cut = val, (c1, c2)
    c1, c2 = best_cut
    sorted_u = [float(ugs[i]) for i in order]
    labels = np.empty(n, dtype=np.int64)
    for pos, i in enumerate(order):
        labels[i] = 0 if pos < c1 - 1 else (1 if pos < c2 - 1 else 2)
    return BoundaryResult(
        cut_indices=(c1, c2),
        boundaries=boundary_midpoints(sorted_u, c1, c2),
        objective=float(best_val),
        order=order,
        labels=labels,
        n_candidates=count,
    )


def boundary_midpoints(sorted_ugs: Sequence[float], c1: int, c2: int) -> tuple[float, float]:
    """Midpoints across each cut (1-based cut indices into the sorted list)."""
    u = [float(v) for v in sorted_ugs]
    return 0.5 * (u[c1 - 2] + u[c1 - 1]), 0.5 * (u[c2 - 2] + u[c2 - 1])


def boundary_shifts(result: BoundaryResult | tuple[float, float], wu_sc: float, wu_ca: float) -> tuple[float, float]:
    """Inferred minus reference boundary, for both transitions."""
    if not (np.isfinite(wu_sc) and np.isfinite(wu_ca)):
        raise ValueError("reference boundaries must be finite")
    b = result.boundaries if isinstance(result, BoundaryResult) else result
    return b[0] - wu_sc, b[1] - wu_ca
