"""Label-free regularisation selection and bootstrap stability of the MKL clustering."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import KernelBank
from .metrics import ari, hungarian_align
from .mkl import mkl_fit

DEFAULT_LAMBDA_GRID = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0)
MAX_REDRAWS = 100


@dataclass
class StabilityReport:
    lambda_grid: list[float]
    mean_ari_per_lambda: list[float]
    chosen_lambda: float
    splits: int
    ari_samples: dict = field(default_factory=dict)


@dataclass
class BootstrapReport:
    B: int
    ari_samples: list[float]
    acc_samples: list[float]
    coassignment: np.ndarray
    per_trial_stability: np.ndarray
    reference_labels: np.ndarray
    redraws: int = 0


def ecs_kernel(bank: KernelBank) -> np.ndarray:
    """The ECS kernel of ``bank`` (first kernel if none is labelled ``ecs``)."""
    for km in bank.kernels:
        if km.modality == "ecs":
            return km.values
    return bank.kernels[0].values


def nn_propagate(half_labels, half_indices, K1: np.ndarray) -> np.ndarray:
    """Label every trial with the label of its most similar in-half trial.

    In-half trials keep their own label. Ties pick the lowest in-half index.
    """
    half_indices = np.asarray(half_indices, dtype=np.int64)
    half_labels = np.asarray(half_labels, dtype=np.int64)
    if half_indices.size == 0:
        raise ValueError("empty half")
    n = K1.shape[0]
    order = np.argsort(half_indices, kind="stable")
    idx = half_indices[order]
    labs = half_labels[order]
    sims = np.asarray(K1)[:, idx]
    nearest = np.argmax(sims, axis=1)  # first maximum = lowest index
    out = labs[nearest].copy()
    first = {}
    for i, lab in zip(idx.tolist(), labs.tolist()):
        first.setdefault(i, lab)
    for i, lab in first.items():
        out[i] = lab
    return out[:n]


def _labels_from_resample(idx: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # one label per distinct trial: the label of its first copy
    uniq, first = np.unique(idx, return_index=True)
    return uniq, labels[first]


def _fit_labels(bank: KernelBank, idx, k, lam, fit_kw, seed) -> tuple[np.ndarray, np.ndarray]:
    state = mkl_fit(bank.subset(idx), k=k, lam=lam, seed=seed, **fit_kw)
    return _labels_from_resample(np.asarray(idx), state.labels)


def select_lambda(
    bank: KernelBank,
    grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    B: int = 50,
    k: int = 3,
    seed: int = 0,
    K1: np.ndarray | None = None,
    **fit_kw,
) -> StabilityReport:
    """Pick the temperature whose half-split clusterings agree best.

    For each split the two halves are fit independently, both labelings are
    propagated to all trials through ``K1`` (the ECS kernel by default) and
    compared by ARI. Ties in mean ARI go to the smallest value.
    """
    n = bank.n
    if n < 4:
        raise ValueError("need at least 4 trials")
    if n // 2 < k:
        raise ValueError(f"half-splits of {n // 2} trials cannot hold k={k} clusters")
    if K1 is None:
        K1 = ecs_kernel(bank)
    grid = [float(g) for g in grid]
    split_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    splits = []
    for _ in range(B):
        perm = split_rng.permutation(n)
        splits.append((np.sort(perm[: n // 2]), np.sort(perm[n // 2 :])))
    fit_seeds = np.random.SeedSequence([seed, 2]).generate_state(2 * B)
    means, samples = [], {}
    for lam in grid:
        scores = []
        for b, (h1, h2) in enumerate(splits):
            i1, l1 = _fit_labels(bank, h1, k, lam, fit_kw, int(fit_seeds[2 * b]))
            i2, l2 = _fit_labels(bank, h2, k, lam, fit_kw, int(fit_seeds[2 * b + 1]))
            scores.append(ari(nn_propagate(l1, i1, K1), nn_propagate(l2, i2, K1)))
        samples[lam] = scores
        means.append(float(np.mean(scores)))
    top = max(means)
    chosen = min(lam for lam, m in zip(grid, means) if m == top)
    return StabilityReport(grid, means, chosen, B, samples)


def bootstrap_stability(
    bank: KernelBank,
    lam: float,
    K1: np.ndarray | None = None,
    B: int = 500,
    k: int = 3,
    seed: int = 0,
    reference: np.ndarray | None = None,
    resamples: Sequence[Sequence[int]] | None = None,
    **fit_kw,
) -> BootstrapReport:
    """Bootstrap the MKL clustering and measure agreement with the full-data fit.

    Each resample draws ``n`` trials with replacement (redrawn if fewer than
    ``k`` distinct trials appear), fits on the duplicated sub-kernels,
    propagates to held-out trials via ``K1`` and Hungarian-aligns to the
    reference labels. ``resamples`` overrides the random draws.
    """
    from .metrics import accuracy_aligned

    n = bank.n
    if n < k:
        raise ValueError(f"n={n} trials cannot form k={k} clusters")
    if K1 is None:
        K1 = ecs_kernel(bank)
    if reference is None:
        reference = mkl_fit(bank, k=k, lam=lam, seed=seed, **fit_kw).labels
    reference = np.asarray(reference, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    fit_seeds = np.random.SeedSequence([seed, 4]).generate_state(max(1, B))
    if resamples is not None:
        draws = [np.asarray(r, dtype=np.int64) for r in resamples]
        B = len(draws)
    else:
        draws = None
    together = np.zeros((n, n))
    agree = np.zeros(n)
    aris, accs = [], []
    redraws = 0
    for b in range(B):
        if draws is not None:
            idx = draws[b]
        else:
            for _ in range(MAX_REDRAWS + 1):
                idx = rng.integers(0, n, size=n)
                if np.unique(idx).size >= k:
                    break
                redraws += 1
            else:
                raise RuntimeError("could not draw a resample with k distinct trials")
        uniq, labs = _fit_labels(bank, idx, k, lam, fit_kw, int(fit_seeds[b % fit_seeds.size]))
        full = nn_propagate(labs, uniq, K1)
        aligned = hungarian_align(reference, full, k)[full]
        aris.append(ari(aligned, reference))
        accs.append(accuracy_aligned(aligned, reference, k)[0])
        together += aligned[:, None] == aligned[None, :]
        agree += aligned == reference
    done = max(1, len(aris))
    return BootstrapReport(
        B=len(aris),
        ari_samples=aris,
        acc_samples=accs,
        coassignment=together / done,
        per_trial_stability=agree / done,
        reference_labels=reference,
        redraws=redraws,
    )
