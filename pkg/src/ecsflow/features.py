"""Trial-pairwise distances: ECS temporal alignment, amplitude statistics, gas velocity."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

SCFM_TO_M3S = 4.719e-4
PIPE_AREA_M2 = math.pi * 0.0254**2

SCFM_PATTERN = r"(\d+(?:\.\d+)?)\s*scfm"


@dataclass
class TrialRecord:
    trial_id: str
    scfm: float
    positions: list = field(default_factory=list)  # normalized (T, S) surfaces, one per camera
    ecs: np.ndarray | None = None  # per-trial averaged, normalized surface
    u_gs: float = field(init=False)

    def __post_init__(self):
        self.u_gs = ugs_from_scfm(self.scfm)

    @property
    def amplitude(self) -> np.ndarray:
        return amplitude_features(self.ecs)


@dataclass
class DistanceMatrix:
    values: np.ndarray
    labels: list | None = None
    normalized: bool = False
    degenerate: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _overlap(Ti: int, Tj: int, k: int) -> tuple[int, int]:
    # 0-based frames t of E_j paired with t + k of E_i
    return max(0, -k), min(Tj, Ti - k)


def best_offset(E_i: np.ndarray, E_j: np.ndarray, k_max: int = 25) -> tuple[float, int]:
    """Smallest per-frame L1 distance over offsets and the offset achieving it.

    Ties go to the offset of smallest magnitude, then the negative one.
    """
    E_i = np.asarray(E_i, dtype=np.float64)
    E_j = np.asarray(E_j, dtype=np.float64)
    if E_i.shape[1] != E_j.shape[1]:
        raise ValueError("surfaces have different scale counts")
    Ti, Tj = E_i.shape[0], E_j.shape[0]
    best = (math.inf, 0)
    for k in sorted(range(-k_max, k_max + 1), key=lambda v: (abs(v), v)):
        lo, hi = _overlap(Ti, Tj, k)
        if hi <= lo:
            continue
        d = np.abs(E_i[lo + k : hi + k] - E_j[lo:hi]).sum() / (hi - lo)
        if d < best[0]:
            best = (float(d), k)
    if math.isinf(best[0]):
        raise ValueError("no temporal offset gives an overlap")
    return best


def ecs_align_distance(E_i: np.ndarray, E_j: np.ndarray, k_max: int = 25) -> float:
    return best_offset(E_i, E_j, k_max)[0]


def pairwise_ecs_distance(trials: Sequence[TrialRecord], k_max: int = 25) -> DistanceMatrix:
    """Mean alignment distance over all position pairs of each trial pair."""
    n = len(trials)
    if n < 2:
        raise ValueError("need at least two trials")
    for t in trials:
        if not t.positions:
            raise ValueError(f"trial {t.trial_id} has no camera positions")
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            ds = [ecs_align_distance(a, b, k_max) for a in trials[i].positions for b in trials[j].positions]
            D[i, j] = D[j, i] = float(np.mean(ds))
    return DistanceMatrix(D, [t.trial_id for t in trials])


def amplitude_features(E: np.ndarray) -> np.ndarray:
    """Column means, population stds, maxima and minima, concatenated."""
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] < 1:
        raise ValueError(f"expected a (T, S) surface, got shape {E.shape}")
    return np.concatenate([E.mean(axis=0), E.std(axis=0), E.max(axis=0), E.min(axis=0)])


def robust_scale(X: np.ndarray) -> np.ndarray:
    """Center on the median and divide by the IQR, column by column."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("robust_scale needs an (n, p) matrix with n >= 2")
    q1, med, q3 = np.percentile(X, [25, 50, 75], axis=0)
    iqr = q3 - q1
    iqr = np.where(iqr < 1e-12, 1.0, iqr)
    return (X - med) / iqr


def amplitude_distance_matrix(scaled: np.ndarray) -> DistanceMatrix:
    X = np.asarray(scaled, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("need at least two trials")
    sq = (X**2).sum(axis=1)
    G = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    D = np.sqrt(np.clip(G, 0.0, None))
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(D)


def ugs_from_scfm(scfm: float) -> float:
    """Superficial gas velocity (m/s) in the 2-in. pipe from an SCFM reading."""
    if scfm < 0:
        raise ValueError(f"negative gas rate {scfm}")
    return scfm * SCFM_TO_M3S / PIPE_AREA_M2


def ugs_distance_matrix(u_gs: Sequence[float]) -> DistanceMatrix:
    u = np.asarray(u_gs, dtype=np.float64)
    if u.size < 2:
        raise ValueError("need at least two trials")
    return DistanceMatrix(np.abs(u[:, None] - u[None, :]))


def normalize_distance_matrix(D: DistanceMatrix | np.ndarray) -> DistanceMatrix:
    """Divide by the largest entry; an all-zero matrix is passed through and flagged."""
    if not isinstance(D, DistanceMatrix):
        D = DistanceMatrix(np.asarray(D, dtype=np.float64))
    top = float(D.values.max()) if D.values.size else 0.0
    if top <= 0.0:
        return DistanceMatrix(np.zeros_like(D.values), D.labels, normalized=True, degenerate=True)
    return DistanceMatrix(D.values / top, D.labels, normalized=True)


def parse_trial_metadata(filename: str, pattern: str = SCFM_PATTERN) -> tuple[str, float]:
    """Extract ``(trial_id, scfm)`` from a file or directory name.

    The id is the name up to and including the SCFM token, so camera-position
    suffixes (``_mid``, ``_bottom``) do not split one trial into several.
    """
    stem = Path(filename).name
    for suffix in (".mp4", ".avi", ".mov", ".csv", ".png", ".jpg", ".pgm"):
        if stem.lower().endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    m = re.search(pattern, stem, flags=re.IGNORECASE)
    if m is None:
        raise ValueError(f"no SCFM reading in {filename!r}")
    return stem[: m.end()], float(m.group(1))


def write_distance_csv(path: str | Path, D: np.ndarray, labels: Sequence[str]) -> None:
    lines = [",".join(["trial_id", *labels])]
    for lab, row in zip(labels, np.asarray(D)):
        lines.append(",".join([lab, *(repr(float(v)) for v in row)]))
    Path(path).write_text("\n".join(lines) + "\n")
