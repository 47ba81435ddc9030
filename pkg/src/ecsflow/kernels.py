"""Heat kernels from distance matrices, centering, PSD projection and blending."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .features import DistanceMatrix, normalize_distance_matrix

PSD_TOL = 1e-8
DEGENERATE_TRACE = 1e-10
MODALITIES = ("ecs", "amp", "ugs")


class DegenerateKernelError(ValueError):
    """A modality carries no pairwise signal (all distances or trace zero)."""


@dataclass
class KernelMatrix:
    values: np.ndarray
    modality: str = ""
    sigma: float = float("nan")
    trace: float = float("nan")  # before trace normalization
    clipped: float = 0.0  # largest |negative eigenvalue| removed by psd_project
    degenerate: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class KernelBank:
    kernels: list[KernelMatrix]
    active: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.active is None:
            self.active = np.array([not k.degenerate for k in self.kernels])
        self.active = np.asarray(self.active, dtype=bool)
        if len({k.n for k in self.kernels}) > 1:
            raise ValueError("kernels in a bank must share n")

    @property
    def n(self) -> int:
        return self.kernels[0].n

    @property
    def modalities(self) -> list[str]:
        return [k.modality for k in self.kernels]

    def stack(self) -> np.ndarray:
        return np.stack([k.values for k in self.kernels])

    def subset(self, idx) -> "KernelBank":
        """Bank restricted to trials ``idx`` (repeats keep repeated rows/columns)."""
        idx = np.asarray(idx)
        ks = [
            KernelMatrix(k.values[np.ix_(idx, idx)], k.modality, k.sigma, k.trace, k.clipped, k.degenerate)
            for k in self.kernels
        ]
        return KernelBank(ks, self.active.copy())


def median_bandwidth(D_raw) -> float:
    """Median of the strictly positive upper-triangle distances."""
    D = D_raw.values if isinstance(D_raw, DistanceMatrix) else np.asarray(D_raw, dtype=np.float64)
    upper = D[np.triu_indices(D.shape[0], k=1)]
    pos = upper[upper > 0]
    if pos.size == 0:
        raise DegenerateKernelError("all pairwise distances are zero")
    return float(np.median(pos))


def heat_kernel(D_norm, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    D = D_norm.values if isinstance(D_norm, DistanceMatrix) else np.asarray(D_norm, dtype=np.float64)
    K = np.exp(-(D**2) / sigma**2)
    np.fill_diagonal(K, 1.0)
    return K


def double_center(K: np.ndarray) -> np.ndarray:
    K = np.asarray(K, dtype=np.float64)
    row = K.mean(axis=1, keepdims=True)
    col = K.mean(axis=0, keepdims=True)
    return K - row - col + K.mean()


def psd_project(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Clip negative eigenvalues; returns the projection and the largest clipped magnitude."""
    K = np.asarray(K, dtype=np.float64)
    if not np.all(np.isfinite(K)):
        raise np.linalg.LinAlgError("kernel has non-finite entries")
    K = 0.5 * (K + K.T)
    w, V = np.linalg.eigh(K)
    clipped = float(max(0.0, -w.min()))
    if clipped == 0.0:
        return K, 0.0
    out = (V * np.clip(w, 0.0, None)) @ V.T
    return 0.5 * (out + out.T), clipped


def trace_normalize(K: np.ndarray, tol: float = DEGENERATE_TRACE) -> np.ndarray:
    tr = float(np.trace(K))
    if abs(tr) < tol:
        raise DegenerateKernelError(f"trace {tr:.3g} below {tol:g}")
    return np.asarray(K) / tr


def blend(bank: KernelBank, beta) -> np.ndarray:
    """Convex combination of the bank's kernels; inactive kernels must carry weight 0."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (len(bank.kernels),):
        raise ValueError(f"expected {len(bank.kernels)} weights, got shape {beta.shape}")
    if (beta < -1e-9).any() or abs(beta.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights {beta} are not on the simplex")
    if (np.abs(beta[~bank.active]) > 1e-9).any():
        raise ValueError("inactive kernels must have zero weight")
    return np.tensordot(beta, bank.stack(), axes=1)


def kernel_distance(K: np.ndarray, i: int, j: int) -> float:
    sq = K[i, i] + K[j, j] - 2.0 * K[i, j]
    return float(np.sqrt(max(0.0, sq)))


def kernel_distance_matrix(K: np.ndarray) -> np.ndarray:
    d = np.diag(K)
    return np.sqrt(np.clip(d[:, None] + d[None, :] - 2.0 * K, 0.0, None))


def build_kernel(D_raw, modality: str = "", trace_norm: bool = True) -> KernelMatrix:
    """Raw distances -> heat kernel -> centered -> PSD -> (unit trace).

    Degenerate modalities come back with ``degenerate=True`` and a zero matrix.
    """
    if not isinstance(D_raw, DistanceMatrix):
        D_raw = DistanceMatrix(np.asarray(D_raw, dtype=np.float64))
    n = D_raw.n
    try:
        sigma = median_bandwidth(D_raw)
    except DegenerateKernelError:
        return KernelMatrix(np.zeros((n, n)), modality, float("nan"), 0.0, 0.0, True)
    D_norm = normalize_distance_matrix(D_raw)
    K, clipped = psd_project(double_center(heat_kernel(D_norm, sigma)))
    tr = float(np.trace(K))
    if abs(tr) < DEGENERATE_TRACE:
        return KernelMatrix(np.zeros((n, n)), modality, sigma, tr, clipped, True)
    if trace_norm:
        K = trace_normalize(K)
    return KernelMatrix(K, modality, sigma, tr, clipped, False)


def build_kernel_bank(
    distances: Mapping[str, object] | Sequence, trace_norm: bool = True
) -> KernelBank:
    """One kernel per raw distance matrix, keyed by modality name."""
    if not isinstance(distances, Mapping):
        distances = dict(zip(MODALITIES, distances))
    kernels = [build_kernel(D, name, trace_norm) for name, D in distances.items()]
    if len({k.n for k in kernels}) > 1:
        raise ValueError("distance matrices disagree on n")
    bank = KernelBank(kernels)
    if not bank.active.any():
        raise DegenerateKernelError("every modality is degenerate")
    return bank
