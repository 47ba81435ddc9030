"""Unsupervised multiple kernel learning: spectral H-step, softmin weight step.

The fit alternates

* H-step: spectral clustering of the blended kernel (top-k eigenvectors,
  row-normalised, k-means), accepted only when it does not raise the
  kernel k-means loss at the current weights;
* weight step: the entropy-regularised minimiser over the simplex, a softmin
  of the per-kernel losses at temperature ``lam``.

The regularised objective ``sum(beta * f) + lam * sum(beta * log beta)`` is
therefore non-increasing along every run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelBank


@dataclass
class MklState:
    beta: np.ndarray
    labels: np.ndarray
    H: np.ndarray
    objective_history: list[float]
    beta_history: list[np.ndarray]
    iterations: int
    converged: bool
    seed: int | None
    lam: float
    modalities: list[str] = field(default_factory=list)
    restart_objectives: list[float] = field(default_factory=list)
    restart_histories: list[list[float]] = field(default_factory=list, repr=False)

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def top_k_eigvecs(K: np.ndarray, k: int) -> np.ndarray:
    """Eigenvectors of the ``k`` largest eigenvalues, columns sign-fixed.

    Each column is flipped so its largest-magnitude entry (lowest index on
    ties) is positive.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    w, V = np.linalg.eigh(0.5 * (K + K.T))
    V = V[:, ::-1][:, :k].copy()
    for j in range(k):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X, centers, max_iter, tol):
    k = centers.shape[0]
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)
        new = centers.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = X[members].mean(axis=0)
            else:
                # reseed on the point worst served by its current center
                far = int(np.argmax(dist[np.arange(len(X)), labels]))
                new[c] = X[far]
                labels[far] = c
        shift = ((new - centers) ** 2).sum()
        centers = new
        if shift <= tol:
            break
    dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = dist.argmin(axis=1)
    labels = _fill_empty(X, labels, k)
    for c in range(k):
        centers[c] = X[labels == c].mean(axis=0)
    wcss = float(((X - centers[labels]) ** 2).sum())
    return labels, wcss


def _fill_empty(X, labels, k):
    labels = labels.copy()
    for c in range(k):
        if (labels == c).any():
            continue
        sizes = np.bincount(labels, minlength=k)
        centers = np.array([X[labels == j].mean(axis=0) if sizes[j] else X[0] for j in range(k)])
        d = ((X - centers[labels]) ** 2).sum(axis=1)
        d[sizes[labels] < 2] = -np.inf
        labels[int(np.argmax(d))] = c
    return labels


def kmeans(X, k: int, restarts: int = 20, seed=None, max_iter: int = 300, tol: float = 1e-8) -> np.ndarray:
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding.

    ``seed`` may be an int, ``None`` or a ``numpy.random.Generator``.
    Every returned cluster is nonempty.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    best_labels, best_wcss = None, np.inf
    for _ in range(max(1, restarts)):
        labels, wcss = _lloyd(X, _kmeans_pp(X, k, rng), max_iter, tol)
        if wcss < best_wcss - 1e-12:
            best_labels, best_wcss = labels, wcss
    return canonical_labels(best_labels)


def canonical_labels(labels) -> np.ndarray:
    """Renumber cluster ids in order of first appearance."""
    labels = np.asarray(labels)
    mapping = {}
    for v in labels.tolist():
        if v not in mapping:
            mapping[v] = len(mapping)
    return np.array([mapping[v] for v in labels.tolist()], dtype=np.int64)


def indicator(labels, k: int) -> np.ndarray:
    """Orthonormal cluster indicator with ``1/sqrt(n_c)`` entries."""
    labels = np.asarray(labels)
    H = np.zeros((labels.size, k))
    sizes = np.bincount(labels, minlength=k)
    if (sizes == 0).any():
        raise ValueError("every cluster must be nonempty")
    H[np.arange(labels.size), labels] = 1.0 / np.sqrt(sizes[labels])
    return H


def spectral_h_step(K_beta: np.ndarray, k: int, restarts: int = 20, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(labels, H)`` from spectral clustering of ``K_beta``."""
    V = top_k_eigvecs(K_beta, k)
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    V = np.divide(V, norms, out=np.zeros_like(V), where=norms > 0)
    labels = kmeans(V, k, restarts=restarts, seed=seed)
    return labels, indicator(labels, k)


def per_kernel_loss(K_m: np.ndarray, H: np.ndarray) -> float:
    """``tr(K) - tr(K H H^T)``: variance of ``K`` left unexplained by ``H``."""
    return float(np.trace(K_m) - np.trace(H.T @ K_m @ H))


def kernel_losses(bank: KernelBank, H: np.ndarray) -> np.ndarray:
    return np.array([per_kernel_loss(k.values, H) for k in bank.kernels])


def beta_step(f, lam: float, active=None) -> np.ndarray:
    """Softmin of the losses at temperature ``lam``; inactive entries get 0."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    f = np.asarray(f, dtype=np.float64)
    active = np.ones(f.shape, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    if not active.any():
        raise ValueError("no active kernels")
    z = -f[active] / lam
    z -= z.max()
    w = np.exp(z)
    beta = np.zeros_like(f)
    beta[active] = w / w.sum()
    return beta


def neg_entropy(beta) -> float:
    b = np.asarray(beta, dtype=np.float64)
    b = b[b > 0]
    return float((b * np.log(b)).sum())


def regularized_objective(beta, H, bank: KernelBank, lam: float) -> float:
    f = kernel_losses(bank, H)
    return float(np.dot(beta, f) + lam * neg_entropy(beta))


def _regularized(beta, f, lam):
    return float(np.dot(beta, f) + lam * neg_entropy(beta))


def _single_run(bank, k, lam, eps, max_iter, restarts, rng):
    active = bank.active
    beta = np.where(active, 1.0 / active.sum(), 0.0)
    stack = bank.stack()
    labels = H = f = None
    history: list[float] = []
    betas = [beta.copy()]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        K_beta = np.tensordot(beta, stack, axes=1)
        new_labels, H_new = spectral_h_step(K_beta, k, restarts, rng)
        f_new = np.array([per_kernel_loss(K, H_new) for K in stack])
        if H is not None and np.dot(beta, f_new) > np.dot(beta, f):
            new_labels, H_new, f_new = labels, H, f
        labels, H, f = new_labels, H_new, f_new
        before = _regularized(beta, f, lam)
        if not history:
            history.append(before)
        cand = beta_step(f, lam, active)
        after = _regularized(cand, f, lam)
        if after <= before:
            beta = cand
        else:
            # softmin is the exact minimiser; only rounding can land here
            after = before
        history.append(after)
        betas.append(beta.copy())
        if abs(history[-1] - history[-2]) < eps:
            converged = True
            break
    return beta, labels, H, history, betas, it, converged


def mkl_fit(
    bank: KernelBank,
    k: int = 3,
    lam: float = 0.1,
    eps: float = 1e-6,
    n_init: int = 20,
    max_iter: int = 100,
    seed: int | None = 0,
    kmeans_restarts: int = 20,
) -> MklState:
    """Alternating MKL from uniform weights, best of ``n_init`` seeded runs.

    ``objective_history[0]`` is the regularised objective at the uniform
    weights and the first accepted clustering; each later entry follows one
    full H-step + weight-step iteration. ``beta_history`` starts with the
    uniform weights, so it has ``iterations + 1`` rows.
    """
    if not bank.active.any():
        raise ValueError("no active kernels")
    if bank.n < k:
        raise ValueError(f"n={bank.n} trials cannot form k={k} clusters")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    streams = np.random.SeedSequence(seed).spawn(max(1, n_init))
    best = None
    finals, histories = [], []
    for ss in streams:
        run = _single_run(bank, k, lam, eps, max_iter, kmeans_restarts, np.random.default_rng(ss))
        finals.append(run[3][-1])
        histories.append(run[3])
        if best is None or run[3][-1] < best[3][-1]:
            best = run
    beta, labels, H, history, betas, iters, converged = best
    return MklState(
        beta=beta,
        labels=labels,
        H=H,
        objective_history=history,
        beta_history=betas,
        iterations=iters,
        converged=converged,
        seed=seed,
        lam=lam,
        modalities=bank.modalities,
        restart_objectives=finals,
        restart_histories=histories,
    )
