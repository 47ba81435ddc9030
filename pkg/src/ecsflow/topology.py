"""Hexagonal lattice, multiscale dilation, component counting and ECS assembly.

A hex image is a boolean ``(rows, cols)`` array in odd-row-offset layout: odd
rows sit half a cell right of even rows, so cell ``(r, c)`` has neighbours

* even ``r``: E, W, and ``(r +- 1, c - 1)``, ``(r +- 1, c)``
* odd ``r``:  E, W, and ``(r +- 1, c)``, ``(r +- 1, c + 1)``

The heavy lifting (one-step dilation, Hoshen-Kopelman labelling) lives in
:mod:`ecsflow._backend`.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from . import _backend

BLACK = "black"
WHITE = "white"


def to_hex(binary: np.ndarray) -> np.ndarray:
    """Brick-wall sub-sampling of a rectangular mask.

    Row ``r`` keeps columns ``r % 2, r % 2 + 2, ...``; every output row has
    ``width // 2`` cells.
    """
    binary = np.asarray(binary, dtype=bool)
    if binary.ndim != 2 or binary.shape[0] < 2 or binary.shape[1] < 2:
        raise ValueError(f"need a 2-D mask of at least 2x2, got {binary.shape}")
    h, w = binary.shape
    ncols = w // 2
    out = np.empty((h, ncols), dtype=bool)
    out[0::2] = binary[0::2, 0 : 2 * ncols : 2]
    out[1::2] = binary[1::2, 1 : 2 * ncols : 2]
    return out


def hex_neighbors(r: int, c: int, rows: int, cols: int) -> list[tuple[int, int]]:
    """In-bounds 6-neighbourhood of ``(r, c)``."""
    if r % 2:
        cand = [(r, c - 1), (r, c + 1), (r - 1, c), (r - 1, c + 1), (r + 1, c), (r + 1, c + 1)]
    else:
        cand = [(r, c - 1), (r, c + 1), (r - 1, c - 1), (r - 1, c), (r + 1, c - 1), (r + 1, c)]
    return [(a, b) for a, b in cand if 0 <= a < rows and 0 <= b < cols]


def dilate_hex(hex_img: np.ndarray, s: int) -> np.ndarray:
    """Black set grown to everything within ``s`` hexagonal steps."""
    if s < 0:
        raise ValueError(f"scale must be >= 0, got {s}")
    out = np.asarray(hex_img, dtype=bool)
    for _ in range(s):
        if out.all():
            break
        out = _backend.dilate_step(out)
    return np.array(out, dtype=bool)


def count_components(hex_img: np.ndarray, phase: str = BLACK) -> int:
    nb, nw = _backend.count_both(np.asarray(hex_img, dtype=bool))
    if phase == BLACK:
        return int(nb)
    if phase == WHITE:
        return int(nw)
    raise ValueError(f"phase must be 'black' or 'white', got {phase!r}")


def euler_char(hex_img: np.ndarray) -> int:
    """Black component count minus white component count."""
    nb, nw = _backend.count_both(np.asarray(hex_img, dtype=bool))
    return int(nb) - int(nw)


def ecs_row(hex_img: np.ndarray, n_scales: int = 30) -> np.ndarray:
    """Euler characteristic at dilation scales ``0 .. n_scales - 1``."""
    row = np.empty(n_scales, dtype=np.int64)
    cur = np.asarray(hex_img, dtype=bool)
    for s in range(n_scales):
        if s:
            cur = _backend.dilate_step(cur) if not cur.all() else cur
        nb, nw = _backend.count_both(cur)
        row[s] = nb - nw
    return row


def ecs_matrix(frames: Sequence[np.ndarray], n_scales: int = 30) -> np.ndarray:
    """Stack per-frame ECS rows into an integer ``(T, S)`` surface."""
    if len(frames) == 0:
        raise ValueError("ecs_matrix needs at least one frame")
    if n_scales < 1:
        raise ValueError("n_scales must be >= 1")
    return np.vstack([ecs_row(f, n_scales) for f in frames])


def normalize_columns(E: np.ndarray) -> np.ndarray:
    """Per-column min-max scaling to [0, 1]; constant columns become 0."""
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] < 1:
        raise ValueError(f"expected a (T, S) matrix with T >= 1, got {E.shape}")
    lo = E.min(axis=0)
    span = E.max(axis=0) - lo
    out = np.zeros_like(E)
    live = span > 0
    out[:, live] = (E[:, live] - lo[live]) / span[live]
    return out


def align_and_average(positions: Sequence[np.ndarray], k_max: int = 25) -> np.ndarray:
    """Align every surface to the first one and average over the common overlap.

    Surface ``m`` at best offset ``k`` maps its frame ``t`` onto reference frame
    ``t + k``. The output spans the reference frames covered by every surface.
    """
    from .features import best_offset

    if len(positions) == 0:
        raise ValueError("no surfaces to average")
    mats = [np.asarray(p, dtype=np.float64) for p in positions]
    if len({m.shape[1] for m in mats}) != 1:
        raise ValueError("all surfaces must share the scale count")
    ref = mats[0]
    if len(mats) == 1:
        return ref.copy()
    starts, stops = [0], [ref.shape[0]]
    offsets = [0]
    for m in mats[1:]:
        _, k = best_offset(ref, m, k_max)
        offsets.append(k)
        starts.append(k)
        stops.append(k + m.shape[0])
    lo = max(0, max(starts))
    hi = min(ref.shape[0], min(stops))
    if hi <= lo:
        raise ValueError("aligned surfaces share no common frames")
    acc = np.zeros((hi - lo, ref.shape[1]))
    for m, k in zip(mats, offsets):
        acc += m[lo - k : hi - k]
    return acc / len(mats)


def write_ecs_csv(path: str | Path, E: np.ndarray) -> None:
    E = np.asarray(E)
    header = ",".join(f"scale_{s}" for s in range(E.shape[1]))
    lines = [header] + [",".join(str(int(v)) for v in row) for row in E]
    Path(path).write_text("\n".join(lines) + "\n")


def read_ecs_csv(path: str | Path) -> np.ndarray:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    if not all(h.startswith("scale_") for h in header):
        raise ValueError(f"{path}: not an ECS cache (bad header)")
    rows = [[int(v) for v in line.split(",")] for line in text[1:] if line]
    E = np.array(rows, dtype=np.int64).reshape(len(rows), len(header))
    return E
