"""Image loading, greyscale conversion, cropping, thresholding and downsampling.

Images are plain numpy arrays: greyscale is ``float64`` in [0, 1] with shape
``(height, width)``; binary masks are ``bool`` with ``True`` meaning black
(gas phase).
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image


class DegenerateImageError(ValueError):
    """Raised when an image carries no usable contrast."""


def load_image(path: str | Path) -> np.ndarray:
    """Read a PNG/JPEG/PGM file as greyscale intensities in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr"):
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                return to_grayscale(arr)
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                top = 65535.0 if arr.max() > 255 else 255.0
                return np.clip(arr / top, 0.0, 1.0)
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except (OSError, SyntaxError, ValueError) as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    return arr


def to_grayscale(rgb) -> np.ndarray:
    """Average the R, G and B channels.

    Accepts an ``(H, W, 3)`` array or a sequence of three ``(H, W)`` channels.
    """
    if isinstance(rgb, (list, tuple)):
        shapes = {np.shape(ch) for ch in rgb}
        if len(rgb) != 3 or len(shapes) != 1:
            raise ValueError("expected three channels of identical shape")
        rgb = np.stack([np.asarray(ch, dtype=np.float64) for ch in rgb], axis=-1)
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[-1] < 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {rgb.shape}")
    return rgb[..., :3].mean(axis=-1)


def threshold_fixed(img: np.ndarray, tau: float = 0.6, invert: bool = False) -> np.ndarray:
    """Binarize: a pixel is black iff its intensity is strictly below ``tau``.

    ``invert=True`` flips the convention for rigs lit so that gas appears bright.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    img = np.asarray(img, dtype=np.float64)
    mask = img < tau
    return ~mask if invert else mask


def otsu_tau(img: np.ndarray, bins: int = 256) -> float:
    """Otsu threshold on a ``bins``-bin histogram of [0, 1] intensities.

    The returned value is the upper edge of the last bin assigned to the dark
    class, so ``intensity < tau`` reproduces the optimal split.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.size == 0 or np.ptp(img) == 0:
        raise DegenerateImageError("constant image has no Otsu threshold")
    hist, edges = np.histogram(np.clip(img, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    hist = hist.astype(np.float64)
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * centers)
    mu_total = m0[-1]
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        raise DegenerateImageError("all intensities fall in one histogram bin")
    between = np.full(bins, -np.inf)
    mu0 = m0[valid] / w0[valid]
    mu1 = (mu_total - m0[valid]) / w1[valid]
    between[valid] = w0[valid] * w1[valid] * (mu0 - mu1) ** 2
    best = int(np.argmax(between))
    return float(edges[best + 1])


def threshold_otsu(img: np.ndarray, invert: bool = False) -> tuple[np.ndarray, float]:
    tau = otsu_tau(img)
    img = np.asarray(img, dtype=np.float64)
    mask = img < tau
    return (~mask if invert else mask), tau


def adaptive_crop(img: np.ndarray, crop_box=(0.0, 0.0, 1.0, 1.0), min_width: int = 500) -> np.ndarray:
    """Crop images wider than ``min_width`` to a fractional box.

    ``crop_box`` is ``(x0, y0, x1, y1)`` in fractions of width and height.
    """
    x0, y0, x1, y1 = (float(v) for v in crop_box)
    if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
        raise ValueError(f"degenerate or out-of-range crop box {crop_box}")
    img = np.asarray(img)
    h, w = img.shape[:2]
    if w <= min_width:
        return img
    c0, c1 = int(round(x0 * w)), int(round(x1 * w))
    r0, r1 = int(round(y0 * h)), int(round(y1 * h))
    if c1 <= c0 or r1 <= r0:
        raise ValueError(f"crop box {crop_box} selects no pixels of a {w}x{h} image")
    return img[r0:r1, c0:c1]


def downsample(img: np.ndarray, target_width: int = 120) -> np.ndarray:
    """Box-filter resample to ``target_width`` columns, preserving aspect ratio.

    Each output pixel is the area-weighted mean of the input pixels it covers,
    so integer factors reduce to plain block averaging.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if target_width < 1 or target_width > w:
        raise ValueError(f"target width {target_width} not in [1, {w}]")
    if target_width == w:
        return img.copy()
    target_height = max(1, int(round(h * target_width / w)))
    rows = _box_weights(h, target_height)
    cols = _box_weights(w, target_width)
    return rows @ img @ cols.T


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    # overlap of output bin [i, i+1)*scale with each input pixel [j, j+1)
    scale = n_in / n_out
    lo = np.arange(n_out)[:, None] * scale
    hi = lo + scale
    j = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, j + 1) - np.maximum(lo, j), 0.0, None)
    return overlap / scale


def sample_frames(frame_paths: Sequence, fps: float, stride_seconds: float = 0.3) -> list:
    """Pick frames ``round(j * stride_seconds * fps)`` for j = 0, 1, ..."""
    if len(frame_paths) == 0:
        raise ValueError("no frames to sample")
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    step = stride_seconds * fps
    if step <= 1.0:
        return list(frame_paths)
    picked = []
    seen = set()
    j = 0
    while True:
        idx = int(round(j * step))
        if idx >= len(frame_paths):
            break
        if idx not in seen:
            seen.add(idx)
            picked.append(frame_paths[idx])
        j += 1
    return picked


def list_frames(directory: str | Path) -> list[Path]:
    """Image files in ``directory``, lexicographically sorted."""
    exts = {".png", ".jpg", ".jpeg", ".pgm", ".ppm", ".bmp", ".tif", ".tiff"}
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in exts and p.is_file())
