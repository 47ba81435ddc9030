"""Deterministic synthetic slug / churn / annular frame sequences.

This is a test harness, not a flow simulator. Each generator draws binary
frames (``True`` = black = gas) whose Euler-characteristic behaviour mimics
the regime's qualitative signature:

* slug: a Taylor bubble spanning most of the pipe passes with a fixed
  period and carries a few entrained liquid droplets (chi < 0); the liquid
  slug between bubbles is clear right behind the tail and then carries an
  evenly spread set of small gas clusters (chi > 0).
* churn: medium, often holed gas blobs with torn-off fragments, in random
  number and position, no persistent structure.
* annular: a fixed mist of small dispersed gas pockets between thin wall
  films; by default the pattern is static so its surface is flat in time.

Defaults were tuned so the three regimes separate cleanly on amplitude
features; see ``SynthConfig`` for the knobs.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import PIPE_AREA_M2, SCFM_TO_M3S, TrialRecord
from .topology import align_and_average, ecs_matrix, normalize_columns, to_hex

REGIMES = ("slug", "churn", "annular")
DEFAULT_UGS_RANGES = {"slug": (3.3, 6.0), "churn": (8.0, 12.0), "annular": (15.0, 20.0)}


@dataclass(frozen=True)
class SynthConfig:
    regime: str = "slug"
    width: int = 64
    height: int = 96
    T: int = 40
    seed: int = 0
    bubble_period: int = 10  # slug: frames between Taylor bubble noses
    liquid_frames: int = 8  # slug: bubble-free frames per period
    clear_frames: int = 3  # slug: leading liquid frames with no dispersed gas
    blob_rate: float = 8.0  # churn: mean blob count per frame
    satellites: float = 7.0  # churn: mean small fragments around each blob
    film_thickness: int = 3  # annular: wall film width in pixels
    mist_count: int = 30  # annular: dispersed gas pockets
    small_count: int = 12  # slug: small gas clusters per liquid-slug frame
    droplets: int = 4  # slug: liquid droplets entrained in the Taylor bubble
    flicker: float = 0.0  # annular: chance per frame that one mist pocket vanishes

    def validate(self) -> None:
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.width < 8 or self.height < 8:
            raise ValueError("frames must be at least 8x8 pixels")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.bubble_period < 2:
            raise ValueError("bubble_period must be >= 2")
        if not 0 <= self.liquid_frames < self.bubble_period:
            raise ValueError("liquid_frames must lie in [0, bubble_period)")
        if not 0 <= self.clear_frames <= self.liquid_frames:
            raise ValueError("clear_frames must lie in [0, liquid_frames]")


def _grid(h, w):
    return np.mgrid[0:h, 0:w]


def _disk(mask, yy, xx, cy, cx, r, value=True):
    mask[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = value


def _spaced_points(rng, n, yr, xr, spacing, ok=None, max_tries=5000):
    """Up to ``n`` uniform points at least ``spacing`` apart (rejection sampling)."""
    pts = []
    tries = 0
    while len(pts) < n and tries < max_tries:
        tries += 1
        cy, cx = rng.uniform(*yr), rng.uniform(*xr)
        if ok is not None and not ok(cy, cx):
            continue
        if all((cy - a) ** 2 + (cx - b) ** 2 > spacing**2 for a, b in pts):
            pts.append((cy, cx))
    return pts


def _jittered_grid(rng, n, yr, xr, jitter=1.0):
    """``n`` points on a near-square grid over the box, each nudged by up to ``jitter``."""
    (y0, y1), (x0, x1) = yr, xr
    cols = max(1, int(round(np.sqrt(n * (x1 - x0) / (y1 - y0)))))
    rows = int(np.ceil(n / cols))
    ys = np.linspace(y0, y1, rows + 2)[1:-1]
    xs = np.linspace(x0, x1, cols + 2)[1:-1]
    pts = [(y, x) for y in ys for x in xs][:n]
    return [(y + rng.uniform(-jitter, jitter), x + rng.uniform(-jitter, jitter)) for y, x in pts]


def gen_slug(cfg: SynthConfig) -> list[np.ndarray]:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.height, cfg.width
    yy, xx = _grid(h, w)
    bub_w = int(np.ceil(0.85 * w))
    bub_h = int(0.5 * h)
    x0 = (w - bub_w) // 2
    travel = h + bub_h
    phase0 = int(rng.integers(cfg.bubble_period))
    frames = []
    for t in range(cfg.T):
        f = np.zeros((h, w), dtype=bool)
        i = (t + phase0) % cfg.bubble_period - cfg.liquid_frames
        if i < 0:
            if i < -cfg.liquid_frames + cfg.clear_frames:
                frames.append(f)  # clear liquid just behind the bubble tail
                continue
            # liquid slug body carrying small dispersed gas clusters
            for cy, cx in _jittered_grid(rng, cfg.small_count, (3, h - 4), (x0 + 3, x0 + bub_w - 4)):
                _disk(f, yy, xx, cy, cx, 1.3)
            frames.append(f)
            continue
        ph = (i + 1) / (cfg.bubble_period - cfg.liquid_frames + 1)
        top = int(round(h - ph * travel))  # nose moves up through the window
        lo, hi = max(0, top), min(h, top + bub_h)
        f[lo:hi, x0 : x0 + bub_w] = True
        _disk(f, yy, xx, top, x0 + bub_w / 2, bub_w / 2)  # rounded nose
        # liquid droplets entrained inside the bubble
        body = f.copy()
        inside = lambda y, x: body[max(0, int(y) - 3) : int(y) + 4, max(0, int(x) - 3) : int(x) + 4].all()
        for cy, cx in _spaced_points(rng, cfg.droplets, (2, h - 3), (x0 + 3, x0 + bub_w - 4), 6.0, inside):
            _disk(f, yy, xx, cy, cx, 1.3, value=False)
        frames.append(f)
    return frames


def gen_churn(cfg: SynthConfig) -> list[np.ndarray]:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.height, cfg.width
    yy, xx = _grid(h, w)
    frames = []
    for _ in range(cfg.T):
        f = np.zeros((h, w), dtype=bool)
        for _ in range(max(1, rng.poisson(cfg.blob_rate))):
            r = rng.uniform(3.0, 7.0)
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            _disk(f, yy, xx, cy, cx, r)
            if r > 4.5 and rng.random() < 0.6:
                # liquid trapped inside the blob
                _disk(f, yy, xx, cy + rng.uniform(-1, 1), cx + rng.uniform(-1, 1), r / 2.5, value=False)
            # gas torn off the interface
            for _ in range(rng.poisson(cfg.satellites)):
                a, d = rng.uniform(0, 2 * np.pi), r + rng.uniform(3.0, 8.0)
                _disk(f, yy, xx, cy + d * np.sin(a), cx + d * np.cos(a), 1.2)
        frames.append(f)
    return frames


def gen_annular(cfg: SynthConfig) -> list[np.ndarray]:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.height, cfg.width
    yy, xx = _grid(h, w)
    ft = cfg.film_thickness
    base = np.zeros((h, w), dtype=bool)
    # well-spaced mist so the pattern's topology is stable
    centers = _spaced_points(rng, cfg.mist_count, (2, h - 3), (ft + 2, w - ft - 3), 6.0)
    for cy, cx in centers:
        _disk(base, yy, xx, cy, cx, 1.2)
    base[:, :ft] = False
    base[:, w - ft :] = False
    frames = []
    for _ in range(cfg.T):
        f = base.copy()
        if rng.random() < cfg.flicker:
            cy, cx = centers[int(rng.integers(len(centers)))]
            _disk(f, yy, xx, cy, cx, 1.2, value=False)
        frames.append(f)
    return frames


GENERATORS = {"slug": gen_slug, "churn": gen_churn, "annular": gen_annular}


def generate(cfg: SynthConfig) -> list[np.ndarray]:
    cfg.validate()
    return GENERATORS[cfg.regime](cfg)


def surface_from_frames(frames: Sequence[np.ndarray], n_scales: int = 30) -> np.ndarray:
    """Integer ECS of rectangular binary frames (via the hex lattice)."""
    return ecs_matrix([to_hex(f) for f in frames], n_scales)


def scfm_for_ugs(u: float) -> float:
    return u * PIPE_AREA_M2 / SCFM_TO_M3S


def gen_dataset(
    n_per_regime: int = 4,
    ugs_ranges: dict | None = None,
    seed: int = 0,
    constant_ugs: float | None = None,
    n_positions: int = 1,
    n_scales: int = 30,
    k_max: int = 25,
    base: SynthConfig | None = None,
    return_frames: bool = False,
):
    """Synthetic trials ordered slug < churn < annular along gas velocity.

    Returns ``(trials, labels)``, plus the raw frames per trial and position
    when ``return_frames``. ``constant_ugs`` gives every trial the same
    velocity, which makes the velocity kernel degenerate downstream.
    """
    if n_per_regime < 1:
        raise ValueError("n_per_regime must be >= 1")
    ranges = dict(DEFAULT_UGS_RANGES if ugs_ranges is None else ugs_ranges)
    if constant_ugs is None:
        spans = [ranges[r] for r in REGIMES]
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if not (a0 <= a1 < b0 <= b1):
                raise ValueError(f"velocity ranges must be ordered and disjoint: {spans}")
    base = base or SynthConfig()
    streams = np.random.SeedSequence(seed).spawn(len(REGIMES) * n_per_regime)
    trials, labels, all_frames = [], [], []
    for r, regime in enumerate(REGIMES):
        if constant_ugs is None:
            lo, hi = ranges[regime]
            us = np.linspace(lo, hi, n_per_regime + 2)[1:-1]
        else:
            us = np.full(n_per_regime, float(constant_ugs))
        for j in range(n_per_regime):
            ss = streams[r * n_per_regime + j]
            pos_seeds = ss.generate_state(n_positions)
            scfm = round(scfm_for_ugs(float(us[j])), 6)
            tid = f"{regime}{j:02d}_{scfm:g}SCFM"
            raw, frames_by_pos = [], []
            for p in range(n_positions):
                frames = generate(replace(base, regime=regime, seed=int(pos_seeds[p])))
                frames_by_pos.append(frames)
                raw.append(surface_from_frames(frames, n_scales))
            rec = TrialRecord(tid, scfm, positions=[normalize_columns(E) for E in raw])
            rec.ecs = normalize_columns(align_and_average(raw, k_max))
            trials.append(rec)
            labels.append(r)
            all_frames.append(frames_by_pos)
    labels = np.array(labels, dtype=np.int64)
    if return_frames:
        return trials, labels, all_frames
    return trials, labels


def write_pgm(path: str | Path, mask: np.ndarray) -> None:
    """Binary PGM (P5): black (gas) pixels 0, white 255."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    data = np.where(mask, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_dataset(out_dir: str | Path, trials, labels, frames, positions=("mid", "bottom", "top")) -> Path:
    """Lay frames out as ``trial/position/frame_000.pgm`` plus ``labels.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rec, per_pos in zip(trials, frames):
        for p, seq in enumerate(per_pos):
            d = out / rec.trial_id / positions[p % len(positions)]
            d.mkdir(parents=True, exist_ok=True)
            for t, f in enumerate(seq):
                write_pgm(d / f"frame_{t:03d}.pgm", f)
    lines = ["trial_id,label,regime"]
    lines += [f"{rec.trial_id},{int(l)},{REGIMES[int(l)]}" for rec, l in zip(trials, labels)]
    (out / "labels.csv").write_text("\n".join(lines) + "\n")
    return out
