"""End-to-end commands: frames -> ECS caches -> kernels -> fit -> boundaries -> stability.

Each ``cmd_*`` function is what the matching CLI subcommand runs; they take
paths and a :class:`PipelineConfig` and write self-describing outputs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import boundary_shifts, monotone_partition
from .config import PipelineConfig
from .features import (
    TrialRecord,
    amplitude_distance_matrix,
    amplitude_features,
    pairwise_ecs_distance,
    parse_trial_metadata,
    robust_scale,
    ugs_distance_matrix,
    ugs_from_scfm,
)
from .imgproc import adaptive_crop, downsample, list_frames, load_image, otsu_tau, sample_frames, threshold_fixed
from .io import DataError, read_csv_dicts, read_json, write_csv, write_json, write_matrix_csv
from .kernels import KernelBank, blend, build_kernel_bank
from .metrics import accuracy_aligned, ari, reference_labels, separation
from .mkl import mkl_fit
from .selection import bootstrap_stability, ecs_kernel, select_lambda
from .topology import align_and_average, ecs_row, normalize_columns, read_ecs_csv, to_hex, write_ecs_csv

log = logging.getLogger(__name__)

ECS_DIR = "ecs"
MANIFEST = "manifest.json"
METADATA = "metadata.csv"

_PREPROCESS_KEYS = (
    "tau", "S", "threshold_mode", "invert", "fps", "stride_seconds",
    "crop_box", "crop_min_width", "downsample_width",
)


# --------------------------------------------------------------------------- ecs


def binarize_frame(img: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Greyscale frame -> binary mask per the configured preprocessing."""
    if cfg.threshold_mode == "otsu":
        img = adaptive_crop(img, cfg.crop_box, cfg.crop_min_width)
        tau = otsu_tau(img)
    else:
        tau = cfg.tau
    if cfg.downsample_width and img.shape[1] > cfg.downsample_width:
        img = downsample(img, cfg.downsample_width)
    mask = img < tau
    return ~mask if cfg.invert else mask


def frame_ecs(path: Path, cfg: PipelineConfig) -> tuple[np.ndarray, tuple]:
    try:
        img = load_image(path)
    except OSError as exc:
        raise DataError(f"unreadable frame {path}: {exc}") from exc
    if cfg.threshold_mode == "fixed":
        threshold_fixed(img, cfg.tau)  # validates tau
    try:
        mask = binarize_frame(img, cfg)
        return ecs_row(to_hex(mask), cfg.S), mask.shape
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def discover_layout(input_dir: Path) -> dict[str, dict[str, list[Path]]]:
    """``{trial: {position: [frames]}}`` from ``trial/position/frame`` directories.

    A trial directory holding images directly is a single position ``main``.
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise DataError(f"{input_dir} is not a directory")
    layout = {}
    for tdir in sorted(p for p in input_dir.iterdir() if p.is_dir()):
        positions = {}
        subdirs = sorted(p for p in tdir.iterdir() if p.is_dir())
        for pdir in subdirs:
            frames = list_frames(pdir)
            if frames:
                positions[pdir.name] = frames
        direct = list_frames(tdir)
        if direct:
            positions.setdefault("main", direct)
        if positions:
            layout[tdir.name] = positions
    if not layout:
        raise DataError(f"no trial/position/frame images under {input_dir}")
    return layout


def _content_hash(frames: list[Path], cfg: PipelineConfig) -> str:
    h = hashlib.sha256()
    snap = cfg.snapshot()
    h.update(json.dumps({k: snap[k] for k in _PREPROCESS_KEYS}, sort_keys=True).encode())
    for f in frames:
        h.update(f.name.encode())
        h.update(hashlib.sha256(f.read_bytes()).digest())
    return h.hexdigest()


def trial_scfm(trial_id: str, cfg: PipelineConfig) -> float:
    try:
        return parse_trial_metadata(trial_id, cfg.scfm_pattern)[1]
    except ValueError:
        if cfg.default_scfm is None:
            raise DataError(f"no SCFM reading in trial name {trial_id!r} and no default_scfm set")
        return float(cfg.default_scfm)


def cmd_ecs(input_dir, out_dir, cfg: PipelineConfig) -> dict:
    """Write one integer ECS CSV per trial-position plus trial metadata.

    Caches whose frames and preprocessing settings hash to the recorded value
    are left untouched.
    """
    out_dir = Path(out_dir)
    cache = out_dir / ECS_DIR
    cache.mkdir(parents=True, exist_ok=True)
    manifest_path = cache / MANIFEST
    manifest = read_json(manifest_path) if manifest_path.exists() else {}
    layout = discover_layout(Path(input_dir))
    computed, reused, meta_rows = [], [], []
    for trial, positions in layout.items():
        scfm = trial_scfm(trial, cfg)
        meta_rows.append([trial, scfm, ugs_from_scfm(scfm)])
        for pos, frames in positions.items():
            if cfg.fps:
                frames = sample_frames(frames, cfg.fps, cfg.stride_seconds)
            name = f"{trial}__{pos}.csv"
            digest = _content_hash(frames, cfg)
            entry = manifest.get(name)
            if entry and entry.get("hash") == digest and (cache / name).exists():
                reused.append(name)
                continue
            rows, shape = [], None
            for f in frames:
                row, sh = frame_ecs(f, cfg)
                if shape is None:
                    shape = sh
                elif sh != shape:
                    raise DataError(f"{f}: frame size {sh} differs from {shape} in {trial}/{pos}")
                rows.append(row)
            write_ecs_csv(cache / name, np.vstack(rows))
            manifest[name] = {"trial": trial, "position": pos, "hash": digest, "frames": len(frames)}
            write_json(manifest_path, manifest)
            computed.append(name)
    write_csv(out_dir / METADATA, ["trial_id", "scfm", "u_gs"], meta_rows)
    return {"computed": computed, "cached": reused, "trials": list(layout)}


# --------------------------------------------------------------------------- loading


def load_trials(cache_dir, cfg: PipelineConfig, metadata=None) -> list[TrialRecord]:
    """Trial records from an ECS cache directory and its metadata CSV."""
    cache_dir = Path(cache_dir)
    ecs_dir = cache_dir / ECS_DIR if (cache_dir / ECS_DIR).is_dir() else cache_dir
    meta_path = Path(metadata) if metadata else cache_dir / METADATA
    if not meta_path.exists():
        raise DataError(f"metadata file {meta_path} not found")
    meta = {r["trial_id"]: float(r["scfm"]) for r in read_csv_dicts(meta_path)}
    groups: dict[str, list[Path]] = {}
    for f in sorted(ecs_dir.glob("*__*.csv")):
        trial = f.name.rsplit("__", 1)[0]
        groups.setdefault(trial, []).append(f)
    if not groups:
        raise DataError(f"no ECS caches in {ecs_dir}")
    trials = []
    for trial, files in groups.items():
        if trial not in meta:
            raise DataError(f"no metadata for cached trial {trial!r}")
        try:
            raw = [read_ecs_csv(f) for f in files]
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from exc
        if len({E.shape[1] for E in raw}) != 1:
            raise DataError(f"trial {trial} caches disagree on scale count")
        rec = TrialRecord(trial, meta[trial], positions=[normalize_columns(E) for E in raw])
        rec.ecs = normalize_columns(align_and_average(raw, cfg.k_max))
        trials.append(rec)
    return trials


def load_labels(path, trials) -> np.ndarray:
    rows = {r["trial_id"]: int(r["label"]) for r in read_csv_dicts(path)}
    missing = [t.trial_id for t in trials if t.trial_id not in rows]
    if missing:
        raise DataError(f"labels missing for {missing}")
    return np.array([rows[t.trial_id] for t in trials], dtype=np.int64)


def distance_matrices(trials, cfg: PipelineConfig) -> dict:
    ecs = pairwise_ecs_distance(trials, cfg.k_max)
    amp = amplitude_distance_matrix(robust_scale(np.array([amplitude_features(t.ecs) for t in trials])))
    ugs = ugs_distance_matrix([t.u_gs for t in trials])
    return {"ecs": ecs.values, "amp": amp.values, "ugs": ugs.values}


def _fit_kw(cfg):
    return dict(eps=cfg.eps, n_init=cfg.n_init, max_iter=cfg.max_iter, kmeans_restarts=cfg.kmeans_restarts)


def _bank_summary(bank: KernelBank) -> dict:
    return {
        k.modality: {"sigma": k.sigma, "trace": k.trace, "active": bool(a), "clipped_eigenvalue": k.clipped}
        for k, a in zip(bank.kernels, bank.active)
    }


def prepare(cache_dir, cfg, metadata=None):
    trials = load_trials(cache_dir, cfg, metadata)
    if len(trials) < 3:
        raise DataError(f"need at least 3 trials, found {len(trials)}")
    D = distance_matrices(trials, cfg)
    bank = build_kernel_bank(D, trace_norm=cfg.trace_norm)
    return trials, D, bank


def _stability_dict(rep) -> dict:
    return {
        "lambda_grid": rep.lambda_grid,
        "mean_ari_per_lambda": rep.mean_ari_per_lambda,
        "chosen_lambda": rep.chosen_lambda,
        "splits": rep.splits,
    }


def _resolve_lambda(bank, cfg):
    if cfg.lam != "auto":
        return float(cfg.lam), None
    rep = select_lambda(bank, cfg.lambda_grid, cfg.stability_B, cfg.k, cfg.seed, **_fit_kw(cfg))
    return rep.chosen_lambda, rep


# --------------------------------------------------------------------------- fit


def cmd_fit(cache_dir, out_path, cfg: PipelineConfig, metadata=None, labels=None) -> dict:
    """Learn kernel weights and clusters, infer boundaries, write one JSON report."""
    trials, D, bank = prepare(cache_dir, cfg, metadata)
    ids = [t.trial_id for t in trials]
    ugs = [t.u_gs for t in trials]
    lam, stab = _resolve_lambda(bank, cfg)
    state = mkl_fit(bank, k=cfg.k, lam=lam, seed=cfg.seed, **_fit_kw(cfg))
    K_beta = blend(bank, state.beta)
    report = {
        "version": __version__,
        "config": cfg.snapshot(),
        "trial_ids": ids,
        "u_gs": ugs,
        "kernels": _bank_summary(bank),
        "lambda": lam,
        "beta": dict(zip(bank.modalities, state.beta)),
        "beta_history": [dict(zip(bank.modalities, b)) for b in state.beta_history],
        "labels": state.labels,
        "objective_history": state.objective_history,
        "iterations": state.iterations,
        "converged": state.converged,
        "seed": cfg.seed,
        "warnings": [],
    }
    if stab is not None:
        report["stability"] = _stability_dict(stab)
    try:
        report["separation"] = separation(K_beta, state.labels)
    except ValueError:
        report["separation"] = None
    ugs_active = dict(zip(bank.modalities, bank.active)).get("ugs", False)
    if ugs_active:
        b = monotone_partition(K_beta, ugs, ids)
        report["boundary"] = {
            "cut_indices": list(b.cut_indices),
            "boundaries": list(b.boundaries),
            "objective": b.objective,
            "labels": b.labels,
            "sorted_trial_ids": [ids[i] for i in b.order],
        }
        if cfg.wu_SC is not None:
            report["boundary"]["reference"] = [cfg.wu_SC, cfg.wu_CA]
            report["boundary"]["shifts_vs_reference"] = list(boundary_shifts(b, cfg.wu_SC, cfg.wu_CA))
    else:
        msg = "velocity kernel is degenerate; monotone boundary inference skipped"
        log.warning(msg)
        report["warnings"].append(msg)
        report["boundary"] = None
    if cfg.wu_SC is not None:
        ref = reference_labels(ugs, cfg.wu_SC, cfg.wu_CA)
        report["reference_eval"] = _eval(state.labels, ref, cfg.k)
    if labels is not None:
        truth = load_labels(labels, trials)
        report["truth_eval"] = _eval(state.labels, truth, max(cfg.k, int(truth.max()) + 1))
        if report["boundary"] is not None:
            report["truth_eval"]["boundary_ari"] = ari(report["boundary"]["labels"], truth)
    out_path = Path(out_path)
    write_json(out_path, report)
    stem = out_path.with_suffix("")
    for name, M in D.items():
        write_matrix_csv(f"{stem}.dist_{name}.csv", M, ids)
    for km in bank.kernels:
        write_matrix_csv(f"{stem}.kernel_{km.modality}.csv", km.values, ids)
    write_json(f"{stem}.kernels.json", _bank_summary(bank))
    return report


def _eval(pred, truth, k) -> dict:
    acc, C = accuracy_aligned(pred, truth, k)
    return {"ari": ari(pred, truth), "accuracy": acc, "confusion": C}


# --------------------------------------------------------------------------- stability


def cmd_lambda_select(cache_dir, out_path, cfg: PipelineConfig, metadata=None) -> dict:
    trials, _, bank = prepare(cache_dir, cfg, metadata)
    rep = select_lambda(bank, cfg.lambda_grid, cfg.stability_B, cfg.k, cfg.seed, **_fit_kw(cfg))
    report = {"version": __version__, "config": cfg.snapshot(), **_stability_dict(rep)}
    write_json(out_path, report)
    return report


def cmd_bootstrap(cache_dir, out_path, cfg: PipelineConfig, metadata=None, fit_report=None) -> dict:
    """Bootstrap stability against the reference fit; JSON report plus co-assignment CSV."""
    trials, _, bank = prepare(cache_dir, cfg, metadata)
    ids = [t.trial_id for t in trials]
    if fit_report is not None:
        prior = read_json(fit_report)
        if prior.get("trial_ids") != ids:
            raise DataError("fit report trials do not match the cache")
        reference = np.asarray(prior["labels"], dtype=np.int64)
        lam = float(prior["lambda"])
    else:
        lam, _ = _resolve_lambda(bank, cfg)
        reference = mkl_fit(bank, k=cfg.k, lam=lam, seed=cfg.seed, **_fit_kw(cfg)).labels
    rep = bootstrap_stability(
        bank, lam, ecs_kernel(bank), cfg.bootstrap_B, cfg.k, cfg.seed, reference=reference, **_fit_kw(cfg)
    )
    report = {
        "version": __version__,
        "config": cfg.snapshot(),
        "trial_ids": ids,
        "lambda": lam,
        "B": rep.B,
        "redraws": rep.redraws,
        "reference_labels": rep.reference_labels,
        "ari_samples": rep.ari_samples,
        "acc_samples": rep.acc_samples,
        "ari_mean": float(np.mean(rep.ari_samples)),
        "acc_mean": float(np.mean(rep.acc_samples)),
        "per_trial_stability": dict(zip(ids, rep.per_trial_stability)),
    }
    out_path = Path(out_path)
    write_json(out_path, report)
    write_matrix_csv(out_path.with_suffix("").as_posix() + ".coassignment.csv", rep.coassignment, ids)
    return report


# --------------------------------------------------------------------------- pseudo-trials


def cmd_pseudo_trials(image_dir, out_dir, group_size: int = 20, seed: int = 0) -> dict:
    """Shuffle each regime's still images and chunk them into fixed-size pseudo-trials.

    A trailing partial group is dropped. Writes ``<regime>_<j>/main/`` frame
    directories and ``labels.csv``.
    """
    image_dir, out_dir = Path(image_dir), Path(out_dir)
    regimes = sorted(p for p in image_dir.iterdir() if p.is_dir()) if image_dir.is_dir() else []
    if not regimes:
        raise DataError(f"no regime subdirectories under {image_dir}")
    counts, label_rows = {}, []
    for r_idx, rdir in enumerate(regimes):
        images = list_frames(rdir)
        if not images:
            raise DataError(f"regime directory {rdir} has no images")
        rng = np.random.default_rng(np.random.SeedSequence([seed, r_idx]))
        order = rng.permutation(len(images))
        n_groups = len(images) // group_size
        for g in range(n_groups):
            tid = f"{rdir.name}_{g:03d}"
            dest = out_dir / tid / "main"
            dest.mkdir(parents=True, exist_ok=True)
            for j, src_i in enumerate(order[g * group_size : (g + 1) * group_size]):
                src = images[src_i]
                shutil.copyfile(src, dest / f"frame_{j:03d}{src.suffix.lower()}")
            label_rows.append([tid, r_idx, rdir.name])
        counts[rdir.name] = n_groups
    write_csv(out_dir / "labels.csv", ["trial_id", "label", "regime"], label_rows)
    return counts


# --------------------------------------------------------------------------- report


def cmd_report(fit_jsons, out_dir) -> dict:
    """Tidy CSVs for plotting: weight evolution, boundary map points, bootstrap samples."""
    if not fit_jsons:
        raise DataError("no report files given")
    out_dir = Path(out_dir)
    weights, points, boots = [], [], []
    mods = None
    for run_id, path in enumerate(fit_jsons):
        rep = read_json(path)
        if not isinstance(rep, dict):
            raise DataError(f"{path}: not a report object")
        if "beta_history" in rep:
            try:
                hist = rep["beta_history"]
                obj = rep["objective_history"]
                mods = mods or list(hist[0])
                for it, b in enumerate(hist):
                    weights.append([run_id, Path(path).name, it, *(b[m] for m in mods), obj[min(it, len(obj) - 1)]])
                bl = rep["boundary"]["labels"] if rep.get("boundary") else [""] * len(rep["trial_ids"])
                for tid, u, lab, g in zip(rep["trial_ids"], rep["u_gs"], rep["labels"], bl):
                    points.append([run_id, tid, u, lab, g])
            except (KeyError, IndexError, TypeError) as exc:
                raise DataError(f"{path}: malformed fit report ({exc})") from exc
        elif "ari_samples" in rep:
            for b, (a, c) in enumerate(zip(rep["ari_samples"], rep["acc_samples"])):
                boots.append([run_id, b, a, c])
        else:
            raise DataError(f"{path}: neither a fit nor a bootstrap report")
    written = {}
    if weights:
        write_csv(out_dir / "weight_evolution.csv",
                  ["run_id", "source", "iteration", *(f"beta_{m}" for m in mods), "objective"], weights)
        write_csv(out_dir / "boundary_points.csv", ["run_id", "trial_id", "u_gs", "cluster", "group"], points)
        written["weight_evolution"] = len(weights)
        written["boundary_points"] = len(points)
    if boots:
        write_csv(out_dir / "bootstrap_samples.csv", ["run_id", "resample", "ari", "accuracy"], boots)
        written["bootstrap_samples"] = len(boots)
    return written
