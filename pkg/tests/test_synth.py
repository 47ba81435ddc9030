import numpy as np
import pytest

from ecsflow.boundary import boundary_midpoints
from ecsflow.features import amplitude_features, ugs_distance_matrix
from ecsflow.kernels import build_kernel
from ecsflow.metrics import reference_labels, spatial_variance
from ecsflow.synth import (
    SynthConfig,
    gen_annular,
    gen_churn,
    gen_dataset,
    gen_slug,
    generate,
    surface_from_frames,
    write_dataset,
)
from ecsflow.topology import euler_char, to_hex


def _chi0(frames):
    return np.array([euler_char(to_hex(f)) for f in frames])


def _surfaces(regime, seeds=range(3)):
    return [surface_from_frames(generate(SynthConfig(regime=regime, seed=s))).astype(float) for s in seeds]


@pytest.mark.parametrize("gen", [gen_slug, gen_churn, gen_annular])
def test_deterministic(gen):
    cfg = SynthConfig(seed=11)
    a, b = gen(cfg), gen(cfg)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert len(a) == cfg.T and a[0].shape == (cfg.height, cfg.width) and a[0].dtype == bool


def test_different_seeds_differ():
    a = gen_churn(SynthConfig(regime="churn", seed=1))
    b = gen_churn(SynthConfig(regime="churn", seed=2))
    assert any(not np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize(
    "kw", [dict(width=4), dict(T=0), dict(regime="bubbly"), dict(liquid_frames=10), dict(clear_frames=9)]
)
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        generate(SynthConfig(**kw))


def test_slug_periodicity():
    P = SynthConfig().bubble_period
    chi = _chi0(gen_slug(SynthConfig(T=60, seed=4))).astype(float)
    x = chi - chi.mean()
    ac = np.array([np.dot(x[:-lag], x[lag:]) / np.dot(x, x) for lag in range(1, 16)])
    assert int(np.argmax(ac)) + 1 == P


def test_slug_sign_tendency():
    cfg = SynthConfig(seed=3)
    frames = gen_slug(cfg)
    chi = _chi0(frames)
    # a bubble frame is one where a single black component spans most of the width
    wide = np.array([f.any(axis=0).mean() > 0.8 and f.sum() > 0.2 * f.size for f in frames])
    assert wide.any() and (~wide).any()
    assert chi[wide].mean() < 0 < chi[~wide].mean()


def test_slug_bubble_spans_width():
    frames = gen_slug(SynthConfig(seed=0))
    assert max(f.any(axis=0).mean() for f in frames) >= 0.8


def test_temporal_variance_ordering():
    slug, churn, ann = (_surfaces(r) for r in ("slug", "churn", "annular"))
    s_std = np.mean([E.std(axis=0) for E in slug], axis=0)
    c_std = np.mean([E.std(axis=0) for E in churn], axis=0)
    a_std = np.mean([E.std(axis=0) for E in ann], axis=0)
    assert (a_std < s_std).all()
    assert a_std.mean() < c_std.mean() < s_std.mean()


def test_churn_spatial_variance_exceeds_slug():
    sv = {r: np.mean([spatial_variance(row) for E in _surfaces(r) for row in E]) for r in ("slug", "churn")}
    assert sv["churn"] > sv["slug"]


def test_annular_positive_at_zero_scale():
    assert (_chi0(gen_annular(SynthConfig(regime="annular"))) > 0).all()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_amplitude_separability(seed):
    trials, y = gen_dataset(4, seed=seed)
    X = np.array([amplitude_features(t.ecs) for t in trials])
    cents = np.array([X[y == r].mean(axis=0) for r in range(3)])
    spread = max(np.sqrt(((X[y == r] - cents[r]) ** 2).sum(axis=1).mean()) for r in range(3))
    gap = min(np.linalg.norm(cents[a] - cents[b]) for a in range(3) for b in range(a + 1, 3))
    assert gap > 3 * spread


def test_dataset_ordering_and_reference(synth12):
    trials, y = synth12
    u = np.array([t.u_gs for t in trials])
    assert (np.diff(u) > 0).all() and y.tolist() == [0] * 4 + [1] * 4 + [2] * 4
    b_sc, b_ca = boundary_midpoints(u, 5, 9)
    assert np.array_equal(reference_labels(u, b_sc, b_ca), y)
    assert trials[0].ecs.shape == (40, 30) and trials[0].ecs.min() >= 0 and trials[0].ecs.max() <= 1


def test_constant_ugs_degenerate():
    trials, _ = gen_dataset(1, constant_ugs=10.0, base=SynthConfig(T=6))
    assert build_kernel(ugs_distance_matrix([t.u_gs for t in trials])).degenerate


def test_dataset_errors():
    with pytest.raises(ValueError):
        gen_dataset(0)
    with pytest.raises(ValueError):
        gen_dataset(1, ugs_ranges={"slug": (1, 10), "churn": (5, 12), "annular": (15, 20)})


def test_write_dataset_layout(tmp_path):
    trials, y, frames = gen_dataset(1, n_positions=2, base=SynthConfig(T=3), return_frames=True)
    root = write_dataset(tmp_path, trials, y, frames)
    pgms = sorted(root.glob("*/*/*.pgm"))
    assert len(pgms) == 3 * 2 * 3
    assert pgms[0].read_bytes().startswith(b"P5\n64 96\n255\n")
    assert (root / "labels.csv").read_text().splitlines()[0] == "trial_id,label,regime"
