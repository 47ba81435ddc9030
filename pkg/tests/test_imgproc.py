import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from ecsflow.imgproc import (
    DegenerateImageError,
    adaptive_crop,
    downsample,
    list_frames,
    load_image,
    sample_frames,
    threshold_fixed,
    threshold_otsu,
    to_grayscale,
)


def test_grayscale_examples():
    rgb = np.array([[[1, 1, 1], [0, 0, 0], [0.3, 0.6, 0.9]]], dtype=float)
    assert to_grayscale(rgb) == pytest.approx(np.array([[1.0, 0.0, 0.6]]))


def test_grayscale_channel_list_and_mismatch():
    ch = np.full((2, 2), 0.5)
    assert np.allclose(to_grayscale([ch, ch, ch]), 0.5)
    with pytest.raises(ValueError):
        to_grayscale([ch, ch, np.zeros((3, 2))])


def test_threshold_fixed_examples():
    assert not threshold_fixed(np.full((3, 3), 0.9)).any()
    assert threshold_fixed(np.full((3, 3), 0.1)).all()
    assert threshold_fixed(np.array([[0.59, 0.60, 0.61]])).tolist() == [[True, False, False]]


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.2, 1.5])
def test_threshold_fixed_rejects_tau(tau):
    with pytest.raises(ValueError):
        threshold_fixed(np.zeros((2, 2)), tau)


def test_threshold_invert():
    img = np.array([[0.1, 0.9]])
    assert threshold_fixed(img, invert=True).tolist() == [[False, True]]


def test_otsu_bimodal():
    img = np.concatenate([np.full((4, 8), 0.2), np.full((4, 8), 0.8)])
    mask, tau = threshold_otsu(img)
    assert 0.2 < tau <= 0.8
    assert mask[:4].all() and not mask[4:].any()


def test_otsu_alternating():
    img = np.indices((6, 6)).sum(axis=0) % 2 * 1.0
    mask, _ = threshold_otsu(img)
    assert np.array_equal(mask, img == 0.0)


def test_otsu_constant_image():
    with pytest.raises(DegenerateImageError):
        threshold_otsu(np.full((5, 5), 0.4))


@given(arrays(np.float64, (6, 7), elements=st.floats(0, 1)))
def test_otsu_mask_is_proper_subset(img):
    if np.ptp(img) < 1e-2:
        return
    mask, tau = threshold_otsu(img)
    # intensities on both sides of tau -> neither empty nor full
    if (img < tau).any() and (img >= tau).any():
        assert 0 < mask.sum() < mask.size


def test_crop_examples():
    assert adaptive_crop(np.zeros((10, 400)), (0.25, 0, 0.75, 1)).shape == (10, 400)
    assert adaptive_crop(np.zeros((10, 800)), (0.25, 0, 0.75, 1)).shape == (10, 400)
    assert adaptive_crop(np.zeros((10, 501)), (0.25, 0, 0.75, 1)).shape[1] < 501
    assert adaptive_crop(np.zeros((10, 500)), (0.25, 0, 0.75, 1)).shape == (10, 500)


def test_crop_degenerate_box():
    with pytest.raises(ValueError):
        adaptive_crop(np.zeros((10, 800)), (0.5, 0, 0.5, 1))


def test_downsample_examples():
    img = np.random.default_rng(0).random((30, 120))
    assert np.array_equal(downsample(img, 120), img)
    assert downsample(np.zeros((240, 240)), 120).shape == (120, 120)
    assert downsample(np.array([[0.0, 0.0], [1.0, 1.0]]), 1) == pytest.approx(np.array([[0.5]]))
    with pytest.raises(ValueError):
        downsample(img, 121)


@settings(max_examples=30)
@given(st.integers(4, 40), st.integers(4, 40), st.data())
def test_downsample_preserves_mean_and_is_idempotent(h, w, data):
    img = np.random.default_rng(h * 100 + w).random((h, w))
    tw = data.draw(st.integers(1, w))
    out = downsample(img, tw)
    assert out.shape[1] == tw
    assert out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12
    assert np.array_equal(downsample(out, tw), out)


def test_sample_frames_examples():
    frames = list(range(100))
    assert sample_frames(frames, fps=30) == list(range(0, 100, 9))
    assert len(sample_frames(frames, fps=30)) == 12
    assert sample_frames(frames[:5], fps=2) == frames[:5]
    with pytest.raises(ValueError):
        sample_frames([], fps=30)


def test_load_image_modes(tmp_path):
    rgb = np.zeros((4, 5, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    Image.fromarray(rgb).save(tmp_path / "a.png")
    Image.fromarray(np.full((4, 5), 128, dtype=np.uint8)).save(tmp_path / "b.pgm")
    assert load_image(tmp_path / "a.png") == pytest.approx(np.full((4, 5), 1 / 3))
    assert load_image(tmp_path / "b.pgm") == pytest.approx(np.full((4, 5), 128 / 255))
    (tmp_path / "c.png").write_bytes(b"not an image")
    with pytest.raises(OSError, match="c.png"):
        load_image(tmp_path / "c.png")
    (tmp_path / "notes.txt").write_text("x")
    assert [p.name for p in list_frames(tmp_path)] == ["a.png", "b.pgm", "c.png"]
