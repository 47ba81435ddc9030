import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ecsflow import _backend, _hexcore_py

try:
    from ecsflow import _hexcore
except ImportError:  # pragma: no cover
    _hexcore = None

needs_ext = pytest.mark.skipif(_hexcore is None, reason="compiled core not built")
masks = arrays(np.bool_, st.tuples(st.integers(1, 20), st.integers(1, 20)))


@needs_ext
@settings(max_examples=150, deadline=None)
@given(masks)
def test_compiled_matches_python(img):
    assert tuple(_hexcore.count_both(img)) == tuple(_hexcore_py.count_both(img))
    assert np.array_equal(_hexcore.dilate_step(img), _hexcore_py.dilate_step(img))


@needs_ext
def test_compiled_accepts_views():
    img = np.random.default_rng(0).random((20, 30)) < 0.4
    view = img[::2, 1::3]
    assert tuple(_hexcore.count_both(view)) == tuple(_hexcore_py.count_both(view))
    assert np.array_equal(_hexcore.dilate_step(view), _hexcore_py.dilate_step(view))


def test_empty_lattice():
    for mod in filter(None, (_hexcore, _hexcore_py)):
        assert tuple(mod.count_both(np.zeros((0, 0), bool))) == (0, 0)


def test_env_var_forces_python():
    env = dict(os.environ, ECSFLOW_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import ecsflow; print(ecsflow.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"


def test_backend_reported():
    assert _backend.BACKEND in ("cython", "python")
    if _hexcore is not None and not os.environ.get("ECSFLOW_PURE_PYTHON"):
        assert _backend.BACKEND == "cython"
