import numpy as np
import pytest

from ecsflow import _backend, _hexcore_py


@pytest.fixture(params=["default", "python"])
def backend(request, monkeypatch):
    """Run a test against the selected core and against the pure-Python one."""
    if request.param == "python":
        monkeypatch.setattr(_backend, "dilate_step", _hexcore_py.dilate_step)
        monkeypatch.setattr(_backend, "count_both", _hexcore_py.count_both)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth12():
    from ecsflow.synth import gen_dataset

    return gen_dataset(4, seed=0)


@pytest.fixture(scope="session")
def synth_bank(synth12):
    from ecsflow.features import amplitude_distance_matrix, amplitude_features, pairwise_ecs_distance, robust_scale, ugs_distance_matrix
    from ecsflow.kernels import build_kernel_bank

    trials, _ = synth12
    D = {
        "ecs": pairwise_ecs_distance(trials),
        "amp": amplitude_distance_matrix(robust_scale(np.array([amplitude_features(t.ecs) for t in trials]))),
        "ugs": ugs_distance_matrix([t.u_gs for t in trials]),
    }
    return build_kernel_bank(D)
