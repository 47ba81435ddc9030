import pytest

from ecsflow.config import ConfigError, PipelineConfig, load_config


def test_defaults():
    cfg = load_config()
    assert (cfg.tau, cfg.S, cfg.k_max, cfg.k, cfg.lam) == (0.6, 30, 25, 3, 0.1)
    assert cfg.eps == 1e-6 and cfg.bootstrap_B == 500 and cfg.pseudo_trial_size == 20
    assert cfg.lambda_grid == (0.01, 0.05, 0.1, 0.5, 1.0, 5.0)
    assert cfg.wu_SC is None and cfg.wu_CA is None


def test_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\ntau = 0.5\nlambda = auto  # trailing\ntrace_norm = off\nlambda_grid = 0.1, 1\n\nwu_SC = 5.27\nwu_CA = 18\n")
    cfg = load_config(p, ["tau=0.4", "seed=9"])
    assert cfg.tau == 0.4 and cfg.seed == 9 and cfg.lam == "auto"
    assert cfg.trace_norm is False and cfg.lambda_grid == (0.1, 1.0)
    assert (cfg.wu_SC, cfg.wu_CA) == (5.27, 18.0)


@pytest.mark.parametrize(
    "override",
    [
        "tau=1.5",
        "tau=abc",
        "k=1",
        "lambda=-1",
        "nosuch=1",
        "threshold_mode=magic",
        "wu_SC=5",
        "trace_norm=maybe",
        "eps=0",
        "S=0",
    ],
)
def test_bad_values(override):
    with pytest.raises(ConfigError):
        load_config(None, [override])


def test_bad_reference_order():
    with pytest.raises(ConfigError):
        load_config(None, ["wu_SC=9", "wu_CA=5"])


def test_bad_file(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("tau 0.5\n")
    with pytest.raises(ConfigError, match="bad.cfg:1"):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        load_config(None, ["novalue"])


def test_snapshot_plain_types():
    snap = PipelineConfig().snapshot()
    assert "extra" not in snap and isinstance(snap["lambda_grid"], list)
