"""Pipeline configuration: ``key = value`` text files with command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    tau: float = 0.6
    S: int = 30
    k_max: int = 25
    k: int = 3
    lam: float | str = 0.1  # a float or "auto"
    lambda_grid: tuple = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0)
    n_init: int = 20
    kmeans_restarts: int = 20
    eps: float = 1e-6
    max_iter: int = 100
    bootstrap_B: int = 500
    stability_B: int = 50
    trace_norm: bool = True
    seed: int = 0
    wu_SC: float | None = None
    wu_CA: float | None = None
    threshold_mode: str = "fixed"
    invert: bool = False
    pseudo_trial_size: int = 20
    fps: float | None = None
    stride_seconds: float = 0.3
    crop_box: tuple = (0.0, 0.0, 1.0, 1.0)
    crop_min_width: int = 500
    downsample_width: int = 0  # 0 keeps full resolution
    scfm_pattern: str = r"(\d+(?:\.\d+)?)\s*scfm"
    default_scfm: float | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self) -> "PipelineConfig":
        checks = [
            (0 < self.tau < 1, "tau must lie in (0, 1)"),
            (self.S >= 1, "S must be >= 1"),
            (self.k_max >= 0, "k_max must be >= 0"),
            (self.k >= 2, "k must be >= 2"),
            (self.lam == "auto" or (isinstance(self.lam, float) and self.lam > 0), "lam must be > 0 or 'auto'"),
            (len(self.lambda_grid) >= 1 and all(g > 0 for g in self.lambda_grid), "lambda_grid must be positive"),
            (self.n_init >= 1 and self.kmeans_restarts >= 1, "restart counts must be >= 1"),
            (self.eps > 0, "eps must be > 0"),
            (self.max_iter >= 1, "max_iter must be >= 1"),
            (self.bootstrap_B >= 1 and self.stability_B >= 1, "resample counts must be >= 1"),
            (self.threshold_mode in ("fixed", "otsu"), "threshold_mode must be fixed or otsu"),
            (self.pseudo_trial_size >= 1, "pseudo_trial_size must be >= 1"),
            (self.fps is None or self.fps > 0, "fps must be > 0"),
            (self.downsample_width >= 0, "downsample_width must be >= 0"),
            (len(self.crop_box) == 4, "crop_box needs four fractions"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if (self.wu_SC is None) != (self.wu_CA is None):
            raise ConfigError("set both wu_SC and wu_CA or neither")
        if self.wu_SC is not None and not self.wu_SC < self.wu_CA:
            raise ConfigError("wu_SC must be below wu_CA")
        return self

    def snapshot(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("extra")
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def set(self, key: str, raw: str) -> None:
        key = {"lambda": "lam"}.get(key, key)
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields or key == "extra":
            raise ConfigError(f"unknown config key {key!r}")
        setattr(self, key, _coerce(key, raw, getattr(PipelineConfig(), key)))


def _coerce(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if key == "lam":
            return "auto" if raw.lower() == "auto" else float(raw)
        if key in ("wu_SC", "wu_CA", "fps", "default_scfm"):
            return None if raw.lower() in ("", "none") else float(raw)
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> PipelineConfig:
    """Read ``key = value`` lines (``#`` comments allowed), then apply ``key=value`` overrides."""
    cfg = PipelineConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            cfg.set(k.strip(), v)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        cfg.set(k.strip(), v)
    return cfg.validate()
