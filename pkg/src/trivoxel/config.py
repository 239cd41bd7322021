"""Pipeline configuration: flat ``key = value`` text files with # comments.

Unknown keys are errors. Every key has a documented default (see DEFAULTS);
a config file only lists overrides. Desk-scale defaults: 32x32x8 grid,
D=16 channels, N=8 classes.
"""

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _parse_scales(s: str) -> tuple:
    out = []
    for part in s.split(","):
        part = part.strip()
        if "/" in part:
            num, den = part.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(part))
    return tuple(out)


@dataclass
class PipelineConfig:
    grid_h: int = 32
    grid_w: int = 32
    grid_l: int = 8
    voxel_size: float = 0.2
    n_classes: int = 8
    channels: int = 16
    temperature: float = 0.07
    sigma: float = 0.0
    scales: tuple = (1.0, 0.5)
    seed: int = 0
    n_state: int = 8
    image_height: int = 64
    image_width: int = 64
    n_boxes: int = 6
    ground: bool = True
    selective: bool = True
    bidirectional: bool = True
    gated: bool = True
    prenorm: bool = True
    share_tfm: bool = False
    merge: str = "add"
    output_conv_language: bool = True
    head: str = "calibrated"      # calibrated | seeded
    fuse: str = "identity"        # identity | seeded
    tfm_weights: str = "zero"     # zero | seeded
    output_conv: str = "identity" # identity | seeded
    vocab_file: str = ""
    out_dir: str = "out"

    def validate(self):
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative")
        if self.channels < self.n_classes:
            raise ConfigError("channels must be >= n_classes for orthonormal embeddings")
        if min(self.grid_h, self.grid_w, self.grid_l) < 1 or self.voxel_size <= 0:
            raise ConfigError("grid dims must be >= 1 and voxel_size positive")
        for name, allowed in (("head", ("calibrated", "seeded")),
                              ("fuse", ("identity", "seeded")),
                              ("tfm_weights", ("zero", "seeded")),
                              ("output_conv", ("identity", "seeded")),
                              ("merge", ("add", "concat"))):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}")
        if not self.scales or self.scales[0] != 1.0:
            raise ConfigError("scales must start at 1")
        return self


_PARSERS = {int: int, float: float, str: lambda s: s.strip(), bool: _parse_bool,
            tuple: _parse_scales}


def parse_config(text: str) -> PipelineConfig:
    cfg = PipelineConfig()
    types = {f.name: f.type for f in fields(PipelineConfig)}
    py_types = {f.name: type(getattr(cfg, f.name)) for f in fields(PipelineConfig)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _PARSERS[py_types[key]](value))
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return cfg.validate()


def load_config(path) -> PipelineConfig:
    with open(path) as f:
        return parse_config(f.read())
