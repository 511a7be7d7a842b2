"""Run configuration (defaults < config file < command line) and manifests."""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .tm import ConfigError

MANIFEST_VERSION = 1
CODE_VERSION = "0.1.0"


@dataclass
class RunConfig:
    # machine
    num_clauses: int = 20
    threshold_T: int = 15
    specificity_s: float = 2.0
    state_depth_n: int = 50
    d_period: int = 1
    fb2_polarity: str = "paper"
    empty_clause_mode: str = "split"
    skip_policy: str = "pattern"
    # run
    seed: int = 0
    epochs: int = 50
    snapshot_epochs: list[int] = field(default_factory=lambda: [0, 4, 50])
    dataset: str = ""  # empty: bundled Iris table
    label_column: int = -1
    target_class: int = 0
    split_seed: int = 0
    train_fraction: float = 0.8
    # latency
    delay_table: dict[str, float] = field(default_factory=dict)
    combiner: str = "chain"
    adder_cells: str = "gates"
    trials: int = 10_000

    def tm_kwargs(self):
        keys = ("num_clauses", "threshold_T", "specificity_s", "state_depth_n", "d_period",
                "fb2_polarity", "empty_clause_mode", "skip_policy", "seed")
        return {k: getattr(self, k) for k in keys}

    def to_dict(self):
        return asdict(self)


SECTIONS = {
    "tm": ("num_clauses", "threshold_T", "specificity_s", "state_depth_n", "d_period",
           "fb2_polarity", "empty_clause_mode", "skip_policy"),
    "run": ("seed", "epochs", "snapshot_epochs", "dataset", "label_column", "target_class",
            "split_seed", "train_fraction"),
    "latency": ("delay_table", "combiner", "adder_cells", "trials"),
}


def parse_int_list(text):
    text = str(text).strip()
    if not text:
        return []
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected a list of integers, got {text!r}") from None


def parse_delay_table(text):
    """``"AND2=1, FA=2"`` -> ``{"AND2": 1.0, "FA": 2.0}``."""
    table = {}
    for item in str(text).replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"delay table entry {item!r} is not KIND=DELAY")
        try:
            table[key.strip().upper()] = float(value)
        except ValueError:
            raise ConfigError(f"delay for {key.strip()!r} is not a number") from None
    return table


def _coerce(name, value):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if name == "snapshot_epochs":
        return value if isinstance(value, list) else parse_int_list(value)
    if name == "delay_table":
        return value if isinstance(value, dict) else parse_delay_table(value)
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{name}: cannot convert {value!r} to {kind}") from None
    return str(value)


def read_config_file(path):
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep threshold_T's case
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path}")
    values = {}
    for section in parser.sections():
        allowed = SECTIONS.get(section)
        if allowed is None:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            values[key] = _coerce(key, raw)
    return values


def resolve(config_path=None, overrides=None) -> RunConfig:
    """Defaults, then the config file, then non-None ``overrides``."""
    cfg = RunConfig()
    layers = []
    if config_path:
        layers.append(read_config_file(config_path))
    layers.append({k: _coerce(k, v) for k, v in (overrides or {}).items() if v is not None})
    for layer in layers:
        for key, value in layer.items():
            setattr(cfg, key, value)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    from .drsim.sim import delay_model
    from .tm import TmConfig

    TmConfig(num_features=1, **cfg.tm_kwargs()).validate()
    if cfg.epochs < 0:
        raise ConfigError("epochs must be >= 0")
    if any(e < 0 for e in cfg.snapshot_epochs):
        raise ConfigError("snapshot epochs must be >= 0")
    if not 0.0 < cfg.train_fraction < 1.0:
        raise ConfigError("train_fraction must lie in (0, 1)")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.combiner not in ("chain", "tree"):
        raise ConfigError(f"unknown combiner {cfg.combiner!r}")
    if cfg.adder_cells not in ("gates", "macro"):
        raise ConfigError(f"unknown adder cells {cfg.adder_cells!r}")
    try:
        delay_model(cfg.delay_table)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


# --- manifests -------------------------------------------------------------

def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    arguments: dict = field(default_factory=dict)  # command-specific inputs
    inputs: dict = field(default_factory=dict)  # input file -> sha256
    outputs: dict = field(default_factory=dict)  # output file (relative) -> sha256
    code_version: str = CODE_VERSION
    version: int = MANIFEST_VERSION

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("version") != MANIFEST_VERSION:
            raise ConfigError(f"unsupported manifest version {data.get('version')!r}")
        return cls(**data)
