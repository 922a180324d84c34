"""Run configuration: one YAML file plus a global seed drives every stage.

Every field has a default equal to the experiment's published setting, so
an empty config file reproduces the reference run. ``PipelineConfig`` is
round-trippable through ``to_dict``/``from_dict`` and is archived beside
the outputs as ``run_config.yaml``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .model import AttackKind, DomainKind

DEFAULT_ATTACK_MIX = {
    AttackKind.WORKFLOW_ANOMALY.value: 258.0,
    AttackKind.PHISHING_INTERFACE.value: 232.0,
    AttackKind.DATA_LEAKAGE.value: 228.0,
    AttackKind.MANIPULATIVE_UI.value: 207.0,
    AttackKind.LAYOUT_ABUSE.value: 75.0,
}


class ConfigError(ValueError):
    pass


@dataclass
class GeneratorConfig:
    seed: int = 1337
    component_count_range: tuple[int, int] = (5, 40)
    depth_range: tuple[int, int] = (1, 5)
    session_length_range: tuple[int, int] = (1, 3)
    domain_weights: dict[str, float] = field(
        default_factory=lambda: {d.value: 1.0 for d in DomainKind}
    )
    max_retries: int = 25
    # benign-label validation bound; malicious payloads use the relaxed one below
    malicious_depth_max: int = 14
    rejection_cap: float = 0.05

    def validate(self) -> None:
        for name in ("component_count_range", "depth_range", "session_length_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 1:
                raise ConfigError(f"generator.{name} must satisfy 1 <= min <= max, got {[lo, hi]}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        unknown = set(self.domain_weights) - {d.value for d in DomainKind}
        if unknown:
            raise ConfigError(f"unknown domains in domain_weights: {sorted(unknown)}")
        if not self.domain_weights or any(w <= 0 for w in self.domain_weights.values()):
            raise ConfigError("domain weights must be positive")
        if self.malicious_depth_max < self.depth_range[1]:
            raise ConfigError("malicious_depth_max must not be below the benign depth bound")
        if not 0 <= self.rejection_cap <= 1:
            raise ConfigError("rejection_cap must be within [0, 1]")


@dataclass
class IsolationForestParams:
    n_trees: int = 300
    max_samples: int = 256
    threshold: float = 0.5


@dataclass
class AutoencoderParams:
    hidden: tuple[int, ...] = (16, 8, 16)
    epochs: int = 80
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    threshold_percentile: float = 95.0


@dataclass
class RandomForestParams:
    n_trees: int = 400
    max_features: int = 5
    min_samples_leaf: int = 1
    max_depth: int | None = None
    threshold: float = 0.5


@dataclass
class ModelParams:
    isolation_forest: IsolationForestParams = field(default_factory=IsolationForestParams)
    autoencoder: AutoencoderParams = field(default_factory=AutoencoderParams)
    random_forest: RandomForestParams = field(default_factory=RandomForestParams)


@dataclass
class PipelineConfig:
    seed: int = 1337
    n_benign: int = 3000
    n_malicious: int = 1000
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    attack_mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_ATTACK_MIX))
    models: ModelParams = field(default_factory=ModelParams)
    test_fraction: float = 0.2
    output_dir: str = "runs/default"
    plots: bool = True

    def __post_init__(self) -> None:
        # the global seed is authoritative; the generator sees the same value
        self.generator.seed = self.seed

    def validate(self) -> None:
        self.generator.validate()
        if self.n_benign < 0 or self.n_malicious < 0:
            raise ConfigError("counts must be non-negative")
        if self.n_malicious > self.n_benign:
            raise ConfigError("each malicious payload needs its own benign source: counts.malicious <= counts.benign")
        unknown = set(self.attack_mix) - {k.value for k in AttackKind}
        if unknown:
            raise ConfigError(f"unknown attack kinds in attack mix: {sorted(unknown)}")
        if any(w < 0 for w in self.attack_mix.values()) or not any(
            w > 0 for w in self.attack_mix.values()
        ):
            raise ConfigError("attack mix weights must be non-negative with at least one positive")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must be within (0, 1)")

    def to_dict(self) -> dict[str, Any]:
        g = self.generator
        return {
            "seed": self.seed,
            "counts": {"benign": self.n_benign, "malicious": self.n_malicious},
            "generator": {
                "component_count_range": list(g.component_count_range),
                "depth_range": list(g.depth_range),
                "session_length_range": list(g.session_length_range),
                "domain_weights": dict(g.domain_weights),
                "max_retries": g.max_retries,
                "malicious_depth_max": g.malicious_depth_max,
                "rejection_cap": g.rejection_cap,
            },
            "attacks": {"mix": dict(self.attack_mix)},
            "models": {
                "isolation_forest": dataclasses.asdict(self.models.isolation_forest),
                "autoencoder": {
                    **dataclasses.asdict(self.models.autoencoder),
                    "hidden": list(self.models.autoencoder.hidden),
                },
                "random_forest": dataclasses.asdict(self.models.random_forest),
            },
            "split": {"test_fraction": self.test_fraction},
            "output": {"dir": self.output_dir, "plots": self.plots},
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any] | None) -> "PipelineConfig":
        raw = dict(raw or {})
        _check_keys(raw, {"seed", "counts", "generator", "attacks", "models", "split", "output"}, "")
        counts = raw.get("counts", {}) or {}
        _check_keys(counts, {"benign", "malicious"}, "counts")
        gen_raw = dict(raw.get("generator", {}) or {})
        gen = _build(GeneratorConfig, gen_raw, "generator", skip={"seed"})
        attacks = raw.get("attacks", {}) or {}
        _check_keys(attacks, {"mix"}, "attacks")
        models_raw = raw.get("models", {}) or {}
        _check_keys(models_raw, {"isolation_forest", "autoencoder", "random_forest"}, "models")
        models = ModelParams(
            isolation_forest=_build(IsolationForestParams, models_raw.get("isolation_forest"), "models.isolation_forest"),
            autoencoder=_build(AutoencoderParams, models_raw.get("autoencoder"), "models.autoencoder"),
            random_forest=_build(RandomForestParams, models_raw.get("random_forest"), "models.random_forest"),
        )
        split = raw.get("split", {}) or {}
        _check_keys(split, {"test_fraction"}, "split")
        output = raw.get("output", {}) or {}
        _check_keys(output, {"dir", "plots"}, "output")
        mix = dict(DEFAULT_ATTACK_MIX)
        if "mix" in attacks:
            mix = {str(k): float(v) for k, v in attacks["mix"].items()}
        try:
            cfg = cls(
                seed=int(raw.get("seed", 1337)),
                n_benign=int(counts.get("benign", 3000)),
                n_malicious=int(counts.get("malicious", 1000)),
                generator=gen,
                attack_mix=mix,
                models=models,
                test_fraction=float(split.get("test_fraction", 0.2)),
                output_dir=str(output.get("dir", "runs/default")),
                plots=bool(output.get("plots", True)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg


def _check_keys(raw: Any, allowed: set[str], where: str) -> None:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping")
    unknown = set(raw) - allowed
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown config keys: {sorted(prefix + k for k in unknown)}")


def _build(cls, raw: dict[str, Any] | None, where: str, skip: set[str] = frozenset()):
    raw = dict(raw or {})
    names = {f.name for f in dataclasses.fields(cls)} - set(skip)
    _check_keys(raw, names, where)
    defaults = cls()
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in raw:
            continue
        value = raw[f.name]
        current = getattr(defaults, f.name)
        try:
            if isinstance(current, tuple):
                value = tuple(int(v) for v in value)
            elif isinstance(current, bool):
                value = bool(value)
            elif isinstance(current, int) and value is not None:
                value = int(value)
            elif isinstance(current, float):
                value = float(value)
            elif isinstance(current, dict):
                value = {str(k): float(v) for k, v in value.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.{f.name}: {exc}") from exc
        kwargs[f.name] = value
    return cls(**kwargs)


def load_config(path: str | Path | None, seed: int | None = None, out: str | None = None) -> PipelineConfig:
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = PipelineConfig.from_dict(raw)
    if seed is not None:
        cfg.seed = int(seed)
        cfg.generator.seed = cfg.seed
    if out is not None:
        cfg.output_dir = str(out)
    cfg.validate()
    return cfg


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)
