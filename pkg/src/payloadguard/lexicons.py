"""Loaders for the checked-in keyword, attack and blueprint data files."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any

import yaml

from .model import ComponentRole, ComponentType, DomainKind


def _load(name: str) -> dict[str, Any]:
    text = resources.files("payloadguard.data").joinpath(name).read_text(encoding="utf-8")
    return yaml.safe_load(text)


@dataclass(frozen=True)
class KeywordLists:
    sensitive_keywords: tuple[str, ...]
    sensitive_binding_keywords: tuple[str, ...]
    risky_actions: tuple[str, ...]
    risky_label_stems: tuple[str, ...]


@dataclass(frozen=True)
class AttackLexicon:
    phishing_field_labels: tuple[str, ...]
    phishing_button_label: str
    phishing_button_action: str
    internal_paths: tuple[str, ...]
    benign_phrases: tuple[str, ...]
    risky_operations: tuple[str, ...]
    review_flag: str


@dataclass(frozen=True)
class Blueprint:
    domain: DomainKind
    component_count: tuple[int, int]
    root_types: tuple[ComponentType, ...]
    type_weights: dict[ComponentType, float]
    bind_probability: float
    labels: dict[ComponentRole, tuple[str, ...]]
    actions: tuple[tuple[str, str, float], ...]
    binding_fields: tuple[str, ...]


@lru_cache(maxsize=None)
def keyword_lists() -> KeywordLists:
    raw = _load("lexicons.yaml")
    return KeywordLists(
        sensitive_keywords=tuple(k.lower() for k in raw["sensitive_keywords"]),
        sensitive_binding_keywords=tuple(k.lower() for k in raw["sensitive_binding_keywords"]),
        risky_actions=tuple(raw["risky_actions"]),
        risky_label_stems=tuple(k.lower() for k in raw["risky_label_stems"]),
    )


@lru_cache(maxsize=None)
def attack_lexicon() -> AttackLexicon:
    raw = _load("lexicons.yaml")
    return AttackLexicon(
        phishing_field_labels=tuple(raw["phishing"]["field_labels"]),
        phishing_button_label=raw["phishing"]["button_label"],
        phishing_button_action=raw["phishing"]["button_action"],
        internal_paths=tuple(raw["data_leakage"]["internal_paths"]),
        benign_phrases=tuple(raw["manipulative_ui"]["benign_phrases"]),
        risky_operations=tuple(raw["manipulative_ui"]["risky_operations"]),
        review_flag=raw["workflow_anomaly"]["review_flag"],
    )


@lru_cache(maxsize=None)
def blueprints() -> dict[DomainKind, Blueprint]:
    raw = _load("blueprints.yaml")
    out = {}
    for name, bp in raw.items():
        domain = DomainKind(name)
        labels = {ComponentRole(role): tuple(items) for role, items in bp["labels"].items()}
        out[domain] = Blueprint(
            domain=domain,
            component_count=(int(bp["component_count"][0]), int(bp["component_count"][1])),
            root_types=tuple(ComponentType(t) for t in bp["root_types"]),
            type_weights={ComponentType(t): float(w) for t, w in bp["type_weights"].items()},
            bind_probability=float(bp["bind_probability"]),
            labels=labels,
            actions=tuple((a[0], a[1], float(a[2])) for a in bp["actions"]),
            binding_fields=tuple(bp["binding_fields"]),
        )
    missing = set(DomainKind) - set(out)
    if missing:
        raise ValueError(f"blueprints missing domains: {sorted(m.value for m in missing)}")
    return out
