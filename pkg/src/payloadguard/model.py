"""UI protocol payload data model, canonical serialization and parsing.

A payload is a flat list of components linked into a tree by ``parent_id``,
plus data bindings and session identity. The canonical byte form is UTF-8
JSON with sorted keys and no insignificant whitespace, which makes
byte-level determinism checks and ``payload_size_bytes`` well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Union

Scalar = Union[str, int, float, bool]


class DomainKind(str, Enum):
    BOOKING_ASSISTANT = "booking_assistant"
    E_COMMERCE = "e_commerce"
    ANALYTICS_DASHBOARD = "analytics_dashboard"
    FORM_SUBMISSION = "form_submission"
    WORKFLOW_APPROVAL = "workflow_approval"


class ComponentType(str, Enum):
    BUTTON = "Button"
    TEXT_FIELD = "TextField"
    CARD = "Card"
    TABLE = "Table"
    FORM = "Form"
    MODAL = "Modal"
    DROPDOWN = "Dropdown"
    CHECKBOX = "Checkbox"
    LABEL = "Label"
    CHART = "Chart"


class ComponentRole(str, Enum):
    CONTAINER = "container"
    ACTION = "action"
    INPUT = "input"
    DISPLAY = "display"


class AttackKind(str, Enum):
    PHISHING_INTERFACE = "phishing_interface"
    DATA_LEAKAGE = "data_leakage"
    LAYOUT_ABUSE = "layout_abuse"
    MANIPULATIVE_UI = "manipulative_ui"
    WORKFLOW_ANOMALY = "workflow_anomaly"


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


# The role a component of each type plays when the generator creates it.
DEFAULT_ROLE: dict[ComponentType, ComponentRole] = {
    ComponentType.BUTTON: ComponentRole.ACTION,
    ComponentType.TEXT_FIELD: ComponentRole.INPUT,
    ComponentType.DROPDOWN: ComponentRole.INPUT,
    ComponentType.CHECKBOX: ComponentRole.INPUT,
    ComponentType.CARD: ComponentRole.CONTAINER,
    ComponentType.FORM: ComponentRole.CONTAINER,
    ComponentType.MODAL: ComponentRole.CONTAINER,
    ComponentType.LABEL: ComponentRole.DISPLAY,
    ComponentType.TABLE: ComponentRole.DISPLAY,
    ComponentType.CHART: ComponentRole.DISPLAY,
}

TOP_LEVEL_FIELDS = (
    "payload_id",
    "session_id",
    "timestamp",
    "domain",
    "schema_version",
    "components",
    "bindings",
    "sequence_index",
    "metadata",
)

SCHEMA_VERSION = "1.0"


class PayloadError(ValueError):
    """Base class for payload decoding failures."""


class PayloadParseError(PayloadError):
    """Input is not well-formed UTF-8 JSON."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class PayloadSchemaError(PayloadError):
    """Required fields are missing or have the wrong JSON type."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = list(fields or [])


class PayloadDomainError(PayloadError):
    """An enumerated field holds a value outside its closed vocabulary."""

    def __init__(self, enum_name: str, field_name: str, value: Any):
        super().__init__(f"{field_name}: {value!r} is not a valid {enum_name}")
        self.enum_name = enum_name
        self.field_name = field_name
        self.value = value


@dataclass(frozen=True)
class UIComponent:
    component_id: str
    component_type: ComponentType
    role: ComponentRole
    label_text: str = ""
    properties: dict[str, Scalar] = field(default_factory=dict)
    action: str | None = None
    parent_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "component_id": self.component_id,
            "component_type": self.component_type.value,
            "role": self.role.value,
            "label_text": self.label_text,
            "properties": dict(self.properties),
        }
        if self.action is not None:
            out["action"] = self.action
        if self.parent_id is not None:
            out["parent_id"] = self.parent_id
        return out


@dataclass(frozen=True)
class DataBinding:
    component_id: str
    source_path: str

    def to_dict(self) -> dict[str, Any]:
        return {"component_id": self.component_id, "source_path": self.source_path}


@dataclass(frozen=True)
class SessionMeta:
    session_id: str
    timestamp: int
    sequence_index: int


@dataclass(frozen=True)
class AttackTrace:
    attack_type: AttackKind
    source_payload_id: str
    injected_component_ids: tuple[str, ...] = ()
    modified_component_ids: tuple[str, ...] = ()
    severity: Severity = Severity.HIGH

    def to_dict(self) -> dict[str, Any]:
        return {
            "attack_type": self.attack_type.value,
            "source_payload_id": self.source_payload_id,
            "injected_component_ids": list(self.injected_component_ids),
            "modified_component_ids": list(self.modified_component_ids),
            "severity": self.severity.value,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "AttackTrace":
        return cls(
            attack_type=_enum(AttackKind, raw["attack_type"], "attack_trace.attack_type"),
            source_payload_id=str(raw["source_payload_id"]),
            injected_component_ids=tuple(raw.get("injected_component_ids", ())),
            modified_component_ids=tuple(raw.get("modified_component_ids", ())),
            severity=_enum(Severity, raw.get("severity", "high"), "attack_trace.severity"),
        )


@dataclass(frozen=True)
class UIPayload:
    payload_id: str
    session_id: str
    timestamp: int
    domain: DomainKind
    schema_version: str
    components: tuple[UIComponent, ...]
    bindings: tuple[DataBinding, ...]
    sequence_index: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.metadata.get("label", "benign")

    @property
    def is_malicious(self) -> bool:
        return self.label == "malicious"

    @property
    def attack_trace(self) -> AttackTrace | None:
        raw = self.metadata.get("attack_trace")
        return AttackTrace.from_dict(raw) if raw else None

    @property
    def session(self) -> SessionMeta:
        return SessionMeta(self.session_id, self.timestamp, self.sequence_index)

    def component(self, component_id: str) -> UIComponent:
        for comp in self.components:
            if comp.component_id == component_id:
                return comp
        raise KeyError(component_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "payload_id": self.payload_id,
            "session_id": self.session_id,
            "timestamp": self.timestamp,
            "domain": self.domain.value,
            "schema_version": self.schema_version,
            "components": [c.to_dict() for c in self.components],
            "bindings": [b.to_dict() for b in self.bindings],
            "sequence_index": self.sequence_index,
            "metadata": self.metadata,
        }


def canonical_bytes(obj: Any) -> bytes:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def canonical_serialize(payload: UIPayload) -> bytes:
    """Sorted-key, whitespace-free UTF-8 JSON; identical input gives identical bytes."""
    return canonical_bytes(payload.to_dict())


def wire_bytes(payload: UIPayload) -> bytes:
    """Canonical bytes of the payload as a renderer would receive it.

    The ``metadata`` map carries ground-truth labels and provenance that are
    not part of the protocol message, so it is serialized empty here.
    """
    doc = payload.to_dict()
    doc["metadata"] = {}
    return canonical_bytes(doc)


def _enum(enum_cls, value: Any, field_name: str):
    try:
        return enum_cls(value)
    except ValueError:
        raise PayloadDomainError(enum_cls.__name__, field_name, value) from None


def _require(raw: Mapping[str, Any], key: str, types, where: str):
    if key not in raw:
        raise PayloadSchemaError(f"{where}: missing field {key!r}", [f"{where}.{key}"])
    value = raw[key]
    # bool is an int subclass; integer fields must reject it explicitly
    if types is int and isinstance(value, bool) or not isinstance(value, types):
        raise PayloadSchemaError(
            f"{where}.{key}: expected {getattr(types, '__name__', types)}, got {type(value).__name__}",
            [f"{where}.{key}"],
        )
    return value


def _parse_component(raw: Any, index: int) -> UIComponent:
    where = f"components[{index}]"
    if not isinstance(raw, dict):
        raise PayloadSchemaError(f"{where}: expected object", [where])
    props = raw.get("properties", {})
    if not isinstance(props, dict):
        raise PayloadSchemaError(f"{where}.properties: expected object", [f"{where}.properties"])
    for key, value in props.items():
        if not isinstance(value, (str, int, float, bool)):
            raise PayloadSchemaError(
                f"{where}.properties.{key}: expected scalar", [f"{where}.properties.{key}"]
            )
    action = raw.get("action")
    parent = raw.get("parent_id")
    if action is not None and not isinstance(action, str):
        raise PayloadSchemaError(f"{where}.action: expected string", [f"{where}.action"])
    if parent is not None and not isinstance(parent, str):
        raise PayloadSchemaError(f"{where}.parent_id: expected string", [f"{where}.parent_id"])
    return UIComponent(
        component_id=_require(raw, "component_id", str, where),
        component_type=_enum(ComponentType, _require(raw, "component_type", str, where), "ComponentType"),
        role=_enum(ComponentRole, _require(raw, "role", str, where), "ComponentRole"),
        label_text=_require(raw, "label_text", str, where) if "label_text" in raw else "",
        properties=dict(props),
        action=action,
        parent_id=parent,
    )


def _parse_binding(raw: Any, index: int) -> DataBinding:
    where = f"bindings[{index}]"
    if not isinstance(raw, dict):
        raise PayloadSchemaError(f"{where}: expected object", [where])
    return DataBinding(
        component_id=_require(raw, "component_id", str, where),
        source_path=_require(raw, "source_path", str, where),
    )


def payload_from_dict(doc: Any) -> UIPayload:
    if not isinstance(doc, dict):
        raise PayloadSchemaError("payload must be a JSON object", ["<root>"])
    missing = [name for name in TOP_LEVEL_FIELDS if name not in doc]
    if missing:
        raise PayloadSchemaError("missing top-level fields: " + ", ".join(missing), missing)
    comps = _require(doc, "components", list, "payload")
    binds = _require(doc, "bindings", list, "payload")
    return UIPayload(
        payload_id=_require(doc, "payload_id", str, "payload"),
        session_id=_require(doc, "session_id", str, "payload"),
        timestamp=_require(doc, "timestamp", int, "payload"),
        domain=_enum(DomainKind, _require(doc, "domain", str, "payload"), "DomainKind"),
        schema_version=_require(doc, "schema_version", str, "payload"),
        components=tuple(_parse_component(c, i) for i, c in enumerate(comps)),
        bindings=tuple(_parse_binding(b, i) for i, b in enumerate(binds)),
        sequence_index=_require(doc, "sequence_index", int, "payload"),
        metadata=dict(_require(doc, "metadata", dict, "payload")),
    )


def parse_payload(data: bytes | str) -> UIPayload:
    """Decode payload bytes.

    Raises PayloadParseError (with byte offset) for malformed input,
    PayloadSchemaError for missing/mistyped fields and PayloadDomainError
    for values outside a closed vocabulary. Structural invariants (unique
    ids, single tree, binding targets) are left to the validator.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PayloadParseError(f"invalid UTF-8: {exc.reason}", exc.start) from None
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise PayloadParseError(exc.msg, offset) from None
    return payload_from_dict(doc)


def depths(payload: UIPayload) -> dict[str, int]:
    """Depth of every reachable component, root = 1."""
    children = children_map(payload)
    roots = [c.component_id for c in payload.components if c.parent_id is None]
    out: dict[str, int] = {}
    stack = [(r, 1) for r in roots]
    while stack:
        cid, d = stack.pop()
        if cid in out:
            continue
        out[cid] = d
        stack.extend((k, d + 1) for k in children.get(cid, ()))
    return out


def children_map(payload: UIPayload) -> dict[str, list[str]]:
    children: dict[str, list[str]] = {}
    for comp in payload.components:
        if comp.parent_id is not None:
            children.setdefault(comp.parent_id, []).append(comp.component_id)
    return children


def max_depth(payload: UIPayload) -> int:
    d = depths(payload)
    return max(d.values()) if d else 0
