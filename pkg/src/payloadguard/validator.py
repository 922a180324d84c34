"""Two-stage payload gate.

The schema stage checks structure: field types, unique component ids, a
single well-formed tree, resolvable bindings and action/role consistency.
The logical stage runs only on schema-valid payloads and checks bounds and
cross-component relationships (depth, table metadata, form inputs).
Failures are reported, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .config import GeneratorConfig
from .model import (
    ComponentRole,
    ComponentType,
    DomainKind,
    PayloadDomainError,
    PayloadParseError,
    PayloadSchemaError,
    UIPayload,
    children_map,
    depths,
    parse_payload,
)


class Code(str, Enum):
    MALFORMED_JSON = "MALFORMED_JSON"
    MISSING_FIELD = "MISSING_FIELD"
    WRONG_TYPE = "WRONG_TYPE"
    UNKNOWN_ENUM = "UNKNOWN_ENUM"
    DUPLICATE_ID = "DUPLICATE_ID"
    NO_ROOT = "NO_ROOT"
    MULTIPLE_ROOTS = "MULTIPLE_ROOTS"
    DANGLING_PARENT = "DANGLING_PARENT"
    PARENT_NOT_CONTAINER = "PARENT_NOT_CONTAINER"
    NOT_A_TREE = "NOT_A_TREE"
    ACTION_ROLE_MISMATCH = "ACTION_ROLE_MISMATCH"
    DANGLING_BINDING = "DANGLING_BINDING"
    BINDING_ROLE = "BINDING_ROLE"
    DEPTH_OUT_OF_BOUNDS = "DEPTH_OUT_OF_BOUNDS"
    TABLE_MISSING_ROW_COUNT = "TABLE_MISSING_ROW_COUNT"
    FORM_WITHOUT_INPUT = "FORM_WITHOUT_INPUT"


@dataclass(frozen=True)
class Violation:
    code: Code
    component_id: str | None
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code.value, "component_id": self.component_id, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    stage: str
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def codes(self) -> set[Code]:
        return {v.code for v in self.violations}

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "stage": self.stage,
            "violations": [v.to_dict() for v in self.violations],
        }


def _report(stage: str, violations: list[Violation]) -> ValidationReport:
    return ValidationReport(passed=not violations, stage=stage, violations=tuple(violations))


def schema_violations(payload: UIPayload) -> list[Violation]:
    out: list[Violation] = []

    def bad(code: Code, message: str, cid: str | None = None) -> None:
        out.append(Violation(code, cid, message))

    if not isinstance(payload.payload_id, str) or not payload.payload_id:
        bad(Code.WRONG_TYPE, "payload_id must be a non-empty string")
    if not isinstance(payload.session_id, str) or not payload.session_id:
        bad(Code.WRONG_TYPE, "session_id must be a non-empty string")
    for name in ("timestamp", "sequence_index"):
        value = getattr(payload, name)
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            bad(Code.WRONG_TYPE, f"{name} must be a non-negative integer")
    if not isinstance(payload.domain, DomainKind):
        bad(Code.UNKNOWN_ENUM, f"domain {payload.domain!r} is not a DomainKind")
    if not isinstance(payload.schema_version, str) or not payload.schema_version:
        bad(Code.WRONG_TYPE, "schema_version must be a non-empty string")
    if not isinstance(payload.metadata, dict):
        bad(Code.WRONG_TYPE, "metadata must be a map")

    by_id: dict[str, Any] = {}
    for comp in payload.components:
        if comp.component_id in by_id:
            bad(Code.DUPLICATE_ID, f"component id {comp.component_id!r} appears more than once", comp.component_id)
        else:
            by_id[comp.component_id] = comp
        has_action = bool(comp.action)
        if (comp.role is ComponentRole.ACTION) != has_action:
            bad(
                Code.ACTION_ROLE_MISMATCH,
                "action field must be present exactly when role is action",
                comp.component_id,
            )

    roots = [c for c in payload.components if c.parent_id is None]
    if not roots:
        bad(Code.NO_ROOT, "no root component")
    elif len(roots) > 1:
        bad(Code.MULTIPLE_ROOTS, f"{len(roots)} components lack a parent_id")
    for comp in payload.components:
        if comp.parent_id is None:
            continue
        parent = by_id.get(comp.parent_id)
        if parent is None:
            bad(Code.DANGLING_PARENT, f"parent {comp.parent_id!r} does not exist", comp.component_id)
        elif parent.role is not ComponentRole.CONTAINER:
            bad(Code.PARENT_NOT_CONTAINER, f"parent {comp.parent_id!r} is not a container", comp.component_id)

    if len(roots) == 1 and not any(v.code is Code.DUPLICATE_ID for v in out):
        reachable = depths(payload)
        for comp in payload.components:
            if comp.component_id not in reachable:
                bad(Code.NOT_A_TREE, "component unreachable from root (cycle or detached)", comp.component_id)

    for b in payload.bindings:
        target = by_id.get(b.component_id)
        if target is None:
            bad(Code.DANGLING_BINDING, f"binding to unknown component {b.component_id!r}", b.component_id)
        elif target.role not in (ComponentRole.INPUT, ComponentRole.DISPLAY):
            bad(Code.BINDING_ROLE, "bindings may only target input or display components", b.component_id)
    return out


def logical_violations(payload: UIPayload, label: str, bounds: GeneratorConfig) -> list[Violation]:
    out: list[Violation] = []
    depth = depths(payload)
    deepest = max(depth.values()) if depth else 0
    lo, hi = bounds.depth_range
    if label == "malicious":
        hi = bounds.malicious_depth_max
    if not lo <= deepest <= hi:
        out.append(Violation(Code.DEPTH_OUT_OF_BOUNDS, None, f"max depth {deepest} outside [{lo}, {hi}]"))

    children = children_map(payload)
    by_id = {c.component_id: c for c in payload.components}
    for comp in payload.components:
        if comp.component_type is ComponentType.TABLE:
            rows = comp.properties.get("row_count")
            if isinstance(rows, bool) or not isinstance(rows, (int, float)):
                out.append(Violation(Code.TABLE_MISSING_ROW_COUNT, comp.component_id, "Table lacks numeric row_count"))
        if comp.component_type is ComponentType.FORM:
            stack = list(children.get(comp.component_id, ()))
            found = False
            while stack and not found:
                cid = stack.pop()
                found = by_id[cid].role is ComponentRole.INPUT
                stack.extend(children.get(cid, ()))
            if not found:
                out.append(Violation(Code.FORM_WITHOUT_INPUT, comp.component_id, "Form contains no input component"))
    return out


def validate(payload: UIPayload, label: str | None = None, bounds: GeneratorConfig | None = None) -> ValidationReport:
    """Run both stages; ``label`` defaults to the payload's metadata label."""
    bounds = bounds or GeneratorConfig()
    label = label or payload.label
    schema = schema_violations(payload)
    if schema:
        return _report("schema", schema)
    return _report("logical", logical_violations(payload, label, bounds))


def validate_bytes(data: bytes, label: str | None = None, bounds: GeneratorConfig | None = None) -> tuple[UIPayload | None, ValidationReport]:
    """Parse then validate; decoding failures become schema-stage violations."""
    try:
        payload = parse_payload(data)
    except PayloadParseError as exc:
        return None, _report("schema", [Violation(Code.MALFORMED_JSON, None, str(exc))])
    except PayloadDomainError as exc:
        return None, _report("schema", [Violation(Code.UNKNOWN_ENUM, None, str(exc))])
    except PayloadSchemaError as exc:
        code = Code.MISSING_FIELD if "missing" in str(exc) else Code.WRONG_TYPE
        return None, _report("schema", [Violation(code, None, str(exc))])
    return payload, validate(payload, label, bounds)
