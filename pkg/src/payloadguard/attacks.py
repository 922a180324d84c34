"""Attack injection: turn a benign payload into a schema-valid malicious one.

Every mutation is a pure function of (source payload, attack kind, random
stream) and returns the mutant together with an ``AttackTrace`` naming
exactly the components that were injected or modified.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable

import numpy as np

from .lexicons import attack_lexicon, blueprints
from .model import (
    AttackKind,
    AttackTrace,
    ComponentRole,
    ComponentType,
    DataBinding,
    SessionMeta,
    Severity,
    UIComponent,
    UIPayload,
    children_map,
    depths,
)

log = logging.getLogger(__name__)

SEVERITY = {
    AttackKind.PHISHING_INTERFACE: Severity.HIGH,
    AttackKind.DATA_LEAKAGE: Severity.HIGH,
    AttackKind.MANIPULATIVE_UI: Severity.HIGH,
    AttackKind.WORKFLOW_ANOMALY: Severity.MEDIUM,
    AttackKind.LAYOUT_ABUSE: Severity.LOW,
}


class InapplicableAttack(Exception):
    """The source payload lacks what the requested attack needs."""


def _choice(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


class _Builder:
    """Mutable working copy of a payload's components and bindings."""

    def __init__(self, payload: UIPayload):
        self.source = payload
        self.components = list(payload.components)
        self.bindings = list(payload.bindings)
        self._next = 1 + max(
            (int(c.component_id[1:]) for c in payload.components if c.component_id[1:].isdigit()),
            default=-1,
        )

    def new_id(self) -> str:
        cid = f"c{self._next:03d}"
        self._next += 1
        return cid

    def index(self, cid: str) -> int:
        for i, comp in enumerate(self.components):
            if comp.component_id == cid:
                return i
        raise KeyError(cid)

    def replace(self, cid: str, **changes) -> None:
        i = self.index(cid)
        self.components[i] = dataclasses.replace(self.components[i], **changes)

    def build(self, payload_id: str, session: SessionMeta, trace: AttackTrace) -> UIPayload:
        metadata = {
            "label": "malicious",
            "attack_trace": trace.to_dict(),
            "generator": {"source_payload_id": self.source.payload_id},
        }
        return UIPayload(
            payload_id=payload_id,
            session_id=session.session_id,
            timestamp=session.timestamp,
            domain=self.source.domain,
            schema_version=self.source.schema_version,
            components=tuple(self.components),
            bindings=tuple(self.bindings),
            sequence_index=session.sequence_index,
            metadata=metadata,
        )


def _subtree(children: dict[str, list[str]], root: str) -> list[str]:
    out, stack = [], [root]
    while stack:
        cid = stack.pop()
        out.append(cid)
        stack.extend(children.get(cid, ()))
    return out


def _max_order(components) -> int:
    orders = [c.properties["order"] for c in components if isinstance(c.properties.get("order"), int)]
    return max(orders, default=0)


def _phishing(b: _Builder, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    lex = attack_lexicon()
    containers = [c for c in b.components if c.role is ComponentRole.CONTAINER]
    if not containers:
        raise InapplicableAttack("no container to inject into")
    target = _choice(rng, containers)
    total = int(rng.integers(2, 6))
    n_fields = min(total - 1, len(lex.phishing_field_labels))
    picks = rng.choice(len(lex.phishing_field_labels), size=n_fields, replace=False)
    order = _max_order(b.components)
    injected = []
    for k in sorted(int(p) for p in picks):
        cid = b.new_id()
        order += 1
        b.components.append(
            UIComponent(
                component_id=cid,
                component_type=ComponentType.TEXT_FIELD,
                role=ComponentRole.INPUT,
                label_text=lex.phishing_field_labels[k],
                properties={"max_length": int(rng.integers(16, 257)), "required": True, "order": order},
                parent_id=target.component_id,
            )
        )
        injected.append(cid)
    cid = b.new_id()
    b.components.append(
        UIComponent(
            component_id=cid,
            component_type=ComponentType.BUTTON,
            role=ComponentRole.ACTION,
            label_text=lex.phishing_button_label,
            properties={"variant": "primary", "order": order + 1},
            action=lex.phishing_button_action,
            parent_id=target.component_id,
        )
    )
    injected.append(cid)
    return injected, []


def _data_leakage(b: _Builder, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    lex = attack_lexicon()
    roles = {c.component_id: c.role for c in b.components}
    display = [i for i, bd in enumerate(b.bindings) if roles.get(bd.component_id) is ComponentRole.DISPLAY]
    if not display:
        raise InapplicableAttack("no display binding to rebind")
    k = int(rng.integers(1, min(3, len(display)) + 1))
    chosen = sorted(int(i) for i in rng.choice(display, size=k, replace=False))
    modified = []
    for i in chosen:
        path = _choice(rng, lex.internal_paths)
        b.bindings[i] = DataBinding(b.bindings[i].component_id, path)
        if b.bindings[i].component_id not in modified:
            modified.append(b.bindings[i].component_id)
    return [], modified


def _layout_abuse(b: _Builder, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    bp = blueprints()[b.source.domain]
    # wrap a subtree on a deepest path so every new layer adds to max depth
    parent_of = {c.component_id: c.parent_id for c in b.components}
    level = depths(b.source)
    deepest = max(level.values())
    on_path: set[str] = set()
    for cid in (c for c, d in level.items() if d == deepest):
        while parent_of[cid] is not None:
            on_path.add(cid)
            cid = parent_of[cid]
    candidates = [c for c in b.components if c.component_id in on_path]
    if not candidates:
        raise InapplicableAttack("payload has no subtree below the root")
    subject = _choice(rng, candidates)
    # total injected count includes the nesting layers themselves
    total = int(rng.integers(15, 41))
    layers = int(rng.integers(6, 13))
    fillers = total - layers
    containers = bp.labels[ComponentRole.CONTAINER]
    displays = bp.labels[ComponentRole.DISPLAY]

    wrappers = []
    parent = subject.parent_id
    for _ in range(layers):
        cid = b.new_id()
        b.components.append(
            UIComponent(
                component_id=cid,
                component_type=ComponentType.CARD,
                role=ComponentRole.CONTAINER,
                label_text=_choice(rng, containers),
                parent_id=parent,
            )
        )
        wrappers.append(cid)
        parent = cid
    b.replace(subject.component_id, parent_id=wrappers[-1])

    filler_ids = []
    for _ in range(fillers):
        cid = b.new_id()
        host = wrappers[int(rng.integers(len(wrappers)))]
        if rng.random() < 0.5:
            comp = UIComponent(cid, ComponentType.LABEL, ComponentRole.DISPLAY, _choice(rng, displays), parent_id=host)
        else:
            comp = UIComponent(cid, ComponentType.CARD, ComponentRole.CONTAINER, _choice(rng, containers), parent_id=host)
        b.components.append(comp)
        filler_ids.append(cid)
    return wrappers + filler_ids, [subject.component_id]


def _manipulative_ui(b: _Builder, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    lex = attack_lexicon()
    actions = [c.component_id for c in b.components if c.role is ComponentRole.ACTION]
    if not actions:
        raise InapplicableAttack("no action component to relabel")
    k = int(rng.integers(1, min(2, len(actions)) + 1))
    chosen = [actions[int(i)] for i in sorted(rng.choice(len(actions), size=k, replace=False))]
    for cid in chosen:
        b.replace(cid, label_text=_choice(rng, lex.benign_phrases), action=_choice(rng, lex.risky_operations))
    return [], chosen


def _workflow_anomaly(b: _Builder, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    lex = attack_lexicon()
    children = children_map(b.source)
    by_id = {c.component_id: c for c in b.components}

    def dependents(action: UIComponent) -> list[str]:
        # an approval depends on every ordered input in its container's subtree
        scope = _subtree(children, action.parent_id) if action.parent_id else []
        return [
            cid for cid in scope
            if by_id[cid].role is ComponentRole.INPUT and isinstance(by_id[cid].properties.get("order"), int)
        ]

    candidates = [
        c for c in b.components
        if c.role is ComponentRole.ACTION and isinstance(c.properties.get("order"), int) and dependents(c)
    ]
    if not candidates:
        raise InapplicableAttack("no ordered action with dependent inputs")
    approval = _choice(rng, candidates)
    deps = dependents(approval)
    group = [approval.component_id] + sorted(deps, key=lambda cid: by_id[cid].properties["order"])
    values = sorted(by_id[cid].properties["order"] for cid in group)
    # rotate: the approval takes the earliest slot, inputs shift one step later
    new_order = dict(zip(group, values))
    modified = []
    for cid in group:
        if by_id[cid].properties["order"] != new_order[cid]:
            b.replace(cid, properties={**b.components[b.index(cid)].properties, "order": new_order[cid]})
            modified.append(cid)

    flagged = [approval.component_id]
    others = [
        c.component_id for c in b.components
        if c.role in (ComponentRole.ACTION, ComponentRole.INPUT) and c.component_id != approval.component_id
    ]
    if others and rng.random() < 0.5:
        flagged.append(_choice(rng, others))
    for cid in flagged:
        props = b.components[b.index(cid)].properties
        b.replace(cid, properties={**props, lex.review_flag: True})
        if cid not in modified:
            modified.append(cid)
    return [], modified


_STRATEGIES: dict[AttackKind, Callable[[_Builder, np.random.Generator], tuple[list[str], list[str]]]] = {
    AttackKind.PHISHING_INTERFACE: _phishing,
    AttackKind.DATA_LEAKAGE: _data_leakage,
    AttackKind.LAYOUT_ABUSE: _layout_abuse,
    AttackKind.MANIPULATIVE_UI: _manipulative_ui,
    AttackKind.WORKFLOW_ANOMALY: _workflow_anomaly,
}


def mutate(
    benign: UIPayload,
    kind: AttackKind,
    rng: np.random.Generator,
    *,
    payload_id: str | None = None,
    session: SessionMeta | None = None,
) -> tuple[UIPayload, AttackTrace]:
    """Apply one attack strategy; raises InapplicableAttack when preconditions fail.

    The mutant keeps the source's domain and schema version. Its identity
    and session slot default to the source's own.
    """
    kind = AttackKind(kind)
    builder = _Builder(benign)
    injected, modified = _STRATEGIES[kind](builder, rng)
    trace = AttackTrace(
        attack_type=kind,
        source_payload_id=benign.payload_id,
        injected_component_ids=tuple(injected),
        modified_component_ids=tuple(modified),
        severity=SEVERITY[kind],
    )
    mutant = builder.build(payload_id or f"{benign.payload_id}-mut", session or benign.session, trace)
    return mutant, trace


def component_diff(source: UIPayload, mutant: UIPayload) -> tuple[set[str], set[str]]:
    """(ids only in mutant, ids present in both whose component or bindings changed)."""
    src = {c.component_id: c for c in source.components}
    dst = {c.component_id: c for c in mutant.components}
    src_b: dict[str, list[str]] = {}
    dst_b: dict[str, list[str]] = {}
    for bd in source.bindings:
        src_b.setdefault(bd.component_id, []).append(bd.source_path)
    for bd in mutant.bindings:
        dst_b.setdefault(bd.component_id, []).append(bd.source_path)
    added = set(dst) - set(src)
    changed = {
        cid for cid in set(src) & set(dst)
        if src[cid] != dst[cid] or src_b.get(cid) != dst_b.get(cid)
    }
    return added, changed


def depth_increase(source: UIPayload, mutant: UIPayload) -> int:
    return max(depths(mutant).values()) - max(depths(source).values())
