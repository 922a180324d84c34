"""Benign payload generation and labeled corpus assembly.

Benign payloads grow from a root container drawn from the domain
blueprint; each non-root node attaches to a random container below the
drawn depth cap. Malicious payloads are never built from scratch: each one
is a mutation of a uniformly drawn benign payload.

Every payload index owns its own named random stream, so the corpus is a
pure function of the configuration regardless of evaluation order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .attacks import InapplicableAttack, mutate
from .config import GeneratorConfig
from .lexicons import Blueprint, blueprints
from .model import (
    DEFAULT_ROLE,
    SCHEMA_VERSION,
    AttackKind,
    ComponentRole,
    ComponentType,
    DataBinding,
    DomainKind,
    SessionMeta,
    UIComponent,
    UIPayload,
)
from .rng import SeededRng
from .validator import validate

log = logging.getLogger(__name__)

CONTAINER_TYPES = {ComponentType.CARD, ComponentType.FORM, ComponentType.MODAL}
INPUT_TYPES = (ComponentType.TEXT_FIELD, ComponentType.DROPDOWN, ComponentType.CHECKBOX)
CHART_KINDS = ("line", "bar", "area", "pie")
# the rate cap only binds past this many rejections; one reject in a 15-payload smoke run is noise
MIN_ABORT_REJECTIONS = 5
SESSION_EPOCH = 1_700_000_000
SESSION_EPOCH_SPAN = 90 * 24 * 3600


class GenerationError(RuntimeError):
    def __init__(self, message: str, report: dict[str, Any] | None = None):
        super().__init__(message)
        self.report = report or {}


def _choice(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def _weighted(rng: np.random.Generator, items, weights):
    w = np.asarray(weights, dtype=float)
    return items[int(rng.choice(len(items), p=w / w.sum()))]


def _properties(ctype: ComponentType, rng: np.random.Generator) -> dict[str, Any]:
    if ctype is ComponentType.TABLE:
        return {"row_count": int(rng.integers(5, 501)), "sortable": bool(rng.random() < 0.5)}
    if ctype is ComponentType.TEXT_FIELD:
        return {"max_length": int(rng.integers(16, 257)), "required": bool(rng.random() < 0.6)}
    if ctype is ComponentType.DROPDOWN:
        return {"option_count": int(rng.integers(2, 13))}
    if ctype is ComponentType.CHECKBOX:
        return {"checked": bool(rng.random() < 0.3)}
    if ctype is ComponentType.CHART:
        return {"chart_kind": _choice(rng, CHART_KINDS), "series_count": int(rng.integers(1, 6))}
    if ctype is ComponentType.BUTTON:
        return {"variant": _choice(rng, ("primary", "secondary", "link"))}
    if ctype is ComponentType.MODAL:
        return {"dismissible": bool(rng.random() < 0.7)}
    return {}


def _count_bounds(bp: Blueprint, config: GeneratorConfig) -> tuple[int, int]:
    lo = max(config.component_count_range[0], bp.component_count[0])
    hi = min(config.component_count_range[1], bp.component_count[1])
    if lo > hi:
        lo, hi = config.component_count_range
    return lo, hi


def _grow(
    domain: DomainKind, rng: np.random.Generator, config: GeneratorConfig
) -> list[UIComponent] | None:
    """One attempt at a component tree; None when the drawn shape is infeasible."""
    bp = blueprints()[domain]
    lo, hi = _count_bounds(bp, config)
    n_target = int(rng.integers(lo, hi + 1))
    dmin, dmax = config.depth_range
    # any non-root component forces depth >= 2 under the root = 1 convention
    floor = max(dmin, 2 if n_target > 1 else 1)
    if floor > dmax:
        return None
    depth_cap = int(rng.integers(floor, dmax + 1))

    labels = bp.labels
    types = [t for t in bp.type_weights]
    weights = [bp.type_weights[t] for t in types]
    actions = bp.actions

    comps: list[dict[str, Any]] = []
    depth: dict[str, int] = {}

    def add(ctype: ComponentType, parent: str | None) -> str:
        cid = f"c{len(comps):03d}"
        role = DEFAULT_ROLE[ctype]
        action = None
        if role is ComponentRole.ACTION:
            label, action, _ = _weighted(rng, actions, [a[2] for a in actions])
        else:
            label = _choice(rng, labels[role])
        comps.append(
            dict(
                component_id=cid,
                component_type=ctype,
                role=role,
                label_text=label,
                properties=_properties(ctype, rng),
                action=action,
                parent_id=parent,
            )
        )
        depth[cid] = 1 if parent is None else depth[parent] + 1
        return cid

    root_types = list(bp.root_types)
    if n_target < 2 or depth_cap < 2:
        root_types = [t for t in root_types if t is not ComponentType.FORM] or [ComponentType.CARD]
    root_type = _choice(rng, root_types)
    root = add(root_type, None)
    if root_type is ComponentType.FORM:
        add(_choice(rng, INPUT_TYPES), root)
    # spine down to the minimum depth; a no-op for the default minimum of 1
    tip = root
    while depth[tip] < dmin - 1:
        tip = add(ComponentType.CARD, tip)
    if depth[tip] < dmin:
        add(ComponentType.LABEL, tip)
    if len(comps) > n_target:
        return None

    while len(comps) < n_target:
        eligible = [c["component_id"] for c in comps if c["role"] is ComponentRole.CONTAINER and depth[c["component_id"]] < depth_cap]
        if not eligible:
            return None
        parent = _choice(rng, eligible)
        child_depth = depth[parent] + 1
        remaining = n_target - len(comps)
        allowed = []
        for t, w in zip(types, weights):
            if t in CONTAINER_TYPES and child_depth >= depth_cap:
                continue
            if t is ComponentType.FORM and remaining < 2:
                continue
            allowed.append((t, w))
        ctype = _weighted(rng, [a[0] for a in allowed], [a[1] for a in allowed])
        cid = add(ctype, parent)
        if ctype is ComponentType.FORM:
            add(_choice(rng, INPUT_TYPES), cid)

    if max(depth.values()) < dmin:
        return None

    # step order: every input precedes every action
    step = 0
    for role in (ComponentRole.INPUT, ComponentRole.ACTION):
        for c in comps:
            if c["role"] is role:
                step += 1
                c["properties"]["order"] = step
    return [UIComponent(**c) for c in comps]


def generate_benign(
    domain: DomainKind,
    rng: np.random.Generator,
    config: GeneratorConfig,
    session: SessionMeta,
    payload_id: str = "p0",
    provenance: dict[str, Any] | None = None,
) -> UIPayload:
    """Grow one benign payload for ``domain``; retries infeasible shapes."""
    domain = DomainKind(domain)
    bp = blueprints()[domain]
    for _ in range(max(1, config.max_retries)):
        comps = _grow(domain, rng, config)
        if comps is None:
            continue
        bindings = []
        for comp in comps:
            if comp.role in (ComponentRole.INPUT, ComponentRole.DISPLAY) and rng.random() < bp.bind_probability:
                bindings.append(DataBinding(comp.component_id, f"{domain.value}.{_choice(rng, bp.binding_fields)}"))
        return UIPayload(
            payload_id=payload_id,
            session_id=session.session_id,
            timestamp=session.timestamp,
            domain=domain,
            schema_version=SCHEMA_VERSION,
            components=tuple(comps),
            bindings=tuple(bindings),
            sequence_index=session.sequence_index,
            metadata={"label": "benign", "generator": dict(provenance or {})},
        )
    raise GenerationError(
        f"could not satisfy bounds count={list(config.component_count_range)} "
        f"depth={list(config.depth_range)} for {domain.value} after {config.max_retries} attempts"
    )


def plan_sessions(n: int, rng: np.random.Generator, length_range: tuple[int, int]) -> list[SessionMeta]:
    """Assign ``n`` payload slots to sessions of 1-3 payloads with second-level timestamps.

    Slots are shuffled first so a session mixes payloads from any part of
    the corpus. Gaps between consecutive payloads are uniform in [1, 30] s.
    """
    order = rng.permutation(n)
    metas: list[SessionMeta | None] = [None] * n
    lo, hi = length_range
    pos = sid = 0
    while pos < n:
        length = min(int(rng.integers(lo, hi + 1)), n - pos)
        ts = SESSION_EPOCH + int(rng.integers(0, SESSION_EPOCH_SPAN))
        for k in range(length):
            if k:
                ts += int(rng.integers(1, 31))
            metas[int(order[pos + k])] = SessionMeta(f"s{sid:05d}", ts, k)
        pos += length
        sid += 1
    return metas  # type: ignore[return-value]


def allocate_kinds(n: int, mix: dict[str, float]) -> list[AttackKind]:
    """Largest-remainder apportionment of ``n`` attacks over the mix weights."""
    kinds = [AttackKind(k) for k in sorted(mix) if mix[k] > 0]
    if n == 0 or not kinds:
        return []
    w = np.array([mix[k.value] for k in kinds], dtype=float)
    exact = n * w / w.sum()
    counts = np.floor(exact).astype(int)
    rema = exact - counts
    for i in sorted(range(len(kinds)), key=lambda i: (-rema[i], kinds[i].value))[: n - counts.sum()]:
        counts[i] += 1
    out: list[AttackKind] = []
    for k, c in zip(kinds, counts):
        out.extend([k] * int(c))
    return out


@dataclass
class Corpus:
    benign: list[UIPayload] = field(default_factory=list)
    malicious: list[UIPayload] = field(default_factory=list)
    log: dict[str, Any] = field(default_factory=dict)
    rejections: list[dict[str, Any]] = field(default_factory=list)

    @property
    def payloads(self) -> list[UIPayload]:
        return self.benign + self.malicious


def generate_dataset(
    config: GeneratorConfig,
    n_benign: int,
    n_malicious: int,
    attack_mix: dict[str, float] | None = None,
) -> Corpus:
    """Generate, validate and label the full corpus.

    Rejected payloads are regenerated from a fresh attempt stream; each
    rejection is kept (with its report) in ``Corpus.rejections``.
    """
    from .config import DEFAULT_ATTACK_MIX

    if n_malicious > n_benign:
        raise GenerationError(f"{n_malicious} malicious payloads need as many benign sources, got {n_benign}")
    rng = SeededRng(config.seed)
    mix = attack_mix or DEFAULT_ATTACK_MIX
    total = n_benign + n_malicious
    sessions = plan_sessions(total, rng.stream("sessions"), config.session_length_range)

    domains = sorted(config.domain_weights)
    dweights = np.array([config.domain_weights[d] for d in domains], dtype=float)
    domain_rng = rng.stream("gen/domains")
    domain_draws = domain_rng.choice(len(domains), size=n_benign, p=dweights / dweights.sum())

    corpus = Corpus()
    attempts = 0

    def reject(payload: UIPayload, report, label: str) -> None:
        corpus.rejections.append({"payload_id": payload.payload_id, "label": label, "report": report.to_dict()})
        log.info("rejected %s payload %s: %s", label, payload.payload_id, [v.code.value for v in report.violations])

    for i in range(n_benign):
        domain = DomainKind(domains[int(domain_draws[i])])
        pid = f"ben-{i:05d}"
        for attempt in range(config.max_retries + 1):
            label = f"gen/benign/{i}" + (f"/retry{attempt}" if attempt else "")
            payload = generate_benign(domain, rng.stream(label), config, sessions[i], pid, {"stream": label})
            attempts += 1
            report = validate(payload, "benign", config)
            if report.passed:
                corpus.benign.append(payload)
                break
            reject(payload, report, "benign")
        else:
            raise GenerationError(f"benign payload {pid} failed validation after retries", _log(config, corpus, attempts, {}, 0))

    kinds = allocate_kinds(n_malicious, mix)
    kinds = [kinds[int(j)] for j in rng.stream("attack/kinds").permutation(len(kinds))]
    inapplicable = 0
    pool = list(range(n_benign))  # each benign payload seeds at most one mutant
    for j, kind in enumerate(kinds):
        pid = f"mal-{j:05d}"
        session = sessions[n_benign + j]
        for attempt in range(config.max_retries + 1):
            stream = rng.stream(f"attack/{j}" + (f"/retry{attempt}" if attempt else ""))
            slot = int(stream.integers(len(pool)))
            source = corpus.benign[pool[slot]]
            try:
                mutant, _ = mutate(source, kind, stream, payload_id=pid, session=session)
            except InapplicableAttack as exc:
                inapplicable += 1
                log.info("attack %s inapplicable to %s (%s); redrawing source", kind.value, source.payload_id, exc)
                continue
            attempts += 1
            report = validate(mutant, "malicious", config)
            if report.passed:
                corpus.malicious.append(mutant)
                pool[slot] = pool[-1]
                pool.pop()
                break
            reject(mutant, report, "malicious")
        else:
            raise GenerationError(f"malicious payload {pid} ({kind.value}) failed after retries", _log(config, corpus, attempts, {}, inapplicable))

    counts: dict[str, int] = {}
    for k in kinds:
        counts[k.value] = counts.get(k.value, 0) + 1
    corpus.log = _log(config, corpus, attempts, counts, inapplicable)
    rate = corpus.log["rejection_rate"]
    if rate > config.rejection_cap and corpus.log["rejected"] > MIN_ABORT_REJECTIONS:
        raise GenerationError(f"validation rejection rate {rate:.4f} exceeds cap {config.rejection_cap}", corpus.log)
    return corpus


def _log(config: GeneratorConfig, corpus: Corpus, attempts: int, kinds: dict[str, int], inapplicable: int) -> dict[str, Any]:
    domains: dict[str, int] = {}
    for p in corpus.payloads:
        domains[p.domain.value] = domains.get(p.domain.value, 0) + 1
    rejected = len(corpus.rejections)
    return {
        "seed": config.seed,
        "n_benign": len(corpus.benign),
        "n_malicious": len(corpus.malicious),
        "generated": attempts,
        "rejected": rejected,
        "rejected_benign": sum(1 for r in corpus.rejections if r["label"] == "benign"),
        "rejected_malicious": sum(1 for r in corpus.rejections if r["label"] == "malicious"),
        "rejection_rate": rejected / attempts if attempts else 0.0,
        "inapplicable_resamples": inapplicable,
        "domain_counts": dict(sorted(domains.items())),
        "attack_counts": dict(sorted(kinds.items())),
    }
