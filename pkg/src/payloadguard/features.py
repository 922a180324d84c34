"""Feature map from a payload (plus its session) to an 18-dimensional vector.

Four groups: structural (tree shape and size), semantic (label wording,
keywords, label/action mismatch, numeric properties), binding (data source
targets) and session (timing). Zero-denominator cases all map to 0 so every
value stays finite.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .lexicons import KeywordLists, keyword_lists
from .model import ComponentRole, SessionMeta, UIPayload, children_map, depths, wire_bytes

STRUCTURAL = (
    "component_count",
    "unique_component_types",
    "max_depth",
    "avg_branching_factor",
    "graph_density",
    "payload_size_bytes",
    "container_ratio",
    "action_component_ratio",
)
SEMANTIC = (
    "avg_label_length",
    "text_entropy",
    "sensitive_keyword_count",
    "semantic_inconsistency_score",
    "numeric_property_statistics",
)
BINDING = ("number_of_bindings", "sensitive_binding_flag", "cross_component_binding_ratio")
SESSION = ("timestamp_variance", "inter_payload_interval")

FEATURE_NAMES = STRUCTURAL + SEMANTIC + BINDING + SESSION
FEATURE_GROUPS = {"structural": STRUCTURAL, "semantic": SEMANTIC, "binding": BINDING, "session": SESSION}
ID_COLUMNS = ("payload_id", "label", "attack_type", "domain")
CSV_COLUMNS = ID_COLUMNS + FEATURE_NAMES


@dataclass(frozen=True)
class FeatureVector:
    payload_id: str
    label: int
    attack_type: str
    domain: str
    values: tuple[float, ...]

    def __getitem__(self, name: str) -> float:
        return self.values[FEATURE_NAMES.index(name)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))


def shannon_entropy(text: str) -> float:
    """Character-level entropy in bits; 0 for the empty string."""
    if not text:
        return 0.0
    n = len(text)
    return -sum((c / n) * math.log2(c / n) for c in Counter(text).values())


def count_occurrences(haystack: str, needle: str) -> int:
    # overlapping occurrences; none of the keywords can overlap themselves
    count = start = 0
    while True:
        start = haystack.find(needle, start)
        if start < 0:
            return count
        count += 1
        start += 1


def semantic_inconsistency(payload: UIPayload, keywords: KeywordLists | None = None) -> float:
    """Share of components whose risky action hides behind a label without a risky stem."""
    kw = keywords or keyword_lists()
    n = len(payload.components)
    if n == 0:
        return 0.0
    mismatches = 0
    for comp in payload.components:
        if comp.role is not ComponentRole.ACTION or comp.action not in kw.risky_actions:
            continue
        label = comp.label_text.lower()
        if not any(stem in label for stem in kw.risky_label_stems):
            mismatches += 1
    return mismatches / n


def _numeric_values(payload: UIPayload) -> list[float]:
    # booleans count as 0/1
    return [
        float(v)
        for comp in payload.components
        for v in comp.properties.values()
        if isinstance(v, (int, float))
    ]


def structural_features(payload: UIPayload) -> list[float]:
    comps = payload.components
    n = len(comps)
    children = children_map(payload)
    d = depths(payload)
    fanouts = [len(children[c.component_id]) for c in comps if c.component_id in children]
    containers = sum(1 for c in comps if c.role is ComponentRole.CONTAINER)
    actions = sum(1 for c in comps if c.role is ComponentRole.ACTION)
    return [
        float(n),
        float(len({c.component_type for c in comps})),
        float(max(d.values()) if d else 0),
        sum(fanouts) / len(fanouts) if fanouts else 0.0,
        2.0 * (n - 1) / (n * (n - 1)) if n > 1 else 0.0,
        float(len(wire_bytes(payload))),
        containers / n if n else 0.0,
        actions / n if n else 0.0,
    ]


def semantic_features(payload: UIPayload, kw: KeywordLists) -> list[float]:
    labels = [c.label_text for c in payload.components]
    n = len(labels)
    texts = [t.lower() for t in labels] + [b.source_path.lower() for b in payload.bindings]
    keyword_hits = sum(count_occurrences(t, k) for t in texts for k in kw.sensitive_keywords)
    numeric = _numeric_values(payload)
    return [
        sum(len(t) for t in labels) / n if n else 0.0,
        shannon_entropy("".join(labels)),
        float(keyword_hits),
        semantic_inconsistency(payload, kw),
        sum(numeric) / len(numeric) if numeric else 0.0,
    ]


def binding_features(payload: UIPayload, kw: KeywordLists) -> list[float]:
    bindings = payload.bindings
    if not bindings:
        return [0.0, 0.0, 0.0]
    flag = any(k in b.source_path.lower() for b in bindings for k in kw.sensitive_binding_keywords)
    sharers: dict[str, set[str]] = {}
    for b in bindings:
        sharers.setdefault(b.source_path, set()).add(b.component_id)
    shared = sum(1 for b in bindings if len(sharers[b.source_path]) >= 2)
    return [float(len(bindings)), 1.0 if flag else 0.0, shared / len(bindings)]


def session_features(session: Sequence[SessionMeta]) -> list[float]:
    ts = [float(m.timestamp) for m in sorted(session, key=lambda m: m.sequence_index)]
    if len(ts) < 2:
        return [0.0, 0.0]
    mean = sum(ts) / len(ts)
    variance = sum((t - mean) ** 2 for t in ts) / len(ts)
    gaps = [b - a for a, b in zip(ts, ts[1:])]
    return [variance, sum(gaps) / len(gaps)]


def extract_features(payload: UIPayload, session: Sequence[SessionMeta] | None = None) -> FeatureVector:
    """Compute the feature vector; ``session`` lists every meta in the payload's session."""
    kw = keyword_lists()
    session = list(session) if session else [payload.session]
    values = (
        structural_features(payload)
        + semantic_features(payload, kw)
        + binding_features(payload, kw)
        + session_features(session)
    )
    trace = payload.attack_trace
    return FeatureVector(
        payload_id=payload.payload_id,
        label=1 if payload.is_malicious else 0,
        attack_type=trace.attack_type.value if trace else "none",
        domain=payload.domain.value,
        values=tuple(values),
    )


def extract_corpus(payloads: Sequence[UIPayload]) -> list[FeatureVector]:
    """Extract features for every payload, grouping sessions across the corpus."""
    sessions: dict[str, list[SessionMeta]] = {}
    for p in payloads:
        sessions.setdefault(p.session_id, []).append(p.session)
    return [extract_features(p, sessions[p.session_id]) for p in payloads]


def features_to_csv(rows: Iterable[FeatureVector]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r.payload_id, r.label, r.attack_type, r.domain, *(repr(float(v)) for v in r.values)])
    return buf.getvalue()


def features_from_csv(text: str) -> list[FeatureVector]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError("features.csv header does not match the expected column order")
    out = []
    for row in reader:
        out.append(
            FeatureVector(
                payload_id=row[0],
                label=int(row[1]),
                attack_type=row[2],
                domain=row[3],
                values=tuple(float(v) for v in row[4:]),
            )
        )
    return out
