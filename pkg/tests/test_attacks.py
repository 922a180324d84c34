import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from payloadguard.attacks import InapplicableAttack, component_diff, depth_increase, mutate
from payloadguard.config import GeneratorConfig
from payloadguard.features import extract_features
from payloadguard.generator import generate_benign
from payloadguard.lexicons import attack_lexicon
from payloadguard.model import (
    AttackKind,
    ComponentRole as R,
    ComponentType as T,
    DomainKind,
    SessionMeta,
    Severity,
    UIComponent,
    UIPayload,
    canonical_serialize,
    max_depth,
)
from payloadguard.rng import derive_rng
from payloadguard.validator import schema_violations, validate

META = SessionMeta("s", 1_700_000_000, 0)


def benign(i, domain=None):
    domain = domain or list(DomainKind)[i % 5]
    return generate_benign(domain, derive_rng(i, "attack-test"), GeneratorConfig(), META, f"ben-{i:05d}")


def try_mutate(kind, i):
    p = benign(i)
    try:
        return p, *mutate(p, kind, derive_rng(i, f"m/{kind.value}"))
    except InapplicableAttack:
        return p, None, None


@pytest.fixture(scope="module")
def mutants():
    # 200+ applicable mutants per kind
    out = {}
    for kind in AttackKind:
        rows, i = [], 0
        while len(rows) < 200:
            src, mut, trace = try_mutate(kind, i)
            if mut is not None:
                rows.append((src, mut, trace))
            i += 1
        out[kind] = rows
    return out


def one_button_payload():
    comps = (
        UIComponent("c000", T.FORM, R.CONTAINER, "Trip details"),
        UIComponent("c001", T.TEXT_FIELD, R.INPUT, "Passenger name", {"max_length": 40, "order": 1}, None, "c000"),
        UIComponent("c002", T.BUTTON, R.ACTION, "Submit booking", {"order": 2}, "submit_booking", "c000"),
    )
    return UIPayload("p", "s", 1_700_000_000, DomainKind.BOOKING_ASSISTANT, "1.0", comps, (), 0, {"label": "benign"})


def test_manipulative_single_button_example():
    lex = attack_lexicon()
    src = one_button_payload()
    mut, trace = mutate(src, AttackKind.MANIPULATIVE_UI, derive_rng(1, "x"))
    button = mut.component("c002")
    assert button.label_text in lex.benign_phrases
    assert button.action in lex.risky_operations
    assert trace.modified_component_ids == ("c002",)
    assert trace.injected_component_ids == ()


def test_workflow_example_puts_approval_first():
    src = one_button_payload()
    mut, trace = mutate(src, AttackKind.WORKFLOW_ANOMALY, derive_rng(1, "x"))
    assert mut.component("c002").properties["order"] < mut.component("c001").properties["order"]
    assert mut.component("c002").properties["approved_without_review"] is True
    assert "c002" in trace.modified_component_ids
    assert trace.severity is Severity.MEDIUM


def test_layout_abuse_on_twenty_components():
    found = 0
    for i in range(400):
        p = benign(i)
        if len(p.components) != 20:
            continue
        mut, _ = mutate(p, AttackKind.LAYOUT_ABUSE, derive_rng(i, "l"))
        assert 35 <= len(mut.components) <= 60
        assert max_depth(mut) > max_depth(p)
        found += 1
    assert found >= 3


def test_same_stream_same_bytes():
    p = benign(3)
    for kind in AttackKind:
        try:
            a, _ = mutate(p, kind, derive_rng(9, "same"))
        except InapplicableAttack:
            continue
        b, _ = mutate(p, kind, derive_rng(9, "same"))
        assert canonical_serialize(a) == canonical_serialize(b)


@pytest.mark.parametrize("kind", list(AttackKind))
def test_schema_preserved_and_trace_is_exact(mutants, kind):
    for src, mut, trace in mutants[kind]:
        assert schema_violations(mut) == []
        assert validate(mut, "malicious", GeneratorConfig()).passed or max_depth(mut) > 14
        added, changed = component_diff(src, mut)
        assert added == set(trace.injected_component_ids)
        assert changed == set(trace.modified_component_ids)
        ids = {c.component_id for c in mut.components}
        assert set(trace.injected_component_ids) <= ids
        assert set(trace.modified_component_ids) <= {c.component_id for c in src.components}
        assert trace.attack_type is kind and trace.source_payload_id == src.payload_id
        assert mut.attack_trace == trace and mut.is_malicious


def test_phishing_mechanism(mutants):
    lex = attack_lexicon()
    for src, mut, trace in mutants[AttackKind.PHISHING_INTERFACE]:
        new = [mut.component(c) for c in trace.injected_component_ids]
        assert 2 <= len(new) <= 5
        assert len({c.parent_id for c in new}) == 1
        assert mut.component(new[0].parent_id).role is R.CONTAINER
        fields = [c for c in new if c.component_type is T.TEXT_FIELD]
        buttons = [c for c in new if c.component_type is T.BUTTON]
        assert len(buttons) == 1 and buttons[0].label_text == "Secure validation"
        assert buttons[0].action == "submit_credentials"
        assert all(f.label_text in lex.phishing_field_labels for f in fields)


def test_leakage_mechanism(mutants):
    lex = attack_lexicon()
    for src, mut, trace in mutants[AttackKind.DATA_LEAKAGE]:
        assert 1 <= len(trace.modified_component_ids) <= 3
        paths = {b.component_id: b.source_path for b in mut.bindings}
        for cid in trace.modified_component_ids:
            assert mut.component(cid).role is R.DISPLAY
            assert paths[cid] in lex.internal_paths
        assert extract_features(mut)["sensitive_binding_flag"] in (0.0, 1.0)


def test_layout_mechanism(mutants):
    for src, mut, trace in mutants[AttackKind.LAYOUT_ABUSE]:
        assert 15 <= len(trace.injected_component_ids) <= 40
        assert 6 <= depth_increase(src, mut) <= 12
        new = [mut.component(c) for c in trace.injected_component_ids]
        assert all(c.component_type in (T.CARD, T.LABEL) for c in new)


def test_distribution_shift(mutants):
    lay = mutants[AttackKind.LAYOUT_ABUSE]
    assert np.mean([len(m.components) for _, m, _ in lay]) > np.mean([len(s.components) for s, _, _ in lay])
    assert np.mean([max_depth(m) for _, m, _ in lay]) > np.mean([max_depth(s) for s, _, _ in lay])
    for src, mut, _ in mutants[AttackKind.MANIPULATIVE_UI]:
        assert len(mut.components) == len(src.components)


def test_workflow_mechanism(mutants):
    for src, mut, trace in mutants[AttackKind.WORKFLOW_ANOMALY]:
        flagged = [c for c in mut.components if c.properties.get("approved_without_review") is True]
        assert 1 <= len(flagged) <= 2
        before = sorted(c.properties["order"] for c in src.components if "order" in c.properties)
        after = sorted(c.properties["order"] for c in mut.components if "order" in c.properties)
        assert before == after  # a permutation, nothing added or lost
        assert len(mut.components) == len(src.components)


def test_inapplicable_preconditions():
    comps = (UIComponent("c000", T.CARD, R.CONTAINER, "Box"), UIComponent("c001", T.LABEL, R.DISPLAY, "Hi", {}, None, "c000"))
    bare = UIPayload("p", "s", 0, DomainKind.E_COMMERCE, "1.0", comps, (), 0, {"label": "benign"})
    for kind in (AttackKind.MANIPULATIVE_UI, AttackKind.WORKFLOW_ANOMALY, AttackKind.DATA_LEAKAGE):
        with pytest.raises(InapplicableAttack):
            mutate(bare, kind, derive_rng(0, "x"))


@settings(max_examples=30, deadline=None)
@given(i=st.integers(0, 10_000), kind=st.sampled_from(list(AttackKind)))
def test_source_payload_is_not_modified(i, kind):
    p = benign(i)
    before = canonical_serialize(p)
    try:
        mutate(p, kind, derive_rng(i, "pure"))
    except InapplicableAttack:
        pass
    assert canonical_serialize(p) == before
