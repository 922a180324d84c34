import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from payloadguard.config import DEFAULT_ATTACK_MIX, GeneratorConfig
from payloadguard.features import extract_features
from payloadguard.generator import (
    GenerationError,
    allocate_kinds,
    generate_benign,
    generate_dataset,
    plan_sessions,
)
from payloadguard.lexicons import keyword_lists
from payloadguard.model import ComponentRole, DomainKind, canonical_serialize, max_depth
from payloadguard.rng import SeededRng, derive_rng
from payloadguard.validator import validate


def test_named_streams_are_reproducible_and_independent():
    a = derive_rng(1337, "gen/benign/0").integers(0, 2**32, size=8)
    b = derive_rng(1337, "gen/benign/0").integers(0, 2**32, size=8)
    c = derive_rng(1337, "gen/benign/1").integers(0, 2**32, size=8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert SeededRng(1337).stream("x").random() == derive_rng(1337, "x").random()
    with pytest.raises(ValueError):
        derive_rng(2**64, "x")


def test_booking_bindings_are_domain_scoped(meta):
    for i in range(20):
        p = generate_benign(DomainKind.BOOKING_ASSISTANT, derive_rng(i, "t"), GeneratorConfig(), meta)
        assert all(b.source_path.startswith("booking_assistant.") for b in p.bindings)


def test_first_draw_is_byte_identical(meta):
    cfg = GeneratorConfig(seed=1337)
    a = generate_benign(DomainKind.E_COMMERCE, SeededRng(1337).stream("gen/benign/0"), cfg, meta)
    b = generate_benign(DomainKind.E_COMMERCE, SeededRng(1337).stream("gen/benign/0"), cfg, meta)
    assert canonical_serialize(a) == canonical_serialize(b)


def test_shallow_bound_gives_root_plus_direct_children(meta):
    # under root = 1, "root plus direct children" is depth 2
    cfg = GeneratorConfig(depth_range=(1, 2))
    for i in range(10):
        p = generate_benign(DomainKind.ANALYTICS_DASHBOARD, derive_rng(i, "t"), cfg, meta)
        root = p.components[0]
        assert root.parent_id is None
        assert all(c.parent_id == root.component_id for c in p.components[1:])
        assert max_depth(p) == 2


def test_root_only_bound_is_unsatisfiable_with_five_components(meta):
    with pytest.raises(GenerationError):
        generate_benign(DomainKind.ANALYTICS_DASHBOARD, derive_rng(0, "t"), GeneratorConfig(depth_range=(1, 1)), meta)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), domain=st.sampled_from(list(DomainKind)))
def test_benign_postconditions(seed, domain):
    from payloadguard.model import SessionMeta

    cfg = GeneratorConfig()
    p = generate_benign(domain, derive_rng(seed, "prop"), cfg, SessionMeta("s", 1_700_000_000, 0))
    assert validate(p, "benign", cfg).passed
    assert 5 <= len(p.components) <= 40
    assert 1 <= max_depth(p) <= 5
    assert extract_features(p)["sensitive_keyword_count"] == 0
    assert extract_features(p)["sensitive_binding_flag"] == 0
    bound = {b.component_id for b in p.bindings}
    roles = {c.component_id: c.role for c in p.components}
    assert all(roles[c] in (ComponentRole.INPUT, ComponentRole.DISPLAY) for c in bound)


@settings(max_examples=30, deadline=None)
@given(lo=st.integers(5, 30), span=st.integers(0, 10), dlo=st.integers(2, 4), dspan=st.integers(0, 3))
def test_custom_bounds_respected(lo, span, dlo, dspan, meta):
    cfg = GeneratorConfig(component_count_range=(lo, lo + span), depth_range=(dlo, dlo + dspan))
    p = generate_benign(DomainKind.FORM_SUBMISSION, derive_rng(lo * 97 + span, "b"), cfg, meta)
    assert lo <= len(p.components) <= lo + span
    assert dlo <= max_depth(p) <= dlo + dspan
    assert validate(p, "benign", cfg).passed


def test_no_sensitive_keyword_in_any_benign_text(small_corpus):
    kw = keyword_lists()
    for p in small_corpus.benign:
        texts = [c.label_text.lower() for c in p.components] + [b.source_path.lower() for b in p.bindings]
        assert not any(k in t for t in texts for k in kw.sensitive_keywords)


def test_empty_corpus():
    c = generate_dataset(GeneratorConfig(), 0, 0)
    assert c.payloads == [] and c.log["generated"] == 0


def test_too_many_malicious_for_sources():
    with pytest.raises(GenerationError):
        generate_dataset(GeneratorConfig(), 3, 5)


def test_corpus_counts_and_sources(small_corpus):
    assert len(small_corpus.benign) == 300 and len(small_corpus.malicious) == 150
    benign_ids = {p.payload_id for p in small_corpus.benign}
    sources = [p.attack_trace.source_payload_id for p in small_corpus.malicious]
    assert set(sources) <= benign_ids
    assert len(set(sources)) == len(sources)  # each benign payload seeds at most one mutant
    for p in small_corpus.malicious:
        assert p.is_malicious and p.attack_trace is not None
    for p in small_corpus.benign:
        assert not p.is_malicious and p.attack_trace is None


def test_attack_counts_follow_mix_exactly(small_corpus):
    counts = small_corpus.log["attack_counts"]
    assert sum(counts.values()) == 150
    total = sum(DEFAULT_ATTACK_MIX.values())
    for k, w in DEFAULT_ATTACK_MIX.items():
        assert abs(counts[k] - 150 * w / total) < 1


def test_allocate_kinds_largest_remainder():
    kinds = allocate_kinds(1000, DEFAULT_ATTACK_MIX)
    got = {k.value: kinds.count(k) for k in set(kinds)}
    assert got == {"workflow_anomaly": 258, "phishing_interface": 232, "data_leakage": 228, "manipulative_ui": 207, "layout_abuse": 75}
    assert allocate_kinds(0, DEFAULT_ATTACK_MIX) == []
    assert len(allocate_kinds(7, {"layout_abuse": 1.0, "phishing_interface": 1.0})) == 7


def test_sessions_are_one_to_three_with_monotone_timestamps():
    metas = plan_sessions(500, derive_rng(5, "sessions"), (1, 3))
    by_session = {}
    for m in metas:
        by_session.setdefault(m.session_id, []).append(m)
    assert sum(len(v) for v in by_session.values()) == 500
    for members in by_session.values():
        assert 1 <= len(members) <= 3
        members.sort(key=lambda m: m.sequence_index)
        assert [m.sequence_index for m in members] == list(range(len(members)))
        gaps = np.diff([m.timestamp for m in members])
        assert np.all((gaps >= 1) & (gaps <= 30))


def test_dataset_is_deterministic():
    a = generate_dataset(GeneratorConfig(seed=7), 40, 20)
    b = generate_dataset(GeneratorConfig(seed=7), 40, 20)
    assert [canonical_serialize(p) for p in a.payloads] == [canonical_serialize(p) for p in b.payloads]
    c = generate_dataset(GeneratorConfig(seed=8), 40, 20)
    assert [canonical_serialize(p) for p in a.payloads] != [canonical_serialize(p) for p in c.payloads]


def test_rejection_cap_aborts_with_report():
    # a cap of zero fails as soon as any malicious mutant is rejected
    cfg = dataclasses.replace(GeneratorConfig(seed=3), rejection_cap=0.0, malicious_depth_max=5)
    with pytest.raises(GenerationError) as exc:
        generate_dataset(cfg, 60, 40, {"layout_abuse": 1.0})
    assert exc.value.report.get("rejected", 0) > 0 or "failed" in str(exc.value)


def test_log_fields(small_corpus):
    log = small_corpus.log
    for key in ("seed", "generated", "rejected", "rejection_rate", "domain_counts", "attack_counts"):
        assert key in log
    assert log["rejected"] == len(small_corpus.rejections)
