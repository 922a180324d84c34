import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from payloadguard.config import GeneratorConfig
from payloadguard.model import ComponentRole as R
from payloadguard.model import ComponentType as T
from payloadguard.model import DataBinding, DomainKind, UIComponent, UIPayload, canonical_serialize
from payloadguard.validator import Code, validate, validate_bytes


def payload(components, bindings=(), label="benign"):
    return UIPayload(
        "p", "s", 1_700_000_000, DomainKind.FORM_SUBMISSION, "1.0",
        tuple(components), tuple(bindings), 0, {"label": label},
    )


def comp(cid, ctype, role, parent=None, action=None, **props):
    return UIComponent(cid, ctype, role, cid.upper(), props, action, parent)


def chain(depth):
    # container chain of the given depth with a Label at the bottom
    comps = [comp("c0", T.CARD, R.CONTAINER)]
    for d in range(1, depth - 1):
        comps.append(comp(f"c{d}", T.CARD, R.CONTAINER, parent=f"c{d - 1}"))
    comps.append(comp("leaf", T.LABEL, R.DISPLAY, parent=comps[-1].component_id))
    return comps


def codes(report):
    return {v.code for v in report.violations}


def test_generated_benign_payloads_pass(small_corpus, gen_config):
    for p in small_corpus.benign:
        assert validate(p, "benign", gen_config).passed


def test_generated_malicious_payloads_pass(small_corpus, gen_config):
    for p in small_corpus.malicious:
        assert validate(p, "malicious", gen_config).passed


def test_duplicate_id():
    p = payload([comp("a", T.CARD, R.CONTAINER), comp("a", T.LABEL, R.DISPLAY, parent="a")])
    r = validate(p)
    assert not r.passed and r.stage == "schema" and Code.DUPLICATE_ID in codes(r)


def test_benign_depth_six_rejected_malicious_accepted():
    p = payload(chain(6))
    r = validate(p, "benign", GeneratorConfig())
    assert r.stage == "logical" and codes(r) == {Code.DEPTH_OUT_OF_BOUNDS}
    assert validate(p, "malicious", GeneratorConfig()).passed


def test_malicious_depth_bound_is_finite():
    assert validate(payload(chain(14)), "malicious").passed
    assert codes(validate(payload(chain(15)), "malicious")) == {Code.DEPTH_OUT_OF_BOUNDS}


@pytest.mark.parametrize(
    "components,bindings,expected",
    [
        ([comp("a", T.CARD, R.CONTAINER, parent="b"), comp("b", T.CARD, R.CONTAINER, parent="a")], (), Code.NO_ROOT),
        ([comp("a", T.CARD, R.CONTAINER), comp("b", T.CARD, R.CONTAINER)], (), Code.MULTIPLE_ROOTS),
        ([comp("a", T.CARD, R.CONTAINER), comp("b", T.LABEL, R.DISPLAY, parent="zz")], (), Code.DANGLING_PARENT),
        ([comp("a", T.CARD, R.CONTAINER), comp("b", T.LABEL, R.DISPLAY, parent="a"), comp("c", T.LABEL, R.DISPLAY, parent="b")], (), Code.PARENT_NOT_CONTAINER),
        (
            [comp("a", T.CARD, R.CONTAINER), comp("b", T.CARD, R.CONTAINER, parent="c"), comp("c", T.CARD, R.CONTAINER, parent="b")],
            (),
            Code.NOT_A_TREE,
        ),
        ([comp("a", T.CARD, R.CONTAINER), comp("b", T.BUTTON, R.ACTION, parent="a")], (), Code.ACTION_ROLE_MISMATCH),
        ([comp("a", T.CARD, R.CONTAINER), comp("b", T.LABEL, R.DISPLAY, parent="a", action="x")], (), Code.ACTION_ROLE_MISMATCH),
        ([comp("a", T.CARD, R.CONTAINER)], (DataBinding("nope", "x.y"),), Code.DANGLING_BINDING),
        ([comp("a", T.CARD, R.CONTAINER)], (DataBinding("a", "x.y"),), Code.BINDING_ROLE),
    ],
)
def test_schema_codes(components, bindings, expected):
    r = validate(payload(components, bindings))
    assert r.stage == "schema"
    assert expected in codes(r)


def test_table_without_row_count():
    p = payload([comp("a", T.CARD, R.CONTAINER), comp("t", T.TABLE, R.DISPLAY, parent="a")])
    assert codes(validate(p)) == {Code.TABLE_MISSING_ROW_COUNT}
    ok = payload([comp("a", T.CARD, R.CONTAINER), comp("t", T.TABLE, R.DISPLAY, parent="a", row_count=10)])
    assert validate(ok).passed


def test_form_needs_input_descendant():
    bare = payload([comp("f", T.FORM, R.CONTAINER), comp("l", T.LABEL, R.DISPLAY, parent="f")])
    assert codes(validate(bare)) == {Code.FORM_WITHOUT_INPUT}
    nested = payload(
        [comp("f", T.FORM, R.CONTAINER), comp("c", T.CARD, R.CONTAINER, parent="f"), comp("i", T.CHECKBOX, R.INPUT, parent="c")]
    )
    assert validate(nested).passed


def test_logical_stage_skipped_when_schema_fails():
    p = payload([comp("f", T.FORM, R.CONTAINER), comp("f", T.LABEL, R.DISPLAY, parent="f")])
    r = validate(p)
    assert r.stage == "schema" and Code.FORM_WITHOUT_INPUT not in codes(r)


def test_report_invariant_passed_iff_empty(small_corpus):
    p = small_corpus.benign[0]
    broken = dataclasses.replace(p, components=p.components + (p.components[-1],))
    for q in (p, broken):
        r = validate(q)
        assert r.passed == (len(r.violations) == 0)


def test_validate_bytes_maps_decoding_errors():
    assert validate_bytes(b"{not json")[1].violations[0].code is Code.MALFORMED_JSON
    assert validate_bytes(b"{}")[1].violations[0].code is Code.MISSING_FIELD
    good = payload([comp("a", T.CARD, R.CONTAINER)])
    raw = canonical_serialize(good).replace(b'"Card"', b'"Slider"')
    assert validate_bytes(raw)[1].violations[0].code is Code.UNKNOWN_ENUM
    parsed, report = validate_bytes(canonical_serialize(good))
    assert parsed == good and report.passed


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_validate_is_pure(i):
    p = payload(chain(2 + i % 7))
    assert validate(p) == validate(p)
