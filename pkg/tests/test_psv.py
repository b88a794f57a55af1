"""PSV XML parsing, canonical serialization and diagnostics."""
import pytest

from metacp.diagnostics import has_errors
from metacp.fixtures import fixture_names, load_fixture
from metacp.psv import (
    PsvParseError,
    parse_psv,
    serialize_psv,
    try_parse_psv,
    validate_schema,
)
from metacp.terms import Apply, Const, Sort, Var
from metacp.theories import BundleName

MINIMAL = b"""<?xml version="1.0" encoding="UTF-8"?>
<protocol format="1" name="minimal">
  <roles>
    <role name="A"/>
  </roles>
</protocol>
"""


def codes(diags):
    return [d.code for d in diags]


def test_minimal_document():
    doc = parse_psv(MINIMAL)
    spec = doc.spec
    assert spec.name == "minimal"
    assert len(spec.roles) == 1 and spec.roles[0].name == "A"
    assert spec.exchange == () and spec.goals == ()


def test_dhke_fixture_fields():
    doc = parse_psv(load_fixture("dhke"))
    spec = doc.spec
    assert [r.name for r in spec.roles] == ["A", "B"]
    assert spec.bundles == {BundleName.DIFFIE_HELLMAN}
    assert len(spec.exchange) == 2
    first, second = spec.exchange
    assert (first.sender, first.receiver) == ("A", "B")
    assert (second.sender, second.receiver) == ("B", "A")
    g = Const("g", Sort.PUBLIC)
    assert first.payload.args == (g, Var("x", Sort.FRESH))
    assert second.payload.args == (g, Var("y", Sort.FRESH))


def test_undeclared_role_reference():
    bad = load_fixture("nsp").replace(b'to="B">', b'to="C">', 1)
    diags = validate_schema(bad)
    assert has_errors(diags)
    ref = [d for d in diags if d.code == "PSV022"]
    assert ref and "C" in ref[0].message and ref[0].step_index == 1


@pytest.mark.parametrize("name", fixture_names())
def test_fixture_files_are_canonical(name):
    raw = load_fixture(name)
    doc = parse_psv(raw)
    assert serialize_psv(doc) == raw


@pytest.mark.parametrize("name", fixture_names())
def test_round_trip_identity(name):
    doc = parse_psv(load_fixture(name))
    again = parse_psv(serialize_psv(doc))
    assert again.spec == doc.spec


def test_serialization_idempotent_on_noncanonical_input():
    # same document, sloppy formatting: one-line roles, reordered attributes
    messy = (
        b'<?xml version="1.0"?><protocol name="minimal" format="1">'
        b"<roles><role name='A'/></roles></protocol>"
    )
    first = serialize_psv(parse_psv(messy))
    second = serialize_psv(parse_psv(first))
    assert first == second == MINIMAL


def test_declaration_order_is_preserved():
    doc = MINIMAL.replace(
        b'<role name="A"/>', b'<role name="B"/>\n    <role name="A"/>'
    )
    spec = parse_psv(doc).spec
    assert [r.name for r in spec.roles] == ["B", "A"]
    assert b'name="B"' in serialize_psv(spec).split(b'name="A"')[0]


def test_duplicate_role():
    doc = MINIMAL.replace(b'<role name="A"/>', b'<role name="A"/><role name="A"/>')
    assert "PSV020" in codes(validate_schema(doc))


def test_arity_mismatch_cites_symbol():
    bad = load_fixture("nsp").replace(
        b'<apply fun="pk">\n          <var name="skB" sort="fresh"/>\n        </apply>',
        b'<apply fun="pk"/>',
        1,
    )
    diags = validate_schema(bad)
    hits = [d for d in diags if d.code == "PSV024"]
    assert hits and "pk" in hits[0].message


def test_canonical_fixture_validates_clean():
    assert validate_schema(load_fixture("dhke")) == []


def test_malformed_xml():
    assert codes(validate_schema(b"<protocol")) == ["PSV001"]
    assert validate_schema(b"<protocol")[0].line == 1


def test_doctype_rejected():
    evil = b'<?xml version="1.0"?><!DOCTYPE lol [<!ENTITY a "b">]><protocol/>'
    assert codes(validate_schema(evil)) == ["PSV002"]


def test_size_cap():
    diags = validate_schema(b"x" * 100, size_cap=10)
    assert codes(diags) == ["PSV003"]


def test_unknown_element_and_attribute():
    doc = MINIMAL.replace(b"<roles>", b"<wat/><roles>")
    assert "PSV010" in codes(validate_schema(doc))
    doc = MINIMAL.replace(b'<role name="A"/>', b'<role name="A" color="red"/>')
    assert "PSV011" in codes(validate_schema(doc))


def test_missing_attribute_and_bad_version():
    doc = MINIMAL.replace(b' name="minimal"', b"")
    assert "PSV012" in codes(validate_schema(doc))
    doc = MINIMAL.replace(b'format="1"', b'format="2"')
    assert "PSV015" in codes(validate_schema(doc))


def test_unexpected_text():
    doc = MINIMAL.replace(b"<roles>", b"<roles>hello")
    assert "PSV016" in codes(validate_schema(doc))


def test_noncontiguous_indices():
    doc = parse_psv(load_fixture("dhke"))
    raw = serialize_psv(doc).replace(b'index="2"', b'index="5"')
    assert "PSV027" in codes(validate_schema(raw))


def test_self_message():
    raw = load_fixture("dhke").replace(b'from="B" index="2" to="A"', b'from="A" index="2" to="A"')
    assert "PSV028" in codes(validate_schema(raw))


def test_bundle_symbol_redeclared():
    raw = load_fixture("dhke").replace(
        b'<bundle name="diffie-hellman"/>',
        b'<bundle name="diffie-hellman"/>\n    <function arity="2" name="exp" visibility="public"/>',
    )
    assert "PSV029" in codes(validate_schema(raw))


def test_unknown_bundle():
    raw = load_fixture("dhke").replace(b'name="diffie-hellman"', b'name="quantum"')
    assert "PSV033" in codes(validate_schema(raw))


def test_fresh_reuse_across_roles():
    raw = load_fixture("nsp").replace(b'<fresh name="nb"/>', b'<fresh name="na"/>')
    diags = validate_schema(raw)
    hits = [d for d in diags if d.code == "PSV030"]
    assert hits and "na" in hits[0].message and hits[0].step_index is None


def test_fresh_listed_as_knowledge():
    raw = load_fixture("nsp").replace(
        b'<fresh name="na"/>',
        b'<knows>\n        <var name="na" sort="fresh"/>\n      </knows>\n      <fresh name="na"/>',
    )
    assert "PSV030" in codes(validate_schema(raw))


def test_foreign_fresh_knowledge():
    raw = load_fixture("nsp").replace(
        b'<knows>\n        <var name="B" sort="pub"/>\n      </knows>\n      <fresh name="nb"/>',
        b'<knows>\n        <var name="na" sort="fresh"/>\n      </knows>\n      <fresh name="nb"/>',
    )
    assert "PSV034" in codes(validate_schema(raw))


def test_sort_conflict():
    raw = load_fixture("dhke").replace(b'<var name="y" sort="fresh"/>', b'<var name="x" sort="pub"/>', 1)
    assert "PSV025" in codes(validate_schema(raw))


def test_undeclared_fresh_variable():
    raw = load_fixture("dhke").replace(b'<var name="x" sort="fresh"/>', b'<var name="z" sort="fresh"/>')
    assert "PSV035" in codes(validate_schema(raw))


def test_undeclared_function():
    raw = load_fixture("dhke").replace(b'fun="exp"', b'fun="power"', 1)
    assert "PSV023" in codes(validate_schema(raw))


def test_bad_attribute_values():
    raw = load_fixture("dhke").replace(b'sort="fresh"', b'sort="quantum"', 1)
    assert "PSV013" in codes(validate_schema(raw))
    raw = load_fixture("dhke").replace(b'from="A" index="1"', b'from="A" delivery="maybe" index="1"')
    assert "PSV013" in codes(validate_schema(raw))


def test_tuple_cardinality_in_xml():
    raw = load_fixture("nsp").replace(
        b'<tuple>\n          <var name="na" sort="fresh"/>\n          <var name="A" sort="pub"/>\n        </tuple>',
        b'<tuple>\n          <var name="na" sort="fresh"/>\n        </tuple>',
    )
    assert "PSV014" in codes(validate_schema(raw))


def test_duplicate_function_declaration():
    raw = MINIMAL.replace(
        b"  <roles>",
        b'  <declarations>\n    <function arity="1" name="f" visibility="public"/>\n'
        b'    <function arity="2" name="f" visibility="public"/>\n  </declarations>\n  <roles>',
    )
    assert "PSV021" in codes(validate_schema(raw))


def test_bad_identifier_in_xml():
    raw = MINIMAL.replace(b'<role name="A"/>', b'<role name="9lives"/>')
    assert "PSV026" in codes(validate_schema(raw))


def test_every_registered_code_is_documented():
    from pathlib import Path

    from metacp.diagnostics import CODE_REGISTRY

    readme = Path("README.md").read_text(encoding="utf-8")
    for code in CODE_REGISTRY:
        assert code in readme, f"{code} missing from the README code table"


def test_asymmetric_key_needs_pki_bundle():
    raw = MINIMAL.replace(
        b'<role name="A"/>',
        b'<role name="A">\n      <ltk kind="asymmetric" name="skA"/>\n    </role>',
    )
    assert "PSV036" in codes(validate_schema(raw))
    # symmetric keys are fine without any bundle
    raw = MINIMAL.replace(
        b'<role name="A"/>',
        b'<role name="A">\n      <ltk kind="symmetric" name="kA"/>\n    </role>',
    )
    assert validate_schema(raw) == []


def test_equation_variable_and_destructor_rules():
    head = b"""<?xml version="1.0" encoding="UTF-8"?>
<protocol format="1" name="eqs">
  <declarations>
    <function arity="2" name="wrap" visibility="public"/>
    <function arity="2" name="unwrap" visibility="public"/>
    %s
  </declarations>
  <roles>
    <role name="A"/>
  </roles>
</protocol>
"""
    bad_vars = head % (
        b'<equation orientation="destructor"><lhs><apply fun="unwrap">'
        b'<apply fun="wrap"><var name="m"/><var name="k"/></apply><var name="k"/>'
        b'</apply></lhs><rhs><var name="z"/></rhs></equation>'
    )
    assert "PSV031" in codes(validate_schema(bad_vars))
    bad_shape = head % (
        b'<equation orientation="destructor"><lhs><var name="m"/></lhs>'
        b'<rhs><var name="m"/></rhs></equation>'
    )
    assert "PSV032" in codes(validate_schema(bad_shape))


def test_parse_error_exception_carries_diagnostics():
    with pytest.raises(PsvParseError) as exc:
        parse_psv(b"not xml at all")
    assert exc.value.diagnostics


def test_parse_is_total_on_fuzzed_input(tmp_path):
    import random

    rng = random.Random(42)
    base = load_fixture("nsp")
    for _ in range(300):
        data = bytearray(base)
        for _ in range(rng.randrange(1, 8)):
            pos = rng.randrange(len(data))
            data[pos] = rng.randrange(256)
        doc, diags = try_parse_psv(bytes(data))
        assert doc is not None or has_errors(diags)
        assert not any(d.code == "PSV099" for d in diags)
    for _ in range(200):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 400)))
        doc, diags = try_parse_psv(blob)
        assert doc is not None or has_errors(diags)
        assert not any(d.code == "PSV099" for d in diags)
