import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deskloop.dsl import SkillCall, SkillCallParseError, format_skill_call, parse_skill_call


def test_vlamove_grammar():
    call = parse_skill_call('vlamove(pick="red block", place="blue bowl")')
    assert call == SkillCall(skill="vlamove", pick="red block", place="blue bowl")


def test_unquoted_string_is_a_syntax_error_with_position():
    with pytest.raises(SkillCallParseError) as err:
        parse_skill_call('vlamove(pick=red block, place="box")')
    assert err.value.position == 13
    assert "string" in err.value.message


def test_done_tolerates_whitespace():
    assert parse_skill_call("  done( )").is_done
    assert parse_skill_call("\n\tvlamove ( pick = \"a\" , place = \"b\" )").pick == "a"


@pytest.mark.parametrize(
    "text,position",
    [
        ("vlamove(", 8),
        ("frobnicate()", 0),
        ("done() trailing", 7),
        ('vlamove(pick="a" place="b")', 17),
        ('vlamove(pick="a", place="b"', 27),
        ('vlamove(pick="unterminated', 13),
        ("", 0),
    ],
)
def test_error_positions_are_stable(text, position):
    for _ in range(3):
        with pytest.raises(SkillCallParseError) as err:
            parse_skill_call(text)
        assert err.value.position == position


def test_empty_string_arguments_rejected():
    with pytest.raises(SkillCallParseError):
        parse_skill_call('vlamove(pick="", place="box")')
    with pytest.raises(ValueError):
        SkillCall(skill="vlamove", pick="", place="box")


def test_done_with_arguments_rejected():
    with pytest.raises(ValueError):
        SkillCall(skill="done", pick="x")


def test_format_parse_roundtrip():
    call = SkillCall(skill="vlamove", pick="letter A", place="box")
    assert parse_skill_call(format_skill_call(call)) == call
    assert format_skill_call(parse_skill_call("done()")) == "done()"


query = st.text(
    alphabet=st.characters(blacklist_characters='"', blacklist_categories=("Cs",)),
    min_size=1,
    max_size=40,
).filter(lambda s: s.strip())


@settings(max_examples=200, deadline=None)
@given(pick=query, place=query)
def test_roundtrip_idempotent_on_generated_calls(pick, place):
    call = SkillCall(skill="vlamove", pick=pick, place=place)
    text = format_skill_call(call)
    reparsed = parse_skill_call(text)
    assert reparsed == call
    assert format_skill_call(reparsed) == text


@settings(max_examples=500, deadline=None)
@given(st.text(max_size=200))
def test_parser_total_on_arbitrary_text(text):
    try:
        parse_skill_call(text)
    except SkillCallParseError:
        pass


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_parser_total_on_arbitrary_bytes(blob):
    try:
        parse_skill_call(blob)
    except SkillCallParseError:
        pass
