import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vivify.backends.mock import MockPersonaGenerator
from vivify.devsim import ScopeSim
from vivify.errors import (
    InvalidGeneration,
    InvalidLanguage,
    InvalidVoice,
    MissingField,
    NotFound,
    ParseError,
    UnknownField,
)
from vivify.persona import (
    FIELDS,
    PERSONA_PROMPT_EN,
    PERSONA_PROMPT_ZH,
    Persona,
    PersonaStore,
    VoiceId,
    edit_persona,
    generate_persona,
    validate_persona,
)

from conftest import single_sprite_scene


def make_doc(**overrides) -> dict:
    doc = {
        "name": "Cuppie",
        "gender": "female",
        "age": "about 3 years",
        "personality": "warm",
        "backstory": "a mug",
        "voice": "YOUNG_FEMALE",
        "language": "en",
    }
    doc.update(overrides)
    return doc


class TestValidate:
    def test_happy_path(self):
        persona = validate_persona(json.dumps(make_doc()))
        assert persona.name == "Cuppie"
        assert persona.voice is VoiceId.YOUNG_FEMALE

    def test_missing_backstory(self):
        doc = make_doc()
        del doc["backstory"]
        with pytest.raises(MissingField) as exc:
            validate_persona(json.dumps(doc))
        assert exc.value.field == "backstory"

    def test_invalid_voice(self):
        with pytest.raises(InvalidVoice):
            validate_persona(json.dumps(make_doc(voice="robot")))

    def test_invalid_language(self):
        with pytest.raises(InvalidLanguage):
            validate_persona(json.dumps(make_doc(language="fr")))

    def test_not_json(self):
        with pytest.raises(ParseError):
            validate_persona("{nope")

    def test_unexpected_field(self):
        with pytest.raises(ParseError):
            validate_persona(json.dumps(make_doc(mood="sunny")))

    def test_blank_name(self):
        with pytest.raises(MissingField):
            validate_persona(json.dumps(make_doc(name="  ")))

    def test_voice_enum_has_exactly_seven(self):
        assert len(VoiceId) == 7
        assert {v.value for v in VoiceId} == {
            "ELDERLY_FEMALE", "YOUNG_FEMALE", "CHILD_FEMALE",
            "ELDERLY_MALE", "YOUNG_MALE", "CHILD_MALE", "NEUTRAL",
        }


text_field = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
).filter(lambda s: s.strip())


@st.composite
def personas(draw) -> Persona:
    return Persona(
        name=draw(text_field),
        gender=draw(text_field),
        age=draw(text_field),
        personality=draw(text_field),
        backstory=draw(st.one_of(text_field, st.just("她在窑里诞生，守护每一杯茶。"))),
        voice=draw(st.sampled_from(list(VoiceId))),
        language=draw(st.sampled_from(["en", "zh"])),
    )


class TestRoundTrip:
    @settings(max_examples=60, deadline=None)
    @given(personas())
    def test_canonical_serialization_round_trips(self, persona):
        assert validate_persona(persona.to_json()).to_json() == persona.to_json()

    @settings(max_examples=40, deadline=None)
    @given(personas())
    def test_store_load_lossless(self, persona):
        import tempfile

        with tempfile.TemporaryDirectory() as root:
            store = PersonaStore(root)
            store.save(3, persona)
            assert store.load(3) == persona


class TestStore:
    def test_load_unknown_class(self, tmp_path):
        with pytest.raises(NotFound):
            PersonaStore(tmp_path).load(99)

    def test_two_objects_do_not_alias(self, tmp_path):
        store = PersonaStore(tmp_path)
        cuppie = validate_persona(json.dumps(make_doc()))
        boardie = validate_persona(json.dumps(make_doc(name="Boardie", voice="ELDERLY_MALE")))
        store.save(0, cuppie)
        store.save(1, boardie)
        before = store.path(1).read_bytes()
        store.save(0, edit_persona(cuppie, {"name": "Mugsy"}))
        assert store.path(1).read_bytes() == before
        assert store.load(1).name == "Boardie"
        assert store.load(0).name == "Mugsy"


class TestEdit:
    def test_rename_only_changes_name(self):
        persona = validate_persona(json.dumps(make_doc(name="cup")))
        edited = edit_persona(persona, {"name": "Cuppie"})
        assert edited.name == "Cuppie"
        assert edited.to_document() == {**persona.to_document(), "name": "Cuppie"}

    def test_empty_overrides_identity(self):
        persona = validate_persona(json.dumps(make_doc()))
        assert edit_persona(persona, {}) == persona

    def test_voice_update(self):
        persona = validate_persona(json.dumps(make_doc()))
        edited = edit_persona(persona, {"voice": "CHILD_MALE"})
        assert edited.voice is VoiceId.CHILD_MALE
        assert edited.name == persona.name

    def test_unknown_field(self):
        persona = validate_persona(json.dumps(make_doc()))
        with pytest.raises(UnknownField):
            edit_persona(persona, {"mood": "sunny"})

    def test_invalid_voice(self):
        persona = validate_persona(json.dumps(make_doc()))
        with pytest.raises(InvalidVoice):
            edit_persona(persona, {"voice": "robot"})


def first_frame(sprite: str):
    return ScopeSim(single_sprite_scene(sprite, frames=3, moving=False), seed=1).fetch()


class TestGenerate:
    def test_mock_on_mug_sprite(self):
        persona = generate_persona(first_frame("mug"), "en", MockPersonaGenerator())
        assert persona.name
        assert persona.voice in VoiceId
        assert persona.language == "en"

    def test_chinese(self):
        persona = generate_persona(first_frame("mug"), "zh", MockPersonaGenerator())
        assert persona.language == "zh"
        assert persona.name == "小红"

    def test_deterministic(self):
        a = generate_persona(first_frame("plant"), "en", MockPersonaGenerator())
        b = generate_persona(first_frame("plant"), "en", MockPersonaGenerator())
        assert a == b

    def test_invalid_generation_surfaces_after_retry(self):
        class BadBackend:
            def __init__(self):
                self.calls = 0

            def generate(self, frame, language, prompt):
                self.calls += 1
                return json.dumps(make_doc(voice="robot"))

        backend = BadBackend()
        with pytest.raises(InvalidGeneration):
            generate_persona(first_frame("mug"), "en", backend)
        assert backend.calls == 2  # one retry, then fail

    def test_prompt_included_verbatim(self):
        class Spy:
            def generate(self, frame, language, prompt):
                self.prompt = prompt
                return json.dumps(make_doc(language=language))

        spy = Spy()
        generate_persona(first_frame("mug"), "en", spy)
        assert spy.prompt == PERSONA_PROMPT_EN
        spy_zh = Spy()
        generate_persona(first_frame("mug"), "zh", spy_zh)
        assert spy_zh.prompt == PERSONA_PROMPT_ZH

    def test_language_mismatch_is_invalid(self):
        class WrongLanguage:
            def generate(self, frame, language, prompt):
                return json.dumps(make_doc(language="en"))

        with pytest.raises(InvalidGeneration):
            generate_persona(first_frame("mug"), "zh", WrongLanguage())
