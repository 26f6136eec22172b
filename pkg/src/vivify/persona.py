"""Anthropomorphic persona documents: generation, validation, storage, editing.

A persona is a UTF-8 JSON document with exactly these fields, in this order:
name, gender, age, personality, backstory, voice, language. The voice must
be one of the seven supported voice ids and the language one of "en"/"zh".
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .errors import (
    InvalidGeneration,
    InvalidLanguage,
    InvalidVoice,
    IoFailure,
    MissingField,
    NotFound,
    ParseError,
    UnknownField,
)


class VoiceId(Enum):
    ELDERLY_FEMALE = "ELDERLY_FEMALE"
    YOUNG_FEMALE = "YOUNG_FEMALE"
    CHILD_FEMALE = "CHILD_FEMALE"
    ELDERLY_MALE = "ELDERLY_MALE"
    YOUNG_MALE = "YOUNG_MALE"
    CHILD_MALE = "CHILD_MALE"
    NEUTRAL = "NEUTRAL"


LANGUAGES = ("en", "zh")

FIELDS = ("name", "gender", "age", "personality", "backstory", "voice", "language")

# Prompt templates sent verbatim to the persona-generation backend. The
# backend is asked to reply with the persona document itself.
PERSONA_PROMPT_EN = """\
Look at the object in this image and invent an anthropomorphic persona for it,
as if the object could talk. Reply with a single JSON object containing exactly
these fields:
  "name": a short, friendly given name for the object
  "gender": free text (e.g. "female", "male", "none")
  "age": free text (e.g. "about 3 years", "ancient")
  "personality": one or two sentences describing its character
  "backstory": one or two sentences of background story
  "voice": exactly one of ELDERLY_FEMALE, YOUNG_FEMALE, CHILD_FEMALE,
           ELDERLY_MALE, YOUNG_MALE, CHILD_MALE, NEUTRAL, chosen to suit
           the persona
  "language": "en"
Write all free-text fields in English. Output only the JSON object.
"""

PERSONA_PROMPT_ZH = """\
请观察图片中的物体，为它虚构一个拟人化的角色设定，就像这个物体会说话一样。
请只输出一个 JSON 对象，且必须恰好包含以下字段：
  "name"：一个简短、亲切的名字
  "gender"：自由文本（如“女”、“男”、“无”）
  "age"：自由文本（如“大约三岁”、“非常古老”）
  "personality"：一两句话描述它的性格
  "backstory"：一两句话的背景故事
  "voice"：从 ELDERLY_FEMALE, YOUNG_FEMALE, CHILD_FEMALE, ELDERLY_MALE,
           YOUNG_MALE, CHILD_MALE, NEUTRAL 中选择最合适的一个
  "language"："zh"
所有自由文本字段请使用中文。只输出 JSON 对象本身。
"""


def prompt_for_language(language: str) -> str:
    if language == "zh":
        return PERSONA_PROMPT_ZH
    if language == "en":
        return PERSONA_PROMPT_EN
    raise InvalidLanguage(f"unsupported language: {language!r}")


@dataclass(frozen=True)
class Persona:
    name: str
    gender: str
    age: str
    personality: str
    backstory: str
    voice: VoiceId
    language: str

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "gender": self.gender,
            "age": self.age,
            "personality": self.personality,
            "backstory": self.backstory,
            "voice": self.voice.value,
            "language": self.language,
        }

    def to_json(self) -> str:
        """Canonical serialization: schema key order, UTF-8, two-space indent."""
        return json.dumps(self.to_document(), ensure_ascii=False, indent=2) + "\n"


def validate_persona(document: str) -> Persona:
    """Parse and type-check a persona document."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("persona document must be a JSON object")
    for extra in set(raw) - set(FIELDS):
        raise ParseError(f"unexpected field: {extra}")
    for field in FIELDS:
        if field not in raw:
            raise MissingField(field)
        if not isinstance(raw[field], str):
            raise ParseError(f"field {field!r} must be a string")
    if not raw["name"].strip():
        raise MissingField("name")
    try:
        voice = VoiceId(raw["voice"])
    except ValueError:
        raise InvalidVoice(f"not a supported voice: {raw['voice']!r}") from None
    if raw["language"] not in LANGUAGES:
        raise InvalidLanguage(f"language must be one of {LANGUAGES}, got {raw['language']!r}")
    return Persona(
        name=raw["name"],
        gender=raw["gender"],
        age=raw["age"],
        personality=raw["personality"],
        backstory=raw["backstory"],
        voice=voice,
        language=raw["language"],
    )


def generate_persona(frame, language: str, backend) -> Persona:
    """Ask the generation backend for a persona of the object in the frame.

    The in-repo prompt template is sent verbatim. A backend response that
    fails the schema gets one retry, then the failure surfaces.
    """
    prompt = prompt_for_language(language)
    last_error: Exception | None = None
    for _ in range(2):
        document = backend.generate(frame, language, prompt)
        try:
            persona = validate_persona(document)
        except (ParseError, MissingField, InvalidVoice, InvalidLanguage) as exc:
            last_error = exc
            continue
        if persona.language != language:
            last_error = InvalidGeneration(
                f"backend answered in {persona.language!r}, wanted {language!r}"
            )
            continue
        return persona
    raise InvalidGeneration(f"backend output failed persona schema: {last_error}")


class PersonaStore:
    """One JSON document per registered class under root/personas/."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def path(self, class_id: int) -> Path:
        return self.root / "personas" / f"{class_id}.json"

    def save(self, class_id: int, persona: Persona) -> Path:
        path = self.path(class_id)
        tmp = path.with_suffix(".json.tmp")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp.write_text(persona.to_json(), encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"cannot write persona {class_id}: {exc}") from exc
        return path

    def load(self, class_id: int) -> Persona:
        path = self.path(class_id)
        if not path.exists():
            raise NotFound(f"no persona stored for class {class_id}")
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read persona {class_id}: {exc}") from exc
        return validate_persona(text)

    def known_ids(self) -> list[int]:
        base = self.root / "personas"
        if not base.is_dir():
            return []
        return sorted(int(p.stem) for p in base.glob("*.json"))


def edit_persona(persona: Persona, overrides: dict) -> Persona:
    """Apply partial field overrides, leaving everything else untouched."""
    updates: dict = {}
    for field, value in overrides.items():
        if field not in FIELDS:
            raise UnknownField(field)
        if field == "voice":
            if isinstance(value, VoiceId):
                updates["voice"] = value
            else:
                try:
                    updates["voice"] = VoiceId(str(value))
                except ValueError:
                    raise InvalidVoice(f"not a supported voice: {value!r}") from None
        elif field == "language":
            if value not in LANGUAGES:
                raise InvalidLanguage(f"language must be one of {LANGUAGES}, got {value!r}")
            updates["language"] = value
        else:
            updates[field] = str(value)
    edited = replace(persona, **updates)
    # Re-validate so an override can never smuggle in an invalid document.
    return validate_persona(edited.to_json())
