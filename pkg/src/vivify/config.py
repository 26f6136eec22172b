"""Engine configuration: JSON file, environment, and flag overrides.

Precedence is flags > environment > file > defaults. The file mirrors
BackendConfig per capability slot plus the engine thresholds.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .backends.base import BackendConfig, BackendKind
from .backends.http import (
    HttpChat,
    HttpPersonaGenerator,
    HttpSegmenter,
    HttpSynthesizer,
    HttpTranscriber,
)
from .backends.mock import (
    MockChat,
    MockDetector,
    MockPersonaGenerator,
    MockSegmenter,
    MockSynthesizer,
    MockTrainer,
    MockTranscriber,
)
from .backends.base import CapabilitySet

CAPABILITY_SLOTS = (
    "segmenter",
    "trainer",
    "detector",
    "persona_generator",
    "transcriber",
    "chat",
    "synthesizer",
)

# Slots carried by the HTTP adapter; trainer and detector run in-process.
HTTP_SLOTS = ("segmenter", "persona_generator", "transcriber", "chat", "synthesizer")

ENV_PREFIX = "VIVIFY_"


@dataclass
class EngineConfig:
    workspace: Path = Path("workspace")
    slots: dict = field(default_factory=dict)  # capability name -> BackendConfig
    confidence_threshold: float = 0.75
    grace_ms: int = 2000
    marker: str = "§"
    parallelism: int = 2
    acquaint_frames: int = 100
    dataset_seed: int = 0
    scene_seed: int = 1
    fps: int = 20
    temperature: float = 0.7
    max_tokens: int = 256
    max_record_ms: int = 30000

    def __post_init__(self):
        self.workspace = Path(self.workspace)
        for name in CAPABILITY_SLOTS:
            self.slots.setdefault(name, BackendConfig())


_FLOAT_KEYS = ("confidence_threshold", "temperature")
_INT_KEYS = (
    "grace_ms",
    "parallelism",
    "acquaint_frames",
    "dataset_seed",
    "scene_seed",
    "fps",
    "max_tokens",
    "max_record_ms",
)
_STR_KEYS = ("marker",)


def _coerce(key: str, value):
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    return value


def load_config(path: Path | str | None = None, env: dict | None = None,
                flags: dict | None = None) -> EngineConfig:
    env = os.environ if env is None else env
    flags = flags or {}
    values: dict = {}
    slots: dict[str, BackendConfig] = {}

    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        for key, value in doc.items():
            if key == "backends":
                for slot, raw in value.items():
                    if slot not in CAPABILITY_SLOTS:
                        raise ValueError(f"unknown capability slot {slot!r}")
                    slots[slot] = BackendConfig(**raw)
            elif key == "workspace":
                values["workspace"] = Path(value)
            else:
                values[key] = _coerce(key, value)

    for key in ("workspace",) + _FLOAT_KEYS + _INT_KEYS + _STR_KEYS:
        env_name = ENV_PREFIX + key.upper()
        if env_name in env:
            values[key] = _coerce(key, env[env_name])

    # A blanket backend kind switches every switchable slot at once.
    backends_kind = flags.get("backends") or env.get(ENV_PREFIX + "BACKENDS")
    endpoint = flags.get("endpoint") or env.get(ENV_PREFIX + "ENDPOINT")
    if backends_kind:
        kind = BackendKind(backends_kind.upper())
        if kind is BackendKind.HTTP:
            if not endpoint:
                raise ValueError("http backends need an endpoint (--endpoint or VIVIFY_ENDPOINT)")
            for slot in HTTP_SLOTS:
                slots[slot] = BackendConfig(kind=kind, endpoint=endpoint)
        else:
            for slot in CAPABILITY_SLOTS:
                slots[slot] = BackendConfig(kind=kind)

    for key, value in flags.items():
        if key in ("backends", "endpoint") or value is None:
            continue
        if key == "workspace":
            values["workspace"] = Path(value)
        else:
            values[key] = _coerce(key, value)

    config = EngineConfig(**values)
    config.slots.update(slots)
    return config


def build_capabilities(config: EngineConfig, clock=None) -> CapabilitySet:
    """Wire the configured backend for every capability slot."""

    def pick(slot: str, mock_factory, http_factory=None):
        backend_config = config.slots[slot]
        if backend_config.kind is BackendKind.MOCK:
            return mock_factory()
        if http_factory is None:
            raise ValueError(f"capability {slot!r} has no HTTP carrier; it runs in-process")
        return http_factory(backend_config)

    return CapabilitySet(
        segmenter=pick("segmenter", MockSegmenter, HttpSegmenter),
        trainer=pick("trainer", MockTrainer),
        detector=pick("detector", lambda: MockDetector(clock=clock)),
        persona_generator=pick("persona_generator", MockPersonaGenerator, HttpPersonaGenerator),
        transcriber=pick("transcriber", MockTranscriber, HttpTranscriber),
        chat=pick("chat", MockChat, HttpChat),
        synthesizer=pick("synthesizer", MockSynthesizer, HttpSynthesizer),
    )
