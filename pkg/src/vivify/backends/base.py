"""Capability boundary: one pluggable backend per model the engine calls."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from enum import Enum


class BackendKind(Enum):
    MOCK = "MOCK"
    HTTP = "HTTP"


@dataclass
class BackendConfig:
    kind: BackendKind = BackendKind.MOCK
    endpoint: str | None = None
    api_key_env: str | None = None  # name of the env var holding the key
    timeout_ms: int = 10000
    retries: int = 2

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = BackendKind(self.kind)
        if self.kind is BackendKind.HTTP and not self.endpoint:
            raise ValueError("HTTP backend requires an endpoint")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


class Segmenter(ABC):
    @abstractmethod
    def segment(self, frame):
        """Return the single most salient Mask in the frame."""


class Trainer(ABC):
    @abstractmethod
    def train(self, dataset, prev, epochs: int, patience: int):
        """Train (or extend) a model over the dataset; returns a model handle."""

    def save_model(self, model, root) -> None:
        raise NotImplementedError(f"{type(self).__name__} cannot persist models")

    def load_model(self, root):
        raise NotImplementedError(f"{type(self).__name__} cannot load models")


class DetectorBackend(ABC):
    @abstractmethod
    def run(self, frame, model) -> list[tuple]:
        """Return raw (class_id, BBox, confidence) tuples, unfiltered."""


class PersonaGenerator(ABC):
    @abstractmethod
    def generate(self, frame, language: str, prompt: str) -> str:
        """Return a persona JSON document for the object in the frame."""


class Transcriber(ABC):
    @abstractmethod
    def transcribe(self, audio, language: str) -> str:
        """Speech-to-text over a RecordedAudio capture."""


class ChatModel(ABC):
    @abstractmethod
    def complete(self, request: dict) -> str:
        """Return the reply text (with segmentation markers) for a chat request."""


class Synthesizer(ABC):
    @abstractmethod
    def synthesize(self, text: str, voice) -> tuple[bytes, float]:
        """Return (PCM16LE mono 16 kHz samples, synthesis wall time in ms)."""


@dataclass
class CapabilitySet:
    """The seven slots a session needs before it can start."""

    segmenter: Segmenter
    trainer: Trainer
    detector: DetectorBackend
    persona_generator: PersonaGenerator
    transcriber: Transcriber
    chat: ChatModel
    synthesizer: Synthesizer

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) is None:
                raise ValueError(f"capability slot {f.name!r} is not populated")
