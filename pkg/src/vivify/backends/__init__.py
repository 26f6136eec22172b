from .base import (
    BackendConfig,
    BackendKind,
    CapabilitySet,
    ChatModel,
    DetectorBackend,
    PersonaGenerator,
    Segmenter,
    Synthesizer,
    Trainer,
    Transcriber,
)
from .http import (
    HttpChat,
    HttpPersonaGenerator,
    HttpSegmenter,
    HttpSynthesizer,
    HttpTranscriber,
    http_call,
)
from .mock import (
    MockChat,
    MockDetector,
    MockModel,
    MockPersonaGenerator,
    MockSegmenter,
    MockSynthesizer,
    MockTrainer,
    MockTranscriber,
    make_mock_capabilities,
    tone_frequency,
)
from .server import CapabilityServer

__all__ = [
    "BackendConfig",
    "BackendKind",
    "CapabilitySet",
    "CapabilityServer",
    "ChatModel",
    "DetectorBackend",
    "HttpChat",
    "HttpPersonaGenerator",
    "HttpSegmenter",
    "HttpSynthesizer",
    "HttpTranscriber",
    "MockChat",
    "MockDetector",
    "MockModel",
    "MockPersonaGenerator",
    "MockSegmenter",
    "MockSynthesizer",
    "MockTrainer",
    "MockTranscriber",
    "PersonaGenerator",
    "Segmenter",
    "Synthesizer",
    "Trainer",
    "Transcriber",
    "http_call",
    "make_mock_capabilities",
    "tone_frequency",
]
