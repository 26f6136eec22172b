"""JSON-over-HTTP adapters for external inference services.

Per-capability routes: POST /segment, /persona, /chat, /stt, /tts. Request
and response payloads are defined here and shared with the capability
server, so a mock set served over HTTP is indistinguishable from in-process
mocks.
"""

from __future__ import annotations

import base64
import os
import time

import numpy as np
import requests

from ..dialogue import SAMPLE_RATE, RecordedAudio, recorded_from_bytes, recorded_to_bytes
from ..errors import BackendTimeout, RemoteError, SchemaError, TransportError
from ..persona import VoiceId
from ..protocol import ScopeFrame
from ..vision import Mask, frame_to_array
from .base import (
    BackendConfig,
    BackendKind,
    ChatModel,
    PersonaGenerator,
    Segmenter,
    Synthesizer,
    Transcriber,
)

BACKOFF_BASE_MS = 250
BACKOFF_FACTOR = 2

ROUTES = ("/segment", "/persona", "/chat", "/stt", "/tts")


def http_call(config: BackendConfig, route: str, payload: dict) -> dict:
    """POST a JSON payload; retry transport failures and 5xx with
    exponential backoff. 4xx and schema problems are never retried."""
    if config.kind is not BackendKind.HTTP:
        raise ValueError("http_call requires an HTTP backend config")
    url = config.endpoint.rstrip("/") + route
    headers = {"Content-Type": "application/json"}
    if config.api_key_env:
        key = os.environ.get(config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
    attempts = config.retries + 1
    last_exc: Exception | None = None
    for attempt in range(attempts):
        if attempt:
            time.sleep(BACKOFF_BASE_MS * BACKOFF_FACTOR ** (attempt - 1) / 1000.0)
        try:
            response = requests.post(
                url, json=payload, headers=headers, timeout=config.timeout_ms / 1000.0
            )
        except requests.Timeout as exc:
            last_exc = BackendTimeout(f"{url}: {exc}")
            continue
        except requests.RequestException as exc:
            last_exc = TransportError(f"{url}: {exc}")
            continue
        if 200 <= response.status_code < 300:
            try:
                body = response.json()
            except ValueError as exc:
                raise SchemaError(f"{url}: response is not JSON: {exc}") from exc
            if not isinstance(body, dict):
                raise SchemaError(f"{url}: response must be a JSON object")
            return body
        if 500 <= response.status_code < 600:
            last_exc = RemoteError(response.status_code, response.text)
            continue
        raise RemoteError(response.status_code, response.text)
    raise last_exc  # type: ignore[misc]


def _field(body: dict, key: str, kind: type):
    if key not in body:
        raise SchemaError(f"response missing field {key!r}")
    value = body[key]
    if not isinstance(value, kind):
        raise SchemaError(f"field {key!r} must be {kind.__name__}")
    return value


def frame_payload(frame: ScopeFrame) -> dict:
    return {
        "image_b64": base64.b64encode(frame.pixels).decode("ascii"),
        "width": frame.width,
        "height": frame.height,
    }


def frame_from_payload(payload: dict, sequence: int = 0) -> ScopeFrame:
    pixels = base64.b64decode(_field(payload, "image_b64", str))
    return ScopeFrame(
        sequence=sequence,
        timestamp_ms=0,
        width=_field(payload, "width", int),
        height=_field(payload, "height", int),
        pixels=pixels,
    )


def mask_payload(mask: Mask) -> dict:
    return {
        "mask_b64": base64.b64encode(mask.bits.astype(np.uint8).tobytes()).decode("ascii"),
        "width": mask.width,
        "height": mask.height,
    }


def mask_from_payload(payload: dict) -> Mask:
    width = _field(payload, "width", int)
    height = _field(payload, "height", int)
    raw = base64.b64decode(_field(payload, "mask_b64", str))
    if len(raw) != width * height:
        raise SchemaError(f"mask payload is {len(raw)} bytes for {width}x{height}")
    bits = np.frombuffer(raw, dtype=np.uint8).reshape(height, width).astype(bool)
    return Mask(width=width, height=height, bits=bits)


class HttpSegmenter(Segmenter):
    def __init__(self, config: BackendConfig):
        self.config = config

    def segment(self, frame) -> Mask:
        body = http_call(self.config, "/segment", frame_payload(frame))
        return mask_from_payload(body)


class HttpPersonaGenerator(PersonaGenerator):
    def __init__(self, config: BackendConfig):
        self.config = config

    def generate(self, frame, language: str, prompt: str) -> str:
        import json

        payload = frame_payload(frame)
        payload["language"] = language
        payload["prompt"] = prompt
        body = http_call(self.config, "/persona", payload)
        return json.dumps(body, ensure_ascii=False)


class HttpTranscriber(Transcriber):
    def __init__(self, config: BackendConfig):
        self.config = config

    def transcribe(self, audio: RecordedAudio, language: str) -> str:
        payload = {
            "audio_b64": base64.b64encode(recorded_to_bytes(audio)).decode("ascii"),
            "language": language,
        }
        body = http_call(self.config, "/stt", payload)
        return _field(body, "text", str)


class HttpChat(ChatModel):
    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(self, request: dict) -> str:
        body = http_call(self.config, "/chat", request)
        return _field(body, "text", str)


class HttpSynthesizer(Synthesizer):
    def __init__(self, config: BackendConfig):
        self.config = config

    def synthesize(self, text: str, voice) -> tuple[bytes, float]:
        payload = {
            "text": text,
            "voice": VoiceId(voice).value,
            "sample_rate": SAMPLE_RATE,
        }
        body = http_call(self.config, "/tts", payload)
        samples = base64.b64decode(_field(body, "pcm_b64", str))
        synth_ms = body.get("synth_ms")
        if not isinstance(synth_ms, (int, float)):
            raise SchemaError("field 'synth_ms' must be a number")
        return samples, float(synth_ms)


def decode_stt_payload(payload: dict) -> tuple[RecordedAudio, str]:
    audio = recorded_from_bytes(base64.b64decode(_field(payload, "audio_b64", str)))
    return audio, _field(payload, "language", str)
