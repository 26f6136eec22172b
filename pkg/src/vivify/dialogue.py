"""Bonding-cycle machinery: bounded chat memory, persona-conditioned chat
requests, marker segmentation, parallel synthesis with ordered playback,
and timing metrics.
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import EmptyTranscript, IoFailure, SynthFailure
from .persona import Persona

DEFAULT_MARKER = "§"
HISTORY_CAPACITY = 10
SAMPLE_RATE = 16000
DEFAULT_PARALLELISM = 2

# System prompt rendered from the persona. The marker instruction tells the
# chat model where to cut the reply so synthesis can run on short segments.
SYSTEM_TEMPLATE_EN = (
    'You are "{name}", an everyday object brought to life. '
    "Gender: {gender}. Age: {age}. Personality: {personality} "
    "Backstory: {backstory} "
    "Stay in character and answer in English. "
    'After every sentence or natural breathing pause, insert the marker "{marker}".'
)

SYSTEM_TEMPLATE_ZH = (
    "你是“{name}”，一件被赋予生命的日常物品。"
    "性别：{gender}。年龄：{age}。性格：{personality}"
    "背景故事：{backstory}"
    "请保持角色设定，用中文回答。"
    "在每个句子结束或自然换气处插入标记“{marker}”。"
)


class Role(Enum):
    USER = "USER"
    OBJECT = "OBJECT"


@dataclass(frozen=True)
class ChatRecord:
    role: Role
    text: str
    timestamp_ms: int

    def __post_init__(self):
        if not self.text:
            raise ValueError("chat record text must be non-empty")


@dataclass
class ChatHistory:
    """Ordered record list bounded to the most recent complete cycles.

    Capacity is 10 records = 5 user/object cycles. When an append would
    exceed capacity, the oldest user+object pair is evicted first, so the
    retained records always start at a user message.
    """

    records: list[ChatRecord] = field(default_factory=list)
    capacity: int = HISTORY_CAPACITY

    def append(self, record: ChatRecord) -> None:
        while len(self.records) >= self.capacity:
            del self.records[:2]
        self.records.append(record)

    def copy(self) -> "ChatHistory":
        return ChatHistory(records=list(self.records), capacity=self.capacity)

    def __len__(self) -> int:
        return len(self.records)

    def to_document(self) -> list[dict]:
        return [
            {"role": r.role.value, "text": r.text, "timestamp": r.timestamp_ms}
            for r in self.records
        ]

    @classmethod
    def from_document(cls, doc: list[dict], capacity: int = HISTORY_CAPACITY) -> "ChatHistory":
        records = [
            ChatRecord(role=Role(d["role"]), text=d["text"], timestamp_ms=d["timestamp"])
            for d in doc
        ]
        return cls(records=records, capacity=capacity)


def append_with_eviction(history: ChatHistory, record: ChatRecord) -> ChatHistory:
    history.append(record)
    return history


class HistoryStore:
    """One JSON record list per class under root/history/."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def path(self, class_id: int) -> Path:
        return self.root / "history" / f"{class_id}.json"

    def load(self, class_id: int) -> ChatHistory:
        path = self.path(class_id)
        if not path.exists():
            return ChatHistory()
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(f"cannot read history {class_id}: {exc}") from exc
        return ChatHistory.from_document(doc)

    def save(self, class_id: int, history: ChatHistory) -> Path:
        path = self.path(class_id)
        tmp = path.with_suffix(".json.tmp")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            text = json.dumps(history.to_document(), ensure_ascii=False, indent=2) + "\n"
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"cannot write history {class_id}: {exc}") from exc
        return path


def build_chat_request(
    persona: Persona,
    history: ChatHistory,
    user_text: str,
    marker: str = DEFAULT_MARKER,
    temperature: float = 0.7,
    max_tokens: int = 256,
) -> dict:
    """Assemble the chat request document.

    Messages: persona system prompt, then the history in order with roles
    mapped USER->user / OBJECT->assistant, then the new user message. The
    meta block carries the fields deterministic backends key off.
    """
    template = SYSTEM_TEMPLATE_ZH if persona.language == "zh" else SYSTEM_TEMPLATE_EN
    system = template.format(
        name=persona.name,
        gender=persona.gender,
        age=persona.age,
        personality=persona.personality,
        backstory=persona.backstory,
        marker=marker,
    )
    messages = [{"role": "system", "content": system}]
    for record in history.records:
        role = "user" if record.role is Role.USER else "assistant"
        messages.append({"role": role, "content": record.text})
    messages.append({"role": "user", "content": user_text})
    return {
        "messages": messages,
        "temperature": temperature,
        "max_tokens": max_tokens,
        "meta": {
            "persona_name": persona.name,
            "language": persona.language,
            "marker": marker,
            "history_records": len(history.records),
        },
    }


@dataclass(frozen=True)
class SegmentedResponse:
    segments: list[str]
    marker: str


def segment_response(text: str, marker: str = DEFAULT_MARKER) -> SegmentedResponse:
    """Split a reply on the synthesis marker, dropping empty fragments."""
    segments = [part.strip() for part in text.split(marker)]
    segments = [s for s in segments if s]
    return SegmentedResponse(segments=segments, marker=marker)


def plain_text(response: SegmentedResponse) -> str:
    """Marker-free reply text, one space between segments."""
    return " ".join(response.segments)


@dataclass(frozen=True)
class AudioClip:
    segment_index: int
    samples: bytes  # PCM16 little-endian, mono, 16 kHz
    synth_ms: float

    @property
    def sample_count(self) -> int:
        return len(self.samples) // 2

    @property
    def duration_ms(self) -> float:
        return self.sample_count / SAMPLE_RATE * 1000.0


@dataclass(frozen=True)
class RecordedAudio:
    """Push-to-talk capture. Simulated recordings embed the utterance text."""

    samples: bytes  # PCM16 little-endian, mono, 16 kHz
    text_payload: str | None = None

    @property
    def duration_ms(self) -> float:
        return len(self.samples) // 2 / SAMPLE_RATE * 1000.0


def synthesize_ordered(
    segments: list[str],
    voice,
    backend,
    parallelism: int = DEFAULT_PARALLELISM,
) -> list[AudioClip]:
    """Synthesize all segments with up to `parallelism` concurrent backend
    calls, returning clips strictly in segment order.

    Every segment is attempted even if an earlier one fails; a failure then
    surfaces as SynthFailure carrying the successful clips so the caller can
    play the prefix before the gap.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if not segments:
        return []
    results: list[AudioClip | None] = [None] * len(segments)
    failures: list[tuple[int, Exception]] = []
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = {
            pool.submit(backend.synthesize, text, voice): index
            for index, text in enumerate(segments)
        }
        for future, index in futures.items():
            try:
                samples, synth_ms = future.result()
                results[index] = AudioClip(segment_index=index, samples=samples, synth_ms=synth_ms)
            except Exception as exc:  # noqa: BLE001 - backend fault boundary
                failures.append((index, exc))
    clips = [clip for clip in results if clip is not None]
    if failures:
        failures.sort()
        raise SynthFailure(segment_index=failures[0][0], clips=clips)
    return clips


def playable_prefix(clips: list[AudioClip]) -> list[AudioClip]:
    """Clips up to (not past) the first missing segment index."""
    out = []
    for expected, clip in enumerate(sorted(clips, key=lambda c: c.segment_index)):
        if clip.segment_index != expected:
            break
        out.append(clip)
    return out


def transcribe(audio: RecordedAudio, backend, language: str) -> str:
    """Speech-to-text over the recorded capture."""
    if not audio.samples:
        raise ValueError("recorded audio must be non-empty")
    text = backend.transcribe(audio, language)
    if not text or not text.strip():
        raise EmptyTranscript("transcriber returned no text")
    return text


def rtf(clip: AudioClip) -> float:
    """Real-time factor: synthesis wall time over produced audio duration."""
    if clip.sample_count == 0:
        raise ValueError("audio clip must be non-empty")
    if clip.synth_ms == 0:
        return 0.0
    return clip.synth_ms / clip.duration_ms


# --- audio container IO ---
#
# Plain clips are standard WAV (PCM16 mono 16 kHz). Simulated recordings are
# the same WAV with one extra "utxt" chunk holding the UTF-8 utterance, so a
# recording survives a trip through files or the /stt wire format intact.

_WAVE_FMT = struct.Struct("<HHIIHH")


def _wav_chunks(samples: bytes, extra: list[tuple[bytes, bytes]]) -> bytes:
    fmt = _WAVE_FMT.pack(1, 1, SAMPLE_RATE, SAMPLE_RATE * 2, 2, 16)
    chunks = [(b"fmt ", fmt)] + extra + [(b"data", samples)]
    body = bytearray(b"WAVE")
    for tag, payload in chunks:
        body += tag + struct.pack("<I", len(payload)) + payload
        if len(payload) % 2:
            body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + bytes(body)


def wav_bytes(samples: bytes) -> bytes:
    return _wav_chunks(samples, [])


def write_wav(path: Path | str, samples: bytes) -> None:
    try:
        Path(path).write_bytes(wav_bytes(samples))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def recorded_to_bytes(audio: RecordedAudio) -> bytes:
    extra = []
    if audio.text_payload is not None:
        extra.append((b"utxt", audio.text_payload.encode("utf-8")))
    return _wav_chunks(audio.samples, extra)


def recorded_from_bytes(data: bytes) -> RecordedAudio:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError("not a RIFF/WAVE container")
    pos = 12
    samples = b""
    text: str | None = None
    while pos + 8 <= len(data):
        tag = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        payload = data[pos + 8 : pos + 8 + size]
        if tag == b"data":
            samples = payload
        elif tag == b"utxt":
            text = payload.decode("utf-8")
        pos += 8 + size + (size % 2)
    return RecordedAudio(samples=samples, text_payload=text)
