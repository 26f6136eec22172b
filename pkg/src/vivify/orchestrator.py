"""Session state machine binding the pipeline: wand events, active-object
tracking with persona/history retrieval, the acquaintance procedure, and
the full push-to-talk bonding cycle.
"""

from __future__ import annotations

import json
import os
import shutil
import statistics
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .backends.base import CapabilitySet
from .clock import RealClock
from .config import EngineConfig
from .dialogue import (
    ChatHistory,
    ChatRecord,
    HistoryStore,
    RecordedAudio,
    Role,
    build_chat_request,
    plain_text,
    playable_prefix,
    rtf,
    segment_response,
    synthesize_ordered,
    transcribe,
)
from .errors import (
    BackendFailure,
    EmptyMask,
    EmptyTranscript,
    NotFound,
    SynthFailure,
)
from .persona import PersonaStore, edit_persona, generate_persona
from .protocol import ControlKind, ControlMessage, ScopeFrame, WandKind, WandMessage
from .vision import (
    AnnotatedSample,
    Dataset,
    Detection,
    build_dataset,
    collect_frames,
    detect,
    mask_to_bbox,
    read_annotations,
    register_class,
    write_annotations,
)


class Phase(Enum):
    IDLE = "IDLE"
    TRACKING = "TRACKING"
    RECORDING = "RECORDING"
    TRANSCRIBING = "TRANSCRIBING"
    GENERATING = "GENERATING"
    SPEAKING = "SPEAKING"


@dataclass(frozen=True)
class SessionState:
    phase: Phase
    class_id: int | None = None


IDLE = SessionState(Phase.IDLE)

# Phases during which frames are observed but never switch the active object.
BUSY_PHASES = (Phase.RECORDING, Phase.TRANSCRIBING, Phase.GENERATING, Phase.SPEAKING)


def wand_transition(state: SessionState, msg: WandMessage) -> tuple[SessionState, list[ControlMessage]]:
    """Pure wand transition table. Pairs outside the table are identity."""
    if msg.kind is WandKind.TOUCH_DOWN:
        if state.phase is Phase.TRACKING:
            return (
                SessionState(Phase.RECORDING, state.class_id),
                [ControlMessage(ControlKind.RECORD_STARTED, msg.sequence)],
            )
        if state.phase is Phase.IDLE:
            return state, [ControlMessage(ControlKind.RECORD_REJECTED, msg.sequence)]
        return state, []
    # TOUCH_UP
    if state.phase is Phase.RECORDING:
        return (
            SessionState(Phase.TRANSCRIBING, state.class_id),
            [ControlMessage(ControlKind.VIBRATE_OFF, msg.sequence)],
        )
    return state, []


def frame_transition(
    state: SessionState,
    top_class: int | None,
    now_ms: float,
    last_seen_ms: float,
    grace_ms: int,
) -> SessionState:
    """Pure frame transition: detections drive TRACKING, silence past the
    grace period drops to IDLE, busy phases never move."""
    if state.phase in BUSY_PHASES:
        return state
    if top_class is not None:
        return SessionState(Phase.TRACKING, top_class)
    if state.phase is Phase.TRACKING and now_ms - last_seen_ms <= grace_ms:
        return state
    return IDLE


@dataclass
class ObjectProfile:
    class_id: int
    label: str
    persona_path: str
    history_path: str
    registered_at: int

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "label": self.label,
            "persona_path": self.persona_path,
            "history_path": self.history_path,
            "registered_at": self.registered_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ObjectProfile":
        return cls(**doc)


class ObjectRegistry:
    """class_id -> profile map plus the currently active object."""

    def __init__(self):
        self.profiles: dict[int, ObjectProfile] = {}
        self.active: int | None = None

    def add(self, profile: ObjectProfile) -> None:
        self.profiles[profile.class_id] = profile

    def get(self, class_id: int) -> ObjectProfile:
        if class_id not in self.profiles:
            raise NotFound(f"no profile for class {class_id}")
        return self.profiles[class_id]

    def next_class_id(self) -> int:
        return max(self.profiles, default=-1) + 1

    def labels(self) -> list[str]:
        return [self.profiles[cid].label for cid in sorted(self.profiles)]

    def save(self, path: Path) -> None:
        doc = [self.profiles[cid].to_dict() for cid in sorted(self.profiles)]
        tmp = path.with_suffix(".json.tmp")
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: Path) -> "ObjectRegistry":
        registry = cls()
        if path.exists():
            for raw in json.loads(path.read_text(encoding="utf-8")):
                registry.add(ObjectProfile.from_dict(raw))
        return registry


@dataclass
class CycleResult:
    class_id: int
    user_text: str | None = None
    reply_text: str | None = None
    segments: list[str] = field(default_factory=list)
    clips: list = field(default_factory=list)  # every synthesized AudioClip, ordered
    played: list = field(default_factory=list)  # prefix actually played
    input_ms: float = 0.0
    skipped: bool = False
    error: str | None = None


class MetricsCollector:
    """Session timing metrics: input durations, per-segment synthesis times,
    and real-time factors."""

    def __init__(self):
        self.cycles = 0
        self.input_ms: list[float] = []
        self.synth_ms: list[float] = []
        self.rtf: list[float] = []

    def record(self, result: CycleResult) -> None:
        self.cycles += 1
        self.input_ms.append(result.input_ms)
        for clip in result.clips:
            self.synth_ms.append(clip.synth_ms)
            self.rtf.append(rtf(clip))

    @staticmethod
    def _stats(values: list[float]) -> tuple[float, float]:
        if not values:
            return 0.0, 0.0
        return statistics.fmean(values), statistics.pstdev(values)

    def to_text(self) -> str:
        input_mean, input_sd = self._stats(self.input_ms)
        synth_mean, synth_sd = self._stats(self.synth_ms)
        rtf_mean, rtf_sd = self._stats(self.rtf)
        lines = [
            f"cycles = {self.cycles}",
            f"segments = {len(self.synth_ms)}",
            f"input_ms_mean = {input_mean:.6f}",
            f"input_ms_sd = {input_sd:.6f}",
            f"synth_ms_mean = {synth_mean:.6f}",
            f"synth_ms_sd = {synth_sd:.6f}",
            f"rtf_mean = {rtf_mean:.6f}",
            f"rtf_sd = {rtf_sd:.6f}",
        ]
        return "\n".join(lines) + "\n"


class SimMicrophone:
    """Queue-fed microphone for simulated and typed input."""

    def __init__(self, utterances: list[str] | None = None):
        self._queue: list[str] = list(utterances or [])

    def push(self, text: str) -> None:
        self._queue.append(text)

    def capture(self, duration_ms: float) -> RecordedAudio:
        from .devsim import make_recording

        text = self._queue.pop(0) if self._queue else ""
        return make_recording(text, int(duration_ms))


class Engine:
    """One logical session loop owning all state.

    Frames and wand events are handed to handle_frame/handle_wand by the
    hosting loop (CLI, scripted runner, or session server); bonding cycles
    run synchronously inside handle_wand when recording stops.
    """

    def __init__(
        self,
        config: EngineConfig,
        capabilities: CapabilitySet,
        clock=None,
        microphone=None,
        playback=None,
        emit=None,
    ):
        capabilities.validate()
        self.config = config
        self.capabilities = capabilities
        self.clock = clock or RealClock()
        self.microphone = microphone or SimMicrophone()
        self.playback = playback  # callable(profile, cycle_index, AudioClip) -> optional path
        self._emit_cb = emit  # callable(type, payload)
        self.workspace = Path(config.workspace)
        self.persona_store = PersonaStore(self.workspace)
        self.history_store = HistoryStore(self.workspace)
        self.registry = ObjectRegistry.load(self.workspace / "registry.json")
        self.model = None
        model_dir = self.workspace / "model"
        if model_dir.is_dir():
            self.model = capabilities.trainer.load_model(model_dir)
        self.state = IDLE
        self.metrics = MetricsCollector()
        self.cycle_count = 0
        self._record_started_ms = 0.0
        self._last_seen_ms = -1e12
        self._last_seen_class: int | None = None

    # -- events --------------------------------------------------------

    def emit(self, event_type: str, payload: dict) -> None:
        if self._emit_cb is not None:
            self._emit_cb(event_type, payload)

    def _set_state(self, state: SessionState) -> None:
        if state != self.state:
            self.state = state
            payload = {"phase": state.phase.value, "class_id": state.class_id}
            self.emit("STATE", payload)

    # -- acquaintance ---------------------------------------------------

    def _class_store_dir(self, class_id: int) -> Path:
        return self.workspace / "datasets" / f"class_{class_id}"

    def _registration_dir(self, class_id: int) -> Path:
        return self.workspace / "datasets" / f"reg_{class_id}"

    def acquaint(self, source, language: str, label: str | None = None) -> ObjectProfile:
        """Register a new object: collect frames, segment, build the split
        dataset over all cached classes, retrain, and store the persona.

        All writes stage under a scratch directory and move into place only
        after every stage succeeded, so a failure leaves the registry and
        stores byte-identical to their pre-call content.
        """
        class_id = self.registry.next_class_id()
        label = label or f"object{class_id}"
        frames = collect_frames(source, self.config.acquaint_frames)

        samples: list[AnnotatedSample] = []
        for frame in frames:
            mask = self.capabilities.segmenter.segment(frame)
            if mask.empty:
                raise EmptyMask(f"no salient region in frame {frame.sequence}")
            samples.append(AnnotatedSample(frame=frame, class_id=class_id, bbox=mask_to_bbox(mask)))

        persona = generate_persona(frames[0], language, self.capabilities.persona_generator)

        staging = self.workspace / "staging" / f"reg_{class_id}"
        if staging.exists():
            shutil.rmtree(staging)
        try:
            # Per-class raw store (unsplit): the cache later unions draw from.
            class_names = self.registry.labels() + [label]
            class_store = Dataset(train=samples, class_names=class_names)
            write_annotations(class_store, staging / "class_store")

            union = list(samples)
            for cid in sorted(self.registry.profiles):
                union.extend(read_annotations(self._class_store_dir(cid)))
            union.sort(key=lambda s: (s.class_id, s.frame.sequence))
            dataset = build_dataset(union, seed=self.config.dataset_seed, class_names=class_names)
            write_annotations(dataset, staging / "dataset")

            model = register_class(dataset, self.capabilities.trainer, prev=self.model)

            # Commit: datasets, model, persona, registry -- in that order.
            self._class_store_dir(class_id).parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / "class_store", self._class_store_dir(class_id))
            reg_dir = self._registration_dir(class_id)
            if reg_dir.exists():
                shutil.rmtree(reg_dir)
            os.replace(staging / "dataset", reg_dir)
            model_dir = self.workspace / "model"
            tmp_model = self.workspace / "model.tmp"
            if tmp_model.exists():
                shutil.rmtree(tmp_model)
            self.capabilities.trainer.save_model(model, tmp_model)
            if model_dir.exists():
                shutil.rmtree(model_dir)
            os.replace(tmp_model, model_dir)
            persona_path = self.persona_store.save(class_id, persona)
            profile = ObjectProfile(
                class_id=class_id,
                label=label,
                persona_path=str(persona_path.relative_to(self.workspace)),
                history_path=str(self.history_store.path(class_id).relative_to(self.workspace)),
                registered_at=int(self.clock.now_ms()),
            )
            self.registry.add(profile)
            self.registry.save(self.workspace / "registry.json")
            self.model = model
            return profile
        finally:
            if staging.exists():
                shutil.rmtree(staging)
            parent = self.workspace / "staging"
            if parent.is_dir() and not any(parent.iterdir()):
                parent.rmdir()

    # -- frame handling ---------------------------------------------------

    def handle_frame(self, frame: ScopeFrame) -> tuple[SessionState, int | None]:
        """Feed one frame: updates tracking, may switch the active object.

        Returns the state after the frame and the class switched to, if any.
        """
        top = None
        if self.model is not None and self.registry.profiles:
            detections = detect(
                frame,
                self.model,
                self.capabilities.detector,
                threshold=self.config.confidence_threshold,
                clock=self.clock,
            )
            top = self._pick_active(detections, frame)
            if top is not None:
                self._last_seen_ms = self.clock.now_ms()
                self._last_seen_class = top.class_id
                self.emit(
                    "DETECTION",
                    {
                        "class_id": top.class_id,
                        "bbox": {"cx": top.bbox.cx, "cy": top.bbox.cy, "w": top.bbox.w, "h": top.bbox.h},
                        "confidence": top.confidence,
                    },
                )
        previous = self.state
        new_state = frame_transition(
            self.state,
            top.class_id if top else None,
            self.clock.now_ms(),
            self._last_seen_ms,
            self.config.grace_ms,
        )
        switched: int | None = None
        if new_state.phase is Phase.TRACKING and new_state.class_id != previous.class_id:
            switched = new_state.class_id
            self.registry.active = switched
        elif new_state.phase is Phase.IDLE and previous.phase is Phase.TRACKING:
            self.registry.active = None
        self._set_state(new_state)
        return self.state, switched

    @staticmethod
    def _pick_active(detections: list[Detection], frame: ScopeFrame) -> Detection | None:
        """Highest confidence wins; ties go to the box nearest frame center."""
        if not detections:
            return None

        def key(d: Detection):
            return (-d.confidence, (d.bbox.cx - 0.5) ** 2 + (d.bbox.cy - 0.5) ** 2)

        return min(detections, key=key)

    # -- wand handling ---------------------------------------------------

    def handle_wand(self, msg: WandMessage) -> list[ControlMessage]:
        new_state, controls = wand_transition(self.state, msg)
        for control in controls:
            self.emit("CONTROL", {"kind": control.kind.name, "sequence": control.sequence})
        entering_recording = (
            new_state.phase is Phase.RECORDING and self.state.phase is not Phase.RECORDING
        )
        stopping = new_state.phase is Phase.TRANSCRIBING and self.state.phase is Phase.RECORDING
        self._set_state(new_state)
        if entering_recording:
            self._record_started_ms = self.clock.now_ms()
        if stopping:
            duration = min(
                self.clock.now_ms() - self._record_started_ms, self.config.max_record_ms
            )
            audio = self.microphone.capture(duration)
            self.run_bonding_cycle(audio)
        return controls

    # -- bonding ----------------------------------------------------------

    def run_bonding_cycle(self, audio: RecordedAudio, profile: ObjectProfile | None = None) -> CycleResult:
        """One push-to-talk cycle against the active object.

        History is persisted only once the object's reply is complete; any
        failure before that leaves the history document untouched. Playback
        stops at the first missing segment.
        """
        if profile is None:
            if self.registry.active is None:
                raise NotFound("no active object for the bonding cycle")
            profile = self.registry.get(self.registry.active)
        try:
            return self._bonding_cycle(audio, profile)
        except Exception:
            # The cycle never strands the state machine mid-phase.
            self._set_state(self._state_after_cycle(profile.class_id))
            raise

    def _bonding_cycle(self, audio: RecordedAudio, profile: ObjectProfile) -> CycleResult:
        result = CycleResult(class_id=profile.class_id, input_ms=audio.duration_ms)
        persona = self.persona_store.load(profile.class_id)
        self._set_state(SessionState(Phase.TRANSCRIBING, profile.class_id))
        try:
            user_text = transcribe(audio, self.capabilities.transcriber, persona.language)
        except EmptyTranscript:
            result.skipped = True
            self.emit("CONTROL", {"kind": "CYCLE_SKIPPED", "reason": "empty transcript"})
            self._set_state(self._state_after_cycle(profile.class_id))
            return result
        result.user_text = user_text

        history = self.history_store.load(profile.class_id)
        request = build_chat_request(
            persona,
            history,
            user_text,
            marker=self.config.marker,
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
        )
        self._set_state(SessionState(Phase.GENERATING, profile.class_id))
        reply_raw = self.capabilities.chat.complete(request)
        segmented = segment_response(reply_raw, self.config.marker)
        if not segmented.segments:
            raise BackendFailure("chat backend returned an empty reply")
        reply_text = plain_text(segmented)
        result.reply_text = reply_text
        result.segments = list(segmented.segments)

        user_ts = int(self.clock.now_ms())
        history.append(ChatRecord(role=Role.USER, text=user_text, timestamp_ms=user_ts))
        history.append(ChatRecord(role=Role.OBJECT, text=reply_text, timestamp_ms=int(self.clock.now_ms())))
        self.history_store.save(profile.class_id, history)
        self.emit("TRANSCRIPT", {"class_id": profile.class_id, "role": "USER", "text": user_text,
                                 "timestamp_ms": user_ts})
        self.emit("TRANSCRIPT", {"class_id": profile.class_id, "role": "OBJECT", "text": reply_text,
                                 "timestamp_ms": user_ts})

        self._set_state(SessionState(Phase.SPEAKING, profile.class_id))
        self.cycle_count += 1
        try:
            clips = synthesize_ordered(
                segmented.segments,
                persona.voice,
                self.capabilities.synthesizer,
                parallelism=self.config.parallelism,
            )
            result.clips = clips
            result.played = clips
        except SynthFailure as exc:
            result.clips = exc.clips
            result.played = playable_prefix(exc.clips)
            result.error = str(exc)
            self.emit("CONTROL", {"kind": "SYNTH_FAILURE", "segment_index": exc.segment_index})
        for clip in result.played:
            clip_path = None
            if self.playback is not None:
                clip_path = self.playback(profile, self.cycle_count, clip)
            self.emit(
                "AUDIO_SEGMENT",
                {
                    "class_id": profile.class_id,
                    "cycle": self.cycle_count,
                    "segment_index": clip.segment_index,
                    "duration_ms": clip.duration_ms,
                    "path": str(clip_path) if clip_path else None,
                },
            )
        self.metrics.record(result)
        self._set_state(self._state_after_cycle(profile.class_id))
        return result

    def _state_after_cycle(self, class_id: int) -> SessionState:
        """SPEAKING returns to TRACKING while the object stays fresh, else IDLE."""
        fresh = (
            self._last_seen_class == class_id
            and self.clock.now_ms() - self._last_seen_ms <= self.config.grace_ms
        )
        return SessionState(Phase.TRACKING, class_id) if fresh else IDLE

    # -- persona editing ---------------------------------------------------

    def edit_persona(self, class_id: int, overrides: dict):
        persona = self.persona_store.load(class_id)
        edited = edit_persona(persona, overrides)
        self.persona_store.save(class_id, edited)
        self.emit("CONTROL", {"kind": "PERSONA_UPDATED", "class_id": class_id,
                              "persona": edited.to_document()})
        return edited
