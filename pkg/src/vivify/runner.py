"""Scripted session driver: replays a scene script and a wand script against
an engine in virtual time, writing transcript, metrics, and audio clips."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .devsim import SceneScript, ScopeSim, WandScript, run_wand
from .dialogue import write_wav
from .errors import SourceLost
from .orchestrator import CycleResult, Engine, SimMicrophone
from .protocol import decode_wand_message


@dataclass
class SimulationResult:
    cycles: list[CycleResult] = field(default_factory=list)
    transcript_path: Path | None = None
    metrics_path: Path | None = None
    clip_paths: list[Path] = field(default_factory=list)


def run_scripted_session(
    engine: Engine,
    scene: SceneScript,
    wand: WandScript,
    out_dir: Path | str,
    seed: int | None = None,
) -> SimulationResult:
    """Drive a full simulated session and persist its outputs.

    Wand events are dispatched strictly in virtual-time order against the
    frame stream; each TOUCH_UP runs a bonding cycle synchronously with the
    next scripted utterance as the recording.
    """
    out_dir = Path(out_dir)
    clips_dir = out_dir / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    result = SimulationResult()
    transcript: list[str] = []

    engine.microphone = SimMicrophone(list(wand.utterances))

    original_emit = engine._emit_cb

    def emit(event_type: str, payload: dict) -> None:
        t = int(engine.clock.now_ms())
        if event_type == "CONTROL" and "sequence" in payload:
            transcript.append(f"[t={t}ms] CONTROL {payload['kind']} seq={payload['sequence']}")
        elif event_type == "CONTROL" and payload.get("kind") == "CYCLE_SKIPPED":
            transcript.append(f"[t={t}ms] CYCLE_SKIPPED {payload['reason']}")
        if original_emit is not None:
            original_emit(event_type, payload)

    def playback(profile, cycle_index: int, clip):
        path = clips_dir / f"cycle{cycle_index:02d}_seg{clip.segment_index:02d}.wav"
        write_wav(path, clip.samples)
        result.clip_paths.append(path)
        return path

    original_cycle = engine.run_bonding_cycle

    def run_cycle(audio, profile=None) -> CycleResult:
        cycle = original_cycle(audio, profile)
        result.cycles.append(cycle)
        if cycle.skipped:
            return cycle
        t = int(engine.clock.now_ms())
        input_path = clips_dir / f"cycle{engine.cycle_count:02d}_input.wav"
        write_wav(input_path, audio.samples)
        result.clip_paths.append(input_path)
        label = engine.registry.get(cycle.class_id).label
        speaker = engine.persona_store.load(cycle.class_id).name
        transcript.append(f"[t={t}ms] USER -> {label}: {cycle.user_text}")
        transcript.append(f"[t={t}ms] {speaker}: {cycle.reply_text}")
        if cycle.error:
            transcript.append(f"[t={t}ms] SYNTH_ERROR {cycle.error}")
        return cycle

    engine._emit_cb = emit
    engine.playback = playback
    engine.run_bonding_cycle = run_cycle  # type: ignore[method-assign]

    scope = ScopeSim(scene, seed=engine.config.scene_seed if seed is None else seed,
                     clock=engine.clock)
    wand_frames = run_wand(wand)
    wi = 0

    def dispatch_wand_until(limit_ms: float | None) -> None:
        nonlocal wi
        while wi < len(wand_frames) and (limit_ms is None or wand_frames[wi][0] <= limit_ms):
            at_ms, data = wand_frames[wi]
            wi += 1
            engine.clock.advance_to(at_ms)
            engine.handle_wand(decode_wand_message(data))

    try:
        while True:
            next_t = scope.next_timestamp_ms()
            if next_t is None:
                break
            dispatch_wand_until(next_t)
            try:
                frame = scope.fetch()
            except SourceLost:
                break
            engine.handle_frame(frame)
        dispatch_wand_until(None)
    finally:
        engine.run_bonding_cycle = original_cycle  # type: ignore[method-assign]
        engine._emit_cb = original_emit
        engine.playback = None

    result.transcript_path = out_dir / "transcript.txt"
    result.transcript_path.write_text("\n".join(transcript) + "\n", encoding="utf-8")
    result.metrics_path = out_dir / "metrics.txt"
    result.metrics_path.write_text(engine.metrics.to_text(), encoding="utf-8")
    return result
