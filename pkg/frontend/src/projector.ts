/**
 * Server-authoritative state projection. The UI holds no session logic:
 * UiState is a pure function of the event stream, so replaying a recorded
 * event log reproduces the exact same rendered view.
 */

import type {
  AudioSegmentPayload,
  ControlPayload,
  DetectionPayload,
  PersonaDocument,
  Phase,
  SessionEvent,
  StatePayload,
  TranscriptLine,
  TranscriptPayload,
} from "./types.js";

export interface UiState {
  connected: boolean;
  phase: Phase;
  activeClass: number | null;
  detection: DetectionPayload | null;
  /** Vibration indicator: on from RECORD_STARTED until VIBRATE_OFF. */
  vibrating: boolean;
  /** Spinner between release and the object's reply landing. */
  waitingReply: boolean;
  /** "No object in view" hint after a rejected press. */
  rejectedHint: boolean;
  transcript: TranscriptLine[];
  personas: Record<number, PersonaDocument>;
  audio: AudioSegmentPayload[];
  lastError: string | null;
  lastSeq: number;
}

export function initialUiState(): UiState {
  return {
    connected: true,
    phase: "IDLE",
    activeClass: null,
    detection: null,
    vibrating: false,
    waitingReply: false,
    rejectedHint: false,
    transcript: [],
    personas: {},
    audio: [],
    lastError: null,
    lastSeq: -1,
  };
}

export function applyEvent(state: UiState, event: SessionEvent): UiState {
  if (event.seq <= state.lastSeq) {
    return state; // stale or replayed out of order: server stream is authoritative
  }
  const next: UiState = { ...state, lastSeq: event.seq };
  switch (event.type) {
    case "STATE": {
      const payload = event.payload as unknown as StatePayload;
      next.phase = payload.phase;
      next.activeClass = payload.class_id;
      if (payload.phase === "IDLE") {
        next.detection = null;
      }
      return next;
    }
    case "DETECTION": {
      next.detection = event.payload as unknown as DetectionPayload;
      return next;
    }
    case "TRANSCRIPT": {
      const payload = event.payload as unknown as TranscriptPayload;
      next.transcript = [
        ...state.transcript,
        {
          classId: payload.class_id,
          role: payload.role,
          text: payload.text,
          timestampMs: payload.timestamp_ms,
        },
      ];
      if (payload.role === "OBJECT") {
        next.waitingReply = false;
      }
      return next;
    }
    case "AUDIO_SEGMENT": {
      const payload = event.payload as unknown as AudioSegmentPayload;
      next.audio = [...state.audio, payload];
      next.waitingReply = false;
      return next;
    }
    case "CONTROL":
      return applyControl(next, event.payload as unknown as ControlPayload);
    default:
      return next;
  }
}

function applyControl(state: UiState, control: ControlPayload): UiState {
  switch (control.kind) {
    case "RECORD_STARTED":
      return { ...state, vibrating: true, rejectedHint: false, lastError: null };
    case "RECORD_REJECTED":
      return { ...state, rejectedHint: true };
    case "VIBRATE_OFF":
      return { ...state, vibrating: false, waitingReply: true };
    case "PERSONA_UPDATED":
      return {
        ...state,
        lastError: null,
        personas: { ...state.personas, [control.class_id]: control.persona },
      };
    case "EDIT_REJECTED":
      return { ...state, lastError: control.error };
    case "CYCLE_SKIPPED":
      return { ...state, waitingReply: false, lastError: control.reason };
    case "SYNTH_FAILURE":
      return { ...state, waitingReply: false, lastError: `synthesis failed at segment ${control.segment_index}` };
    case "SESSION_ENDED":
      return { ...state, connected: false };
    case "COMMAND_FAILED":
      return { ...state, lastError: control.error };
    default:
      return state;
  }
}

export function replay(events: SessionEvent[]): UiState {
  let state = initialUiState();
  for (const event of events) {
    state = applyEvent(state, event);
  }
  return state;
}

function speakerFor(state: UiState, line: TranscriptLine): string {
  if (line.role === "USER") {
    return "you";
  }
  const persona = state.personas[line.classId];
  return persona ? persona.name : `object#${line.classId}`;
}

/** Deterministic text rendering of the transcript pane (snapshot-testable). */
export function renderTranscript(state: UiState): string {
  const lines = state.transcript.map(
    (line) => `[${line.timestampMs}ms] ${speakerFor(state, line)}: ${line.text}`,
  );
  const status: string[] = [];
  if (!state.connected) status.push("(disconnected)");
  if (state.vibrating) status.push("(recording · wand vibrating)");
  if (state.waitingReply) status.push("(waiting for reply…)");
  if (state.rejectedHint) status.push("(no object in view)");
  if (state.lastError) status.push(`(error: ${state.lastError})`);
  return [...lines, ...status].join("\n");
}
