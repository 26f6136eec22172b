/** Wire types for the session API: line-delimited JSON over the serve socket. */

export type EventType = "STATE" | "DETECTION" | "TRANSCRIPT" | "AUDIO_SEGMENT" | "CONTROL";

export interface SessionEvent {
  type: EventType;
  payload: Record<string, unknown>;
  /** Strictly increasing per connection. */
  seq: number;
}

export type Phase = "IDLE" | "TRACKING" | "RECORDING" | "TRANSCRIBING" | "GENERATING" | "SPEAKING";

export interface StatePayload {
  phase: Phase;
  class_id: number | null;
}

export interface DetectionPayload {
  class_id: number;
  bbox: { cx: number; cy: number; w: number; h: number };
  confidence: number;
}

export interface TranscriptPayload {
  class_id: number;
  role: "USER" | "OBJECT";
  text: string;
  timestamp_ms: number;
}

export interface AudioSegmentPayload {
  class_id: number;
  cycle: number;
  segment_index: number;
  duration_ms: number;
  /** WAV written by the server, referenced by path/URL. */
  path: string | null;
}

export interface PersonaDocument {
  name: string;
  gender: string;
  age: string;
  personality: string;
  backstory: string;
  voice: string;
  language: string;
}

export type ControlPayload =
  | { kind: "RECORD_STARTED"; sequence: number }
  | { kind: "RECORD_REJECTED"; sequence: number }
  | { kind: "VIBRATE_OFF"; sequence: number }
  | { kind: "PERSONA_UPDATED"; class_id: number; persona: PersonaDocument }
  | { kind: "EDIT_REJECTED"; class_id: number; error: string }
  | { kind: "CYCLE_SKIPPED"; reason: string }
  | { kind: "SYNTH_FAILURE"; segment_index: number }
  | { kind: "SESSION_ENDED" }
  | { kind: "BAD_COMMAND"; received?: string }
  | { kind: "COMMAND_FAILED"; error: string };

/** Commands flow client -> server on the same NDJSON stream. */
export type Command =
  | { type: "WAND"; payload: { kind: "TOUCH_DOWN" | "TOUCH_UP"; sequence: number } }
  | { type: "UTTERANCE"; payload: { text: string } }
  | { type: "PERSONA_EDIT"; payload: { class_id: number; set: Record<string, string> } };

export interface TranscriptLine {
  classId: number;
  role: "USER" | "OBJECT";
  text: string;
  timestampMs: number;
}
