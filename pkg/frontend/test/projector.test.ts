import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { applyEvent, initialUiState, renderTranscript, replay } from "../src/projector.js";
import type { SessionEvent } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function recordedLog(): SessionEvent[] {
  const raw = readFileSync(join(here, "fixtures", "session_log.ndjson"), "utf-8");
  return raw
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as SessionEvent);
}

describe("event replay", () => {
  it("renders an identical transcript snapshot across two replays", () => {
    const log = recordedLog();
    const first = renderTranscript(replay(log));
    const second = renderTranscript(replay(log));
    expect(first).toEqual(second);
    expect(first.length).toBeGreaterThan(0);
  });

  it("projects the recorded session's dialogue", () => {
    const state = replay(recordedLog());
    const texts = state.transcript.map((line) => line.text);
    expect(texts).toContain("hello over the wire");
    expect(texts.some((text) => text.startsWith("Cuppie hears:"))).toBe(true);
    expect(state.transcript.filter((line) => line.role === "OBJECT")).toHaveLength(2);
    expect(state.audio.length).toBeGreaterThan(0);
    expect(state.personas[0]?.name).toBe("Cuppie");
  });

  it("is a pure function of the event stream", () => {
    const log = recordedLog();
    const reference = replay(log);
    // replaying on top of unrelated mutations of a previous pass changes nothing
    const again = replay(log.map((event) => ({ ...event, payload: { ...event.payload } })));
    expect(again).toEqual(reference);
  });

  it("drops stale sequence numbers (server stream is authoritative)", () => {
    const fresh: SessionEvent = {
      type: "TRANSCRIPT",
      payload: { class_id: 0, role: "USER", text: "first", timestamp_ms: 1 },
      seq: 5,
    };
    const stale: SessionEvent = {
      type: "TRANSCRIPT",
      payload: { class_id: 0, role: "USER", text: "duplicate", timestamp_ms: 1 },
      seq: 5,
    };
    let state = initialUiState();
    state = applyEvent(state, fresh);
    state = applyEvent(state, stale);
    expect(state.transcript).toHaveLength(1);
  });
});

describe("wand indicator states", () => {
  const control = (payload: Record<string, unknown>, seq: number): SessionEvent => ({
    type: "CONTROL",
    payload,
    seq,
  });

  it("turns the vibration indicator on at RECORD_STARTED and off at VIBRATE_OFF", () => {
    let state = initialUiState();
    state = applyEvent(state, control({ kind: "RECORD_STARTED", sequence: 0 }, 0));
    expect(state.vibrating).toBe(true);
    state = applyEvent(state, control({ kind: "VIBRATE_OFF", sequence: 1 }, 1));
    expect(state.vibrating).toBe(false);
    expect(state.waitingReply).toBe(true);
    expect(renderTranscript(state)).toContain("waiting for reply");
  });

  it("shows the no-object hint after a rejected press", () => {
    let state = initialUiState();
    state = applyEvent(state, control({ kind: "RECORD_REJECTED", sequence: 0 }, 0));
    expect(state.rejectedHint).toBe(true);
    expect(renderTranscript(state)).toContain("no object in view");
  });

  it("clears the reply spinner when the reply lands", () => {
    let state = initialUiState();
    state = applyEvent(state, control({ kind: "VIBRATE_OFF", sequence: 1 }, 0));
    state = applyEvent(state, {
      type: "TRANSCRIPT",
      payload: { class_id: 0, role: "OBJECT", text: "hi", timestamp_ms: 9 },
      seq: 1,
    });
    expect(state.waitingReply).toBe(false);
  });
});

describe("persona editing", () => {
  it("shows rejected-edit errors verbatim", () => {
    const error = "not a supported voice: 'robot'";
    let state = initialUiState();
    state = applyEvent(state, {
      type: "CONTROL",
      payload: { kind: "EDIT_REJECTED", class_id: 0, error },
      seq: 0,
    });
    expect(state.lastError).toBe(error);
    expect(renderTranscript(state)).toContain(error);
  });

  it("converges to the server state on the next persona event", () => {
    let state = initialUiState();
    state = applyEvent(state, {
      type: "CONTROL",
      payload: {
        kind: "PERSONA_UPDATED",
        class_id: 0,
        persona: {
          name: "Renamed-elsewhere",
          gender: "female",
          age: "3",
          personality: "warm",
          backstory: "a mug",
          voice: "YOUNG_FEMALE",
          language: "en",
        },
      },
      seq: 0,
    });
    expect(state.personas[0]?.name).toBe("Renamed-elsewhere");
    expect(state.lastError).toBeNull();
  });
});
