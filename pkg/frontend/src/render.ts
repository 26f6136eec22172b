/**
 * DOM projection of UiState. Pure render: everything on screen derives from
 * the state object, nothing is mutated incrementally.
 */

import type { UiState } from "./projector.js";

export interface Dom {
  phase: HTMLElement;
  overlay: HTMLElement;
  feedBox: HTMLElement;
  transcript: HTMLElement;
  vibration: HTMLElement;
  hint: HTMLElement;
  personaName: HTMLInputElement;
  personaVoice: HTMLSelectElement;
  editError: HTMLElement;
  wandButton: HTMLButtonElement;
  audioList: HTMLElement;
}

export function bindDom(root: Document): Dom {
  const get = (id: string) => {
    const node = root.getElementById(id);
    if (!node) {
      throw new Error(`missing #${id} in the document`);
    }
    return node;
  };
  return {
    phase: get("phase"),
    overlay: get("overlay"),
    feedBox: get("feed"),
    transcript: get("transcript"),
    vibration: get("vibration"),
    hint: get("hint"),
    personaName: get("persona-name") as HTMLInputElement,
    personaVoice: get("persona-voice") as HTMLSelectElement,
    editError: get("edit-error"),
    wandButton: get("wand") as HTMLButtonElement,
    audioList: get("audio-list"),
  };
}

export function render(dom: Dom, state: UiState): void {
  dom.phase.textContent = state.activeClass === null
    ? state.phase
    : `${state.phase} · object #${state.activeClass}`;

  if (state.detection) {
    const { cx, cy, w, h } = state.detection.bbox;
    dom.overlay.style.display = "block";
    dom.overlay.style.left = `${(cx - w / 2) * 100}%`;
    dom.overlay.style.top = `${(cy - h / 2) * 100}%`;
    dom.overlay.style.width = `${w * 100}%`;
    dom.overlay.style.height = `${h * 100}%`;
    dom.overlay.title = `confidence ${state.detection.confidence.toFixed(3)}`;
  } else {
    dom.overlay.style.display = "none";
  }

  dom.vibration.classList.toggle("active", state.vibrating);
  dom.hint.textContent = state.rejectedHint
    ? "no object in view"
    : state.waitingReply
      ? "waiting for reply…"
      : "";
  dom.wandButton.disabled = !state.connected;

  dom.transcript.replaceChildren(
    ...state.transcript.map((line) => {
      const element = document.createElement("div");
      element.className = `line ${line.role.toLowerCase()}`;
      const persona = state.personas[line.classId];
      const speaker = line.role === "USER" ? "you" : persona?.name ?? `object#${line.classId}`;
      element.textContent = `${speaker}: ${line.text}`;
      return element;
    }),
  );
  dom.transcript.scrollTop = dom.transcript.scrollHeight;

  const active = state.activeClass !== null ? state.personas[state.activeClass] : undefined;
  if (active && document.activeElement !== dom.personaName) {
    dom.personaName.value = active.name;
  }
  if (active && document.activeElement !== dom.personaVoice) {
    dom.personaVoice.value = active.voice;
  }
  dom.editError.textContent = state.lastError ?? "";

  dom.audioList.replaceChildren(
    ...state.audio.slice(-8).map((segment) => {
      const element = document.createElement("div");
      element.textContent = `cycle ${segment.cycle} · segment ${segment.segment_index} · ${Math.round(segment.duration_ms)} ms`;
      return element;
    }),
  );
}
