/**
 * Browser entry point. Browsers cannot open the raw TCP serve socket, so
 * this connects through the WebSocket bridge (npm run headless covers the
 * direct-TCP path): start `vivify serve`, then `node dist/bridge.js`.
 */

import { SessionClient } from "./client.js";
import { applyEvent, initialUiState, type UiState } from "./projector.js";
import { bindDom, render } from "./render.js";
import { WandButton } from "./wand.js";

function bridgeUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("bridge") ?? "ws://127.0.0.1:8766";
}

function start(): void {
  const dom = bindDom(document);
  let state: UiState = initialUiState();
  const socket = new WebSocket(bridgeUrl());
  socket.binaryType = "arraybuffer";

  const client = new SessionClient(
    {
      send: (line) => socket.send(line),
      close: () => socket.close(),
    },
    {
      onEvent: (event) => {
        state = applyEvent(state, event);
        render(dom, state);
      },
      onClose: () => {
        state = { ...state, connected: false };
        render(dom, state);
      },
    },
  );

  socket.onmessage = (message) => {
    const data = typeof message.data === "string"
      ? new TextEncoder().encode(message.data)
      : new Uint8Array(message.data as ArrayBuffer);
    client.receive(data);
  };
  socket.onclose = () => {
    wand.setConnected(false);
    client.closed();
  };

  const wand = new WandButton((command) => client.send(command));
  dom.wandButton.addEventListener("pointerdown", () => wand.press());
  dom.wandButton.addEventListener("pointerup", () => wand.release());
  dom.wandButton.addEventListener("pointerleave", () => wand.release());

  const utterance = document.getElementById("utterance") as HTMLInputElement;
  utterance.addEventListener("keydown", (key) => {
    if (key.key === "Enter" && utterance.value.trim()) {
      client.send({ type: "UTTERANCE", payload: { text: utterance.value.trim() } });
      utterance.value = "";
    }
  });

  const editForm = document.getElementById("persona-form") as HTMLFormElement;
  editForm.addEventListener("submit", (submit) => {
    submit.preventDefault();
    if (state.activeClass === null) {
      return;
    }
    client.send({
      type: "PERSONA_EDIT",
      payload: {
        class_id: state.activeClass,
        set: {
          name: dom.personaName.value,
          voice: dom.personaVoice.value,
        },
      },
    });
  });

  render(dom, state);
}

window.addEventListener("DOMContentLoaded", start);
