/**
 * Console client for the serve endpoint over its native TCP carrier.
 *
 *   node dist/headless.js 127.0.0.1:8765
 *
 * Commands on stdin:  hold / release / say <text> / rename <name> / quit
 * The transcript pane re-renders from the projected state after every event.
 */

import * as readline from "node:readline";

import { connectTcp } from "./client.js";
import { applyEvent, initialUiState, renderTranscript, type UiState } from "./projector.js";
import { WandButton } from "./wand.js";

async function run(): Promise<void> {
  const endpoint = process.argv[2] ?? "127.0.0.1:8765";
  let state: UiState = initialUiState();

  const client = await connectTcp(endpoint, {
    onEvent: (event) => {
      state = applyEvent(state, event);
      console.clear();
      console.log(`── session @ ${endpoint} · phase ${state.phase} ──`);
      console.log(renderTranscript(state));
      console.log("\ncommands: hold · release · say <text> · rename <name> · quit");
    },
    onClose: () => {
      console.log("session closed");
      process.exit(0);
    },
  });

  const wand = new WandButton((command) => client.send(command));
  const terminal = readline.createInterface({ input: process.stdin, output: process.stdout });
  terminal.on("line", (line) => {
    const [verb, ...rest] = line.trim().split(/\s+/);
    const text = rest.join(" ");
    switch (verb) {
      case "hold":
        wand.press();
        break;
      case "release":
        wand.release();
        break;
      case "say":
        client.send({ type: "UTTERANCE", payload: { text } });
        break;
      case "rename":
        if (state.activeClass !== null) {
          client.send({
            type: "PERSONA_EDIT",
            payload: { class_id: state.activeClass, set: { name: text } },
          });
        }
        break;
      case "quit":
        client.close();
        process.exit(0);
    }
  });
}

run().catch((error) => {
  console.error(String(error));
  process.exit(1);
});
