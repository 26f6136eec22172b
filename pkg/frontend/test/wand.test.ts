import { describe, expect, it } from "vitest";

import { WandButton, type WandCommand } from "../src/wand.js";

type Gesture = "press" | "release" | "disconnect" | "reconnect";

/** Independent oracle: fold the gestures through a minimal reference model. */
function expectedCommands(gestures: Gesture[]): Array<["TOUCH_DOWN" | "TOUCH_UP", number]> {
  const out: Array<["TOUCH_DOWN" | "TOUCH_UP", number]> = [];
  let seq = 0;
  let held = false;
  let connected = true;
  for (const gesture of gestures) {
    if (gesture === "disconnect") {
      connected = false;
      held = false;
    } else if (gesture === "reconnect") {
      connected = true;
    } else if (gesture === "press" && connected && !held) {
      held = true;
      out.push(["TOUCH_DOWN", seq]);
      seq = (seq + 1) % 65536;
    } else if (gesture === "release" && connected && held) {
      held = false;
      out.push(["TOUCH_UP", seq]);
      seq = (seq + 1) % 65536;
    }
  }
  return out;
}

function drive(gestures: Gesture[]): Array<["TOUCH_DOWN" | "TOUCH_UP", number]> {
  const sent: Array<["TOUCH_DOWN" | "TOUCH_UP", number]> = [];
  const wand = new WandButton((command: WandCommand) => {
    sent.push([command.payload.kind, command.payload.sequence]);
  });
  for (const gesture of gestures) {
    if (gesture === "press") wand.press();
    else if (gesture === "release") wand.release();
    else wand.setConnected(gesture === "reconnect");
  }
  return sent;
}

// Twenty scripted gesture timelines covering clean cycles, double presses,
// orphan releases, and disconnects mid-hold.
const timelines: Gesture[][] = [
  ["press", "release"],
  ["press", "release", "press", "release"],
  ["press", "press", "release"],
  ["release", "press", "release"],
  ["press", "release", "release"],
  ["press", "press", "press", "release", "release"],
  [],
  ["release", "release"],
  ["press", "disconnect", "release", "reconnect", "press", "release"],
  ["disconnect", "press", "release", "reconnect", "press", "release"],
  ["press", "release", "disconnect", "reconnect", "press", "release"],
  ["press", "disconnect", "reconnect", "release", "press", "release"],
  ["press", "release", "press", "release", "press", "release", "press", "release"],
  ["press", "press", "release", "press", "release", "release"],
  ["release", "release", "press", "press", "release", "press"],
  ["press", "disconnect", "press", "release", "reconnect", "release", "press", "release"],
  ["press", "release", "press", "disconnect", "reconnect", "press", "release"],
  ["reconnect", "press", "release"],
  ["press", "release", "press"],
  ["disconnect", "reconnect", "press", "press", "release", "release", "press", "release"],
];

describe("wand button gestures", () => {
  it.each(timelines.map((timeline, index) => [index, timeline] as const))(
    "timeline %i emits the exact command sequence",
    (_index, timeline) => {
      expect(drive(timeline)).toEqual(expectedCommands(timeline));
    },
  );

  it("covers twenty scripted timelines", () => {
    expect(timelines).toHaveLength(20);
  });

  it("alternates down/up with increasing sequences on clean cycles", () => {
    const sent = drive(["press", "release", "press", "release", "press", "release"]);
    expect(sent).toEqual([
      ["TOUCH_DOWN", 0],
      ["TOUCH_UP", 1],
      ["TOUCH_DOWN", 2],
      ["TOUCH_UP", 3],
      ["TOUCH_DOWN", 4],
      ["TOUCH_UP", 5],
    ]);
  });

  it("abandons a held press on disconnect without emitting", () => {
    const sent = drive(["press", "disconnect", "release"]);
    expect(sent).toEqual([["TOUCH_DOWN", 0]]);
  });
});
