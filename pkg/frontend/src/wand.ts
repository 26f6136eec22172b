/**
 * The on-screen wand: press-and-hold gestures mapped to the wand command
 * sequence. Mirrors the physical touch sensor: a press emits TOUCH_DOWN,
 * the matching release emits TOUCH_UP, sequences count up modulo 2^16.
 */

import type { Command } from "./types.js";

export type WandCommand = Extract<Command, { type: "WAND" }>;

export class WandButton {
  private seq = 0;
  private pressed = false;
  private connected = true;

  constructor(private readonly send: (command: WandCommand) => void) {}

  /** Disconnect disables the button; a held press is abandoned, not sent. */
  setConnected(connected: boolean): void {
    this.connected = connected;
    if (!connected) {
      this.pressed = false;
    }
  }

  get isPressed(): boolean {
    return this.pressed;
  }

  press(): void {
    if (!this.connected || this.pressed) {
      return;
    }
    this.pressed = true;
    this.emit("TOUCH_DOWN");
  }

  release(): void {
    if (!this.connected || !this.pressed) {
      return;
    }
    this.pressed = false;
    this.emit("TOUCH_UP");
  }

  private emit(kind: "TOUCH_DOWN" | "TOUCH_UP"): void {
    this.send({ type: "WAND", payload: { kind, sequence: this.seq } });
    this.seq = (this.seq + 1) % 65536;
  }
}
