"""Session API: line-delimited JSON over a local TCP socket.

Events flow engine -> clients as {"type", "payload", "seq"} with seq
strictly increasing per connection. Commands flow clients -> engine:

    {"type": "WAND",         "payload": {"kind": "TOUCH_DOWN", "sequence": 0}}
    {"type": "UTTERANCE",    "payload": {"text": "hello"}}
    {"type": "PERSONA_EDIT", "payload": {"class_id": 0, "set": {"name": "Cuppie"}}}

The session loop owns all engine state; client readers only enqueue
commands, and the loop drains them between frames.
"""

from __future__ import annotations

import json
import queue
import socket
import socketserver
import threading
import time

from .errors import PersonaError, SourceLost, VivifyError
from .orchestrator import Engine
from .protocol import WandKind, WandMessage


class _Client:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.seq = 0
        self.lock = threading.Lock()

    def send(self, event_type: str, payload: dict) -> bool:
        with self.lock:
            message = {"type": event_type, "payload": payload, "seq": self.seq}
            try:
                self.sock.sendall((json.dumps(message, ensure_ascii=False) + "\n").encode("utf-8"))
            except OSError:
                return False
            self.seq += 1
            return True


class SessionServer:
    """Hosts one engine session: streams frames from a source, broadcasts
    session events, and applies client commands."""

    def __init__(self, engine: Engine, source, host: str = "127.0.0.1", port: int = 0,
                 realtime: bool = True):
        self.engine = engine
        self.source = source
        self.realtime = realtime
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._commands: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._wand_seq = 0
        engine._emit_cb = self._broadcast
        engine.playback = self._write_clip

        server_self = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                client = _Client(self.request)
                with server_self._clients_lock:
                    server_self._clients.append(client)
                try:
                    for line in self.rfile:
                        line = line.strip()
                        if not line:
                            continue
                        try:
                            server_self._commands.put(json.loads(line.decode("utf-8")))
                        except (ValueError, UnicodeDecodeError):
                            client.send("CONTROL", {"kind": "BAD_COMMAND"})
                except OSError:
                    pass  # client went away mid-read
                finally:
                    with server_self._clients_lock:
                        if client in server_self._clients:
                            server_self._clients.remove(client)

        self._tcp = socketserver.ThreadingTCPServer((host, port), Handler)
        self._tcp.daemon_threads = True
        self._threads: list[threading.Thread] = []

    @property
    def endpoint(self) -> str:
        host, port = self._tcp.server_address[:2]
        return f"{host}:{port}"

    def _broadcast(self, event_type: str, payload: dict) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.send(event_type, payload)

    def _write_clip(self, profile, cycle_index: int, clip):
        """Playback sink: persist reply audio so events can reference it."""
        from .dialogue import write_wav

        clips_dir = self.engine.workspace / "serve_clips"
        clips_dir.mkdir(parents=True, exist_ok=True)
        path = clips_dir / f"cycle{cycle_index:02d}_seg{clip.segment_index:02d}.wav"
        write_wav(path, clip.samples)
        return path

    def _apply_command(self, command: dict) -> None:
        kind = command.get("type")
        payload = command.get("payload") or {}
        if kind == "WAND":
            sequence = payload.get("sequence")
            if sequence is None:
                sequence = self._wand_seq
                self._wand_seq = (self._wand_seq + 1) % 65536
            msg = WandMessage(kind=WandKind[payload["kind"]], sequence=int(sequence) % 65536)
            self.engine.handle_wand(msg)
        elif kind == "UTTERANCE":
            self.engine.microphone.push(str(payload.get("text", "")))
        elif kind == "PERSONA_EDIT":
            try:
                self.engine.edit_persona(int(payload["class_id"]), dict(payload.get("set", {})))
            except PersonaError as exc:
                self._broadcast("CONTROL", {
                    "kind": "EDIT_REJECTED",
                    "class_id": payload.get("class_id"),
                    "error": str(exc),
                })
        else:
            self._broadcast("CONTROL", {"kind": "BAD_COMMAND", "received": kind})

    def _session_loop(self) -> None:
        period_s = 1.0 / self.engine.config.fps
        while not self._stop.is_set():
            started = time.monotonic()
            while True:
                try:
                    self._apply_command(self._commands.get_nowait())
                except queue.Empty:
                    break
                except (VivifyError, KeyError, ValueError) as exc:
                    self._broadcast("CONTROL", {"kind": "COMMAND_FAILED", "error": str(exc)})
            try:
                frame = self.source.fetch()
            except SourceLost:
                break
            self.engine.handle_frame(frame)
            if self.realtime:
                elapsed = time.monotonic() - started
                if elapsed < period_s:
                    time.sleep(period_s - elapsed)
        self._broadcast("CONTROL", {"kind": "SESSION_ENDED"})

    def start(self) -> "SessionServer":
        accept = threading.Thread(target=self._tcp.serve_forever, daemon=True)
        loop = threading.Thread(target=self._session_loop, daemon=True)
        self._threads = [accept, loop]
        accept.start()
        loop.start()
        return self

    def wait(self) -> None:
        self._threads[1].join()

    def stop(self) -> None:
        self._stop.set()
        self._tcp.shutdown()
        self._tcp.server_close()
        for thread in self._threads:
            thread.join(timeout=5)

    def __enter__(self) -> "SessionServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
