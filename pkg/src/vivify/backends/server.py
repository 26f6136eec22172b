"""HTTP capability server: exposes any CapabilitySet over the adapter wire
format, so an all-mock set can stand in for real inference services."""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..persona import VoiceId
from .base import CapabilitySet
from .http import decode_stt_payload, frame_from_payload, mask_payload


class _Handler(BaseHTTPRequestHandler):
    capabilities: CapabilitySet  # patched onto the subclass per server

    def log_message(self, fmt, *args):  # keep tests quiet
        pass

    def _reply(self, status: int, body: dict) -> None:
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):  # noqa: N802 - http.server API
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            body = self._dispatch(self.path, payload)
        except KeyError:
            self._reply(404, {"error": f"unknown route {self.path}"})
        except Exception as exc:  # noqa: BLE001 - fault boundary to the wire
            self._reply(500, {"error": str(exc)})
        else:
            self._reply(200, body)

    def _dispatch(self, route: str, payload: dict) -> dict:
        caps = self.capabilities
        if route == "/segment":
            mask = caps.segmenter.segment(frame_from_payload(payload))
            return mask_payload(mask)
        if route == "/persona":
            document = caps.persona_generator.generate(
                frame_from_payload(payload), payload["language"], payload["prompt"]
            )
            return json.loads(document)
        if route == "/chat":
            return {"text": caps.chat.complete(payload)}
        if route == "/stt":
            audio, language = decode_stt_payload(payload)
            return {"text": caps.transcriber.transcribe(audio, language)}
        if route == "/tts":
            samples, synth_ms = caps.synthesizer.synthesize(
                payload["text"], VoiceId(payload["voice"])
            )
            return {
                "pcm_b64": base64.b64encode(samples).decode("ascii"),
                "synth_ms": synth_ms,
            }
        raise KeyError(route)


class CapabilityServer:
    """Threaded HTTP server wrapping a CapabilitySet. Use as a context
    manager or call start()/stop()."""

    def __init__(self, capabilities: CapabilitySet, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"capabilities": capabilities})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "CapabilityServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "CapabilityServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
