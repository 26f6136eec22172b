import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from vivify.backends.base import BackendConfig, BackendKind, CapabilitySet
from vivify.backends.http import HttpChat, HttpSynthesizer, http_call
from vivify.backends.mock import (
    MockChat,
    MockDetector,
    MockModel,
    MockPersonaGenerator,
    MockSegmenter,
    MockSynthesizer,
    make_mock_capabilities,
    tone_frequency,
    VOICE_FREQ_HZ,
)
from vivify.clock import VirtualClock
from vivify.devsim import Placement, SceneScript, ScopeSim, render_frame
from vivify.dialogue import ChatHistory, ChatRecord, Role, build_chat_request, segment_response
from vivify.errors import RemoteError, SchemaError, TransportError
from vivify.persona import VoiceId
from vivify.protocol import ScopeFrame
from vivify.vision import frame_to_array, mask_to_bbox

from conftest import single_sprite_scene
from test_dialogue import cuppie


def scene_frame(scene: SceneScript, seed: int, index: int = 0) -> ScopeFrame:
    pixels = render_frame(scene, seed, index)
    return ScopeFrame(index, index * 50, 320, 320, pixels.tobytes())


def template_for(sprite: str):
    scene = single_sprite_scene(sprite, frames=3, moving=False)
    frame = scene_frame(scene, seed=1)
    mask = MockSegmenter().segment(frame)
    bbox = mask_to_bbox(mask)
    x0, y0, x1, y1 = bbox.to_pixels(320, 320)
    return frame_to_array(frame)[y0:y1, x0:x1].copy()


class TestMockDeterminism:
    def test_segmenter_pure(self):
        frame = scene_frame(single_sprite_scene("plant", frames=3, moving=False), seed=5)
        a = MockSegmenter().segment(frame)
        b = MockSegmenter().segment(frame)
        assert (a.bits == b.bits).all()

    def test_synthesizer_pure(self):
        s1, t1 = MockSynthesizer().synthesize("hello", VoiceId.NEUTRAL)
        s2, t2 = MockSynthesizer().synthesize("hello", VoiceId.NEUTRAL)
        assert s1 == s2 and t1 == t2

    def test_persona_generator_pure(self):
        frame = scene_frame(single_sprite_scene("tennis", frames=3, moving=False), seed=5)
        gen = MockPersonaGenerator()
        assert gen.generate(frame, "en", "p") == gen.generate(frame, "en", "p")


class TestMockDetector:
    def test_unoccluded_sprite_near_perfect(self):
        model = MockModel(["mug"], {0: template_for("mug")}, 100, 25)
        scene = single_sprite_scene("mug", frames=10)
        frame = scene_frame(scene, seed=9, index=4)
        hits = MockDetector().run(frame, model)
        assert hits[0][2] >= 0.99

    def test_uniform_noise_below_threshold(self):
        model = MockModel(["mug"], {0: template_for("mug")}, 100, 25)
        noise_scene = SceneScript(duration_frames=3)
        frame = scene_frame(noise_scene, seed=4)
        hits = MockDetector().run(frame, model)
        assert all(conf < 0.75 for _, _, conf in hits)

    def test_two_sprites_two_detections(self):
        model = MockModel(
            ["mug", "plant"],
            {0: template_for("mug"), 1: template_for("plant")},
            100,
            25,
        )
        scene = SceneScript(
            duration_frames=3,
            placements=[
                Placement("mug", 0, 2, [(0, 40, 40)], [(0, 0.0)]),
                Placement("plant", 0, 2, [(0, 200, 200)], [(0, 0.0)]),
            ],
        )
        frame = scene_frame(scene, seed=6)
        hits = MockDetector().run(frame, model)
        assert {cid for cid, _, _ in hits} == {0, 1}
        assert all(conf >= 0.99 for _, _, conf in hits)

    def test_clock_charged_deterministically(self):
        model = MockModel(["mug"], {0: template_for("mug")}, 100, 25)
        frame = scene_frame(single_sprite_scene("mug", frames=3, moving=False), seed=2)
        costs = []
        for _ in range(2):
            clock = VirtualClock()
            MockDetector(clock=clock).run(frame, model)
            costs.append(clock.now_ms())
        assert costs[0] == costs[1] > 0


class TestMockChat:
    def test_template_echo(self):
        request = build_chat_request(cuppie(), ChatHistory(), "hello")
        assert MockChat().complete(request) == "Cuppie hears: hello.§"

    def test_three_sentence_mode(self):
        request = build_chat_request(cuppie(), ChatHistory(), "hello")
        reply = MockChat(sentences=3).complete(request)
        assert len(segment_response(reply, "§").segments) == 3

    def test_context_length_is_the_only_difference(self):
        history = ChatHistory()
        for i in range(5):
            history.append(ChatRecord(Role.USER, f"u{i}", 0))
            history.append(ChatRecord(Role.OBJECT, f"o{i}", 0))
        empty_reply = MockChat(sentences=2).complete(build_chat_request(cuppie(), ChatHistory(), "hi"))
        full_reply = MockChat(sentences=2).complete(build_chat_request(cuppie(), history, "hi"))
        assert empty_reply != full_reply
        assert empty_reply.replace(" 0 ", " N ") == full_reply.replace(" 10 ", " N ")

    def test_chinese_reply_for_chinese_persona(self):
        request = build_chat_request(cuppie("zh"), ChatHistory(), "你好")
        reply = MockChat().complete(request)
        assert reply == "Cuppie听到了：你好。§"


class TestMockSynthesizer:
    def test_duration_sixty_ms_per_char(self):
        samples, synth_ms = MockSynthesizer().synthesize("abcde", VoiceId.NEUTRAL)
        assert len(samples) // 2 == 5 * 60 * 16  # 60 ms/char at 16 kHz
        assert synth_ms == pytest.approx(5 * 60 * 0.6297)

    def test_all_seven_voices_distinguishable(self):
        seen = set()
        for voice in VoiceId:
            samples, _ = MockSynthesizer().synthesize("calibration", voice)
            freq = tone_frequency(samples)
            assert freq == pytest.approx(VOICE_FREQ_HZ[voice], abs=2)
            seen.add(round(freq))
        assert len(seen) == 7


class _ScriptedHandler(BaseHTTPRequestHandler):
    script: list  # (status, body-dict or raw str)
    calls: list

    def log_message(self, fmt, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = self.rfile.read(length)
        type(self).calls.append((self.path, payload))
        status, body = self.script.pop(0) if self.script else (200, {})
        raw = body if isinstance(body, str) else json.dumps(body)
        data = raw.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def scripted_server(script):
    handler = type("Scripted", (_ScriptedHandler,), {"script": list(script), "calls": []})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    endpoint = f"http://127.0.0.1:{server.server_address[1]}"
    return server, handler, endpoint


class TestHttpCall:
    def config(self, endpoint, retries=1):
        return BackendConfig(kind=BackendKind.HTTP, endpoint=endpoint, retries=retries,
                             timeout_ms=2000)

    def test_happy_path(self):
        server, handler, endpoint = scripted_server([(200, {"text": "ok"})])
        try:
            assert http_call(self.config(endpoint), "/chat", {"x": 1}) == {"text": "ok"}
        finally:
            server.shutdown()

    def test_500_then_200_retries(self):
        server, handler, endpoint = scripted_server([(500, {"error": "boom"}), (200, {"text": "ok"})])
        try:
            assert http_call(self.config(endpoint), "/chat", {}) == {"text": "ok"}
            assert len(handler.calls) == 2
        finally:
            server.shutdown()

    def test_4xx_never_retried(self):
        server, handler, endpoint = scripted_server([(400, {"error": "bad"}), (200, {})])
        try:
            with pytest.raises(RemoteError) as exc:
                http_call(self.config(endpoint, retries=3), "/chat", {})
            assert exc.value.status == 400
            assert len(handler.calls) == 1
        finally:
            server.shutdown()

    def test_malformed_body_schema_error_no_retry(self):
        server, handler, endpoint = scripted_server([(200, "{not json"), (200, {})])
        try:
            with pytest.raises(SchemaError):
                http_call(self.config(endpoint, retries=3), "/chat", {})
            assert len(handler.calls) == 1
        finally:
            server.shutdown()

    def test_connection_refused_exhausts_retries(self):
        config = BackendConfig(kind=BackendKind.HTTP, endpoint="http://127.0.0.1:9",
                               retries=1, timeout_ms=300)
        with pytest.raises(TransportError):
            http_call(config, "/chat", {})

    def test_response_field_validation(self):
        server, handler, endpoint = scripted_server([(200, {"wrong": 1})])
        try:
            with pytest.raises(SchemaError):
                HttpChat(self.config(endpoint)).complete({"messages": []})
        finally:
            server.shutdown()

    def test_synth_payload_validation(self):
        server, handler, endpoint = scripted_server([(200, {"pcm_b64": "AAA=", "synth_ms": "slow"})])
        try:
            with pytest.raises(SchemaError):
                HttpSynthesizer(self.config(endpoint)).synthesize("x", VoiceId.NEUTRAL)
        finally:
            server.shutdown()


def test_capability_set_requires_all_slots():
    capabilities = make_mock_capabilities()
    capabilities.validate()
    capabilities.chat = None
    with pytest.raises(ValueError):
        capabilities.validate()
