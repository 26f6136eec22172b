"""Swapping MOCK <-> HTTP for any service capability must be invisible to the
pipeline: identical inputs produce byte-identical outputs either way."""

import numpy as np
import pytest

from vivify.backends.base import BackendConfig, BackendKind, CapabilitySet
from vivify.backends.http import (
    HttpChat,
    HttpPersonaGenerator,
    HttpSegmenter,
    HttpSynthesizer,
    HttpTranscriber,
)
from vivify.backends.mock import make_mock_capabilities
from vivify.backends.server import CapabilityServer
from vivify.devsim import ScopeSim, make_recording
from vivify.dialogue import ChatHistory, build_chat_request, synthesize_ordered, transcribe
from vivify.persona import VoiceId, generate_persona

from conftest import single_sprite_scene
from test_dialogue import cuppie


@pytest.fixture(scope="module")
def stub():
    mocks = make_mock_capabilities()
    with CapabilityServer(mocks) as server:
        config = BackendConfig(kind=BackendKind.HTTP, endpoint=server.endpoint,
                               timeout_ms=5000, retries=1)
        http_set = CapabilitySet(
            segmenter=HttpSegmenter(config),
            trainer=mocks.trainer,
            detector=mocks.detector,
            persona_generator=HttpPersonaGenerator(config),
            transcriber=HttpTranscriber(config),
            chat=HttpChat(config),
            synthesizer=HttpSynthesizer(config),
        )
        yield mocks, http_set


def mug_frame():
    return ScopeSim(single_sprite_scene("mug", frames=3, moving=False), seed=1).fetch()


def test_segmenter_identical(stub):
    mocks, http_set = stub
    frame = mug_frame()
    local = mocks.segmenter.segment(frame)
    remote = http_set.segmenter.segment(frame)
    assert (local.bits == remote.bits).all()


def test_persona_identical(stub):
    mocks, http_set = stub
    frame = mug_frame()
    local = generate_persona(frame, "zh", mocks.persona_generator)
    remote = generate_persona(frame, "zh", http_set.persona_generator)
    assert local.to_json() == remote.to_json()


def test_transcriber_identical(stub):
    mocks, http_set = stub
    audio = make_recording("你好 cup", 700)
    assert (transcribe(audio, mocks.transcriber, "zh")
            == transcribe(audio, http_set.transcriber, "zh"))


def test_chat_identical(stub):
    mocks, http_set = stub
    request = build_chat_request(cuppie(), ChatHistory(), "hello")
    assert mocks.chat.complete(request) == http_set.chat.complete(request)


def test_synthesis_identical(stub):
    mocks, http_set = stub
    local = synthesize_ordered(["one", "two"], VoiceId.CHILD_MALE, mocks.synthesizer)
    remote = synthesize_ordered(["one", "two"], VoiceId.CHILD_MALE, http_set.synthesizer)
    assert [c.samples for c in local] == [c.samples for c in remote]
    assert [c.synth_ms for c in local] == [c.synth_ms for c in remote]
