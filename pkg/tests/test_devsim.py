import numpy as np
import pytest

from vivify import devsim
from vivify.backends.mock import MockDetector, MockModel, MockSegmenter
from vivify.devsim import (
    Placement,
    SceneScript,
    ScopeSim,
    WandScript,
    make_recording,
    make_sprite,
    render_frame,
    run_wand,
    sprite_tile,
)
from vivify.clock import VirtualClock
from vivify.errors import SourceLost
from vivify.protocol import ScopeFrame, WandKind, decode_wand_message

from conftest import single_sprite_scene
from test_backends import template_for


class TestSprites:
    def test_fixture_files_match_generator(self):
        for name in devsim.SPRITE_NAMES:
            assert (sprite_tile(name) == make_sprite(name)).all(), name

    def test_eight_categories(self):
        assert len(devsim.SPRITE_NAMES) == 8

    def test_sprites_stay_salient(self):
        for name in devsim.SPRITE_NAMES:
            tile = sprite_tile(name).astype(int)
            spread = tile.max(axis=2) - tile.min(axis=2)
            assert spread.min() > 60, name


class TestSceneRendering:
    def test_determinism_byte_identical(self):
        scene = single_sprite_scene("mug", frames=5)
        a = render_frame(scene, seed=7, index=0)
        b = render_frame(scene, seed=7, index=0)
        assert a.tobytes() == b.tobytes()

    def test_different_seed_different_frame(self):
        scene = single_sprite_scene("mug", frames=5)
        a = render_frame(scene, seed=7, index=0)
        b = render_frame(scene, seed=8, index=0)
        assert a.tobytes() != b.tobytes()

    def test_empty_script_is_pure_noise(self):
        scene = SceneScript(duration_frames=3)
        frame = ScopeFrame(0, 0, 320, 320, render_frame(scene, 1, 0).tobytes())
        assert MockSegmenter().segment(frame).empty

    def test_sprite_present_across_range(self):
        scene = single_sprite_scene("mug", frames=200)
        sim = ScopeSim(scene, seed=1)
        seg = MockSegmenter()
        for _ in range(0, 200, 40):
            frame = sim.fetch()
            assert not seg.segment(frame).empty
            for _ in range(39):
                sim.fetch()
                break

    def test_path_interpolation_endpoints(self):
        placement = Placement("mug", 0, 10, [(0, 10, 20), (10, 110, 20)], [(0, 0.0)])
        assert placement.position_at(0) == (10, 20)
        assert placement.position_at(5) == (60, 20)
        assert placement.position_at(10) == (110, 20)

    def test_occlusion_steps(self):
        placement = Placement("mug", 0, 99, [(0, 0, 0)], [(0, 0.0), (60, 0.9), (70, 0.0)])
        assert placement.occlusion_at(59) == 0.0
        assert placement.occlusion_at(60) == 0.9
        assert placement.occlusion_at(69) == 0.9
        assert placement.occlusion_at(70) == 0.0

    def test_occlusion_monotonically_degrades_confidence(self):
        model = MockModel(["mug"], {0: template_for("mug")}, 100, 25)
        detector = MockDetector()
        confidences = []
        for occlusion in (0.0, 0.25, 0.5, 0.75):
            scene = single_sprite_scene("mug", frames=5, occlusion=occlusion)
            frame = ScopeFrame(2, 100, 320, 320, render_frame(scene, 3, 2).tobytes())
            confidences.append(detector.run(frame, model)[0][2])
        assert confidences == sorted(confidences, reverse=True)


class TestSceneValidation:
    def test_range_outside_scene(self):
        scene = SceneScript(
            duration_frames=5,
            placements=[Placement("mug", 0, 5, [(0, 0, 0)], [(0, 0.0)])],
        )
        with pytest.raises(ValueError):
            scene.validate()

    def test_unknown_sprite(self):
        scene = SceneScript(
            duration_frames=5,
            placements=[Placement("dragon", 0, 4, [(0, 0, 0)], [(0, 0.0)])],
        )
        with pytest.raises(ValueError):
            scene.validate()

    def test_occlusion_out_of_bounds(self):
        scene = SceneScript(
            duration_frames=5,
            placements=[Placement("mug", 0, 4, [(0, 0, 0)], [(0, 1.5)])],
        )
        with pytest.raises(ValueError):
            scene.validate()

    def test_from_dict_scalar_occlusion(self):
        scene = SceneScript.from_dict({
            "duration_frames": 4,
            "placements": [{"sprite": "mug", "start": 0, "end": 3,
                            "path": [[0, 5, 5]], "occlusion": 0.3}],
        })
        assert scene.placements[0].occlusion == [(0, 0.3)]


class TestScopeSim:
    def test_timestamps_follow_fps(self):
        scene = single_sprite_scene("mug", frames=4)
        sim = ScopeSim(scene, seed=1)
        stamps = [sim.fetch().timestamp_ms for _ in range(4)]
        assert stamps == [0, 50, 100, 150]

    def test_exhaustion(self):
        scene = single_sprite_scene("mug", frames=2)
        sim = ScopeSim(scene, seed=1)
        sim.fetch()
        sim.fetch()
        assert sim.next_timestamp_ms() is None
        with pytest.raises(SourceLost):
            sim.fetch()

    def test_virtual_clock_tracks_stream(self):
        clock = VirtualClock()
        scene = single_sprite_scene("mug", frames=3)
        sim = ScopeSim(scene, seed=1, clock=clock)
        sim.fetch()
        sim.fetch()
        assert clock.now_ms() == 50


class TestWand:
    def test_scripted_events_encode_and_time(self):
        script = WandScript(events=[(100, WandKind.TOUCH_DOWN), (2100, WandKind.TOUCH_UP)])
        frames = run_wand(script)
        assert [at for at, _ in frames] == [100, 2100]
        assert frames[1][0] - frames[0][0] == 2000
        first = decode_wand_message(frames[0][1])
        second = decode_wand_message(frames[1][1])
        assert (first.kind, first.sequence) == (WandKind.TOUCH_DOWN, 0)
        assert (second.kind, second.sequence) == (WandKind.TOUCH_UP, 1)

    def test_empty_script(self):
        assert run_wand(WandScript(events=[])) == []

    def test_alternation_violation(self):
        script = WandScript(events=[(0, WandKind.TOUCH_DOWN), (10, WandKind.TOUCH_DOWN)])
        with pytest.raises(ValueError):
            script.validate()

    def test_decreasing_timestamps_rejected(self):
        script = WandScript(events=[(100, WandKind.TOUCH_DOWN), (50, WandKind.TOUCH_UP)])
        with pytest.raises(ValueError):
            script.validate()


class TestMicrophone:
    def test_recording_embeds_text_and_duration(self):
        audio = make_recording("hello", 2000)
        assert audio.text_payload == "hello"
        assert audio.duration_ms == 2000

    def test_zero_duration_still_non_empty(self):
        assert len(make_recording("x", 0).samples) > 0
