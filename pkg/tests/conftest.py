import json
from pathlib import Path

import pytest

from vivify.clock import VirtualClock
from vivify.config import EngineConfig
from vivify.devsim import Placement, SceneScript, ScopeSim
from vivify.backends.mock import make_mock_capabilities
from vivify.orchestrator import Engine


def single_sprite_scene(sprite: str, frames: int = 200, moving: bool = True,
                        occlusion=0.0) -> SceneScript:
    path = [(0, 100, 80), (frames - 1, 150, 120)] if moving else [(0, 100, 80)]
    occ = occlusion if isinstance(occlusion, list) else [(0, float(occlusion))]
    return SceneScript(
        duration_frames=frames,
        background_seed=3,
        placements=[Placement(sprite=sprite, start=0, end=frames - 1, path=path, occlusion=occ)],
    )


@pytest.fixture
def workspace(tmp_path) -> Path:
    return tmp_path / "ws"


@pytest.fixture
def engine_factory(workspace):
    """Engine wired with all-mock capabilities on a virtual clock."""

    def make(acquaint_frames: int = 30, workspace_dir: Path | None = None, **config_kwargs) -> Engine:
        clock = VirtualClock()
        config = EngineConfig(
            workspace=workspace_dir or workspace,
            acquaint_frames=acquaint_frames,
            **config_kwargs,
        )
        capabilities = make_mock_capabilities(clock=clock)
        return Engine(config, capabilities, clock=clock)

    return make


@pytest.fixture
def acquainted_engine(engine_factory):
    """Engine with one registered object (mug sprite, 30 frames)."""
    engine = engine_factory()
    scene = single_sprite_scene("mug", frames=40, moving=False)
    engine.acquaint(ScopeSim(scene, seed=1), "en", label="mug")
    return engine


def write_scene(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
