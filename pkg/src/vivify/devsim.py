"""Hardware-free device simulation: a virtual scope rendering scripted
synthetic scenes and a virtual wand replaying scripted touch timelines.

Every byte both devices produce is a pure function of (script, seed), so
end-to-end sessions are reproducible and golden-testable.
"""

from __future__ import annotations

import json
import socketserver
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rawimg
from .dialogue import SAMPLE_RATE, RecordedAudio
from .errors import SourceLost
from .protocol import (
    DEVICE_FRAME_SIZE,
    ScopeFrame,
    WandKind,
    WandMessage,
    encode_frame_payload,
    encode_wand_message,
)

DEFAULT_FPS = 20

# One sprite per object category used in the simulated scenes. Base colors
# are saturated so the mock segmenter and persona rules key off them; the
# background noise band (108..148 per channel) never reaches their spread.
SPRITE_COLORS = {
    "board": (40, 90, 220),
    "pumpkin": (235, 130, 30),
    "notebook": (30, 190, 200),
    "plant": (40, 200, 45),
    "tennis": (220, 210, 40),
    "figurine": (150, 60, 230),
    "mug": (230, 40, 45),
    "lipstick": (230, 40, 170),
}
SPRITE_NAMES = tuple(SPRITE_COLORS)
SPRITE_SIZE = 64

NOISE_LO = 108
NOISE_HI = 149  # exclusive


def make_sprite(name: str, size: int = SPRITE_SIZE) -> np.ndarray:
    """Deterministic RGB tile: base color with a brightness gradient,
    horizontal bands, and seeded speckle (keeps template variance nonzero)."""
    base = np.asarray(SPRITE_COLORS[name], dtype=np.float64)
    rng = np.random.default_rng(zlib.crc32(name.encode("utf-8")))
    v = np.linspace(0.65, 1.0, size)[:, None]
    bands = 1.0 - 0.12 * ((np.arange(size) // 8) % 2)
    speckle = rng.uniform(0.92, 1.0, size=(size, size))
    scale = v * bands[None, :] * speckle
    tile = base[None, None, :] * scale[:, :, None]
    return np.clip(np.round(tile), 0, 255).astype(np.uint8)


def sprite_tile(name: str) -> np.ndarray:
    """Load a fixture sprite shipped with the package."""
    path = Path(__file__).parent / "sprites" / f"{name}.rgb"
    return rawimg.load_tile(path)


def write_sprite_fixtures(root: Path | str) -> list[Path]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in SPRITE_NAMES:
        path = root / f"{name}.rgb"
        rawimg.save_tile(path, make_sprite(name))
        paths.append(path)
    return paths


@dataclass
class Placement:
    sprite: str
    start: int  # first frame the sprite is visible
    end: int  # last frame, inclusive
    path: list[tuple[int, int, int]]  # (frame, x, y) waypoints, top-left corner
    occlusion: list[tuple[int, float]]  # (frame, fraction) steps

    def position_at(self, index: int) -> tuple[int, int]:
        pts = self.path
        if index <= pts[0][0]:
            return pts[0][1], pts[0][2]
        for (f0, x0, y0), (f1, x1, y1) in zip(pts, pts[1:]):
            if index <= f1:
                t = (index - f0) / (f1 - f0) if f1 > f0 else 0.0
                return round(x0 + t * (x1 - x0)), round(y0 + t * (y1 - y0))
        return pts[-1][1], pts[-1][2]

    def occlusion_at(self, index: int) -> float:
        value = 0.0
        for f, frac in self.occlusion:
            if index >= f:
                value = frac
        return value


@dataclass
class SceneScript:
    duration_frames: int
    background_seed: int = 0
    fps: int = DEFAULT_FPS
    placements: list[Placement] = field(default_factory=list)

    def validate(self) -> None:
        if self.duration_frames < 1:
            raise ValueError("scene must last at least one frame")
        for p in self.placements:
            if p.sprite not in SPRITE_COLORS:
                raise ValueError(f"unknown sprite {p.sprite!r}")
            if not (0 <= p.start <= p.end < self.duration_frames):
                raise ValueError(f"placement range {p.start}..{p.end} outside scene")
            if not p.path:
                raise ValueError("placement needs at least one path waypoint")
            for _, frac in p.occlusion:
                if not 0.0 <= frac <= 1.0:
                    raise ValueError(f"occlusion fraction {frac} outside [0, 1]")

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneScript":
        placements = []
        for raw in doc.get("placements", []):
            occ = raw.get("occlusion", 0.0)
            if isinstance(occ, (int, float)):
                occ = [(0, float(occ))]
            else:
                occ = [(int(f), float(v)) for f, v in occ]
            placements.append(
                Placement(
                    sprite=raw["sprite"],
                    start=int(raw["start"]),
                    end=int(raw["end"]),
                    path=[(int(f), int(x), int(y)) for f, x, y in raw["path"]],
                    occlusion=occ,
                )
            )
        script = cls(
            duration_frames=int(doc["duration_frames"]),
            background_seed=int(doc.get("background_seed", 0)),
            fps=int(doc.get("fps", DEFAULT_FPS)),
            placements=placements,
        )
        script.validate()
        return script

    @classmethod
    def from_json(cls, path: Path | str) -> "SceneScript":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def render_frame(script: SceneScript, seed: int, index: int,
                 sprites: dict[str, np.ndarray] | None = None) -> np.ndarray:
    """Render one 320x320 RGB frame of the scene. Pure in (script, seed, index)."""
    size = DEVICE_FRAME_SIZE
    rng = np.random.default_rng([seed, script.background_seed, index])
    frame = rng.integers(NOISE_LO, NOISE_HI, size=(size, size, 3), dtype=np.uint8)
    for placement in script.placements:
        if not placement.start <= index <= placement.end:
            continue
        tile = (sprites or {}).get(placement.sprite)
        if tile is None:
            tile = sprite_tile(placement.sprite)
        tile = tile.copy()
        h, w = tile.shape[:2]
        occl = placement.occlusion_at(index)
        if occl > 0:
            rows = int(round(occl * h))
            if rows:
                tile[:rows] = rng.integers(NOISE_LO, NOISE_HI, size=(rows, w, 3), dtype=np.uint8)
        x, y = placement.position_at(index)
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + w, size), min(y + h, size)
        if x1 > x0 and y1 > y0:
            frame[y0:y1, x0:x1] = tile[y0 - y : y1 - y, x0 - x : x1 - x]
    return frame


class ScopeSim:
    """In-process virtual scope: a frame source over a scripted scene.

    Each fetch renders the next frame at the configured rate; a virtual
    clock, when given, is advanced to the frame's timestamp.
    """

    def __init__(self, script: SceneScript, seed: int, clock=None):
        script.validate()
        self.script = script
        self.seed = seed
        self.clock = clock
        self.period_ms = 1000 // script.fps
        self._index = 0
        self._sprites = {name: sprite_tile(name) for name in
                         {p.sprite for p in script.placements}}

    def next_timestamp_ms(self) -> int | None:
        """Timestamp of the frame the next fetch will deliver, or None."""
        if self._index >= self.script.duration_frames:
            return None
        return self._index * self.period_ms

    def fetch(self) -> ScopeFrame:
        if self._index >= self.script.duration_frames:
            raise SourceLost("scene script exhausted")
        index = self._index
        self._index += 1
        pixels = render_frame(self.script, self.seed, index, self._sprites)
        frame = ScopeFrame(
            sequence=index,
            timestamp_ms=index * self.period_ms,
            width=DEVICE_FRAME_SIZE,
            height=DEVICE_FRAME_SIZE,
            pixels=pixels.tobytes(),
        )
        if self.clock is not None:
            self.clock.advance_to(frame.timestamp_ms)
        return frame

    def close(self) -> None:
        self._index = self.script.duration_frames


class ScopeServer:
    """Serves a ScopeSim over TCP using the frame wire format: one request
    byte in, one 8-byte header plus RGB payload out. The stream closes when
    the scene is exhausted."""

    def __init__(self, script: SceneScript, seed: int, host: str = "127.0.0.1", port: int = 0):
        sim = ScopeSim(script, seed)
        lock = threading.Lock()

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                while True:
                    req = self.request.recv(1)
                    if not req:
                        return
                    with lock:
                        try:
                            frame = sim.fetch()
                        except SourceLost:
                            return  # close: client sees EOF
                    self.request.sendall(encode_frame_payload(frame))

        self._server = socketserver.ThreadingTCPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "ScopeServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "ScopeServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


@dataclass
class WandScript:
    events: list[tuple[int, WandKind]]  # (at_ms, kind), alternating down/up
    utterances: list[str] = field(default_factory=list)  # one per press cycle

    def validate(self) -> None:
        last_ms = -1
        expected = WandKind.TOUCH_DOWN
        for at_ms, kind in self.events:
            if at_ms < last_ms:
                raise ValueError("wand events must have non-decreasing timestamps")
            if kind is not expected:
                raise ValueError(f"wand events must alternate down/up, got {kind} at {at_ms}")
            last_ms = at_ms
            expected = WandKind.TOUCH_UP if kind is WandKind.TOUCH_DOWN else WandKind.TOUCH_DOWN

    @classmethod
    def from_dict(cls, doc: dict) -> "WandScript":
        events = [(int(at), WandKind[kind]) for at, kind in doc.get("events", [])]
        script = cls(events=events, utterances=list(doc.get("utterances", [])))
        script.validate()
        return script

    @classmethod
    def from_json(cls, path: Path | str) -> "WandScript":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def run_wand(script: WandScript) -> list[tuple[int, bytes]]:
    """Encoded wand frames at their scripted virtual times, sequences from 0."""
    script.validate()
    out = []
    for sequence, (at_ms, kind) in enumerate(script.events):
        msg = WandMessage(kind=kind, sequence=sequence % 65536)
        out.append((at_ms, encode_wand_message(msg)))
    return out


def make_recording(text: str, duration_ms: int) -> RecordedAudio:
    """Simulated push-to-talk capture: silence with the utterance embedded."""
    n = max(1, duration_ms * SAMPLE_RATE // 1000)
    return RecordedAudio(samples=bytes(n * 2), text_payload=text)
