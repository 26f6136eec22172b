"""Deterministic mock backends.

Every mock is a pure function of its inputs and construction parameters:
two runs with identical configuration produce byte-identical outputs, which
is what makes desk-scale golden tests possible.
"""

from __future__ import annotations

import colorsys
import json
import time
from pathlib import Path

import cv2
import numpy as np

from .. import rawimg
from ..dialogue import SAMPLE_RATE, RecordedAudio
from ..errors import BackendFailure
from ..persona import VoiceId
from ..vision import BBox, Dataset, Mask, frame_to_array
from .base import (
    CapabilitySet,
    ChatModel,
    DetectorBackend,
    PersonaGenerator,
    Segmenter,
    Synthesizer,
    Trainer,
    Transcriber,
)

# Pixels whose channel spread exceeds this are "colorful"; the simulated
# background noise never exceeds a spread of 40, sprites never drop below 80.
COLORFULNESS_THRESHOLD = 60

# Simulated per-sentence synthesis speed: audio produced at 60 ms per
# character, synthesis wall time at 0.6297x the audio duration.
MS_PER_CHAR = 60
SIM_SYNTH_RTF = 0.6297

VOICE_FREQ_HZ = {
    VoiceId.ELDERLY_MALE: 110,
    VoiceId.YOUNG_MALE: 165,
    VoiceId.NEUTRAL: 196,
    VoiceId.ELDERLY_FEMALE: 220,
    VoiceId.CHILD_MALE: 262,
    VoiceId.YOUNG_FEMALE: 330,
    VoiceId.CHILD_FEMALE: 440,
}


class MockSegmenter(Segmenter):
    """Salient-region extractor for simulated scenes.

    Marks colorful pixels, then keeps the largest connected component; ties
    go to the component whose centroid is topmost, then leftmost.
    """

    def __init__(self, threshold: int = COLORFULNESS_THRESHOLD):
        self.threshold = threshold

    def segment(self, frame) -> Mask:
        rgb = frame_to_array(frame).astype(np.int16)
        spread = rgb.max(axis=2) - rgb.min(axis=2)
        salient = (spread > self.threshold).astype(np.uint8)
        count, labels, stats, centroids = cv2.connectedComponentsWithStats(salient, connectivity=8)
        best = 0
        best_key = None
        for i in range(1, count):
            area = int(stats[i, cv2.CC_STAT_AREA])
            cx, cy = centroids[i]
            key = (-area, cy, cx)
            if best_key is None or key < best_key:
                best_key = key
                best = i
        bits = labels == best if best else np.zeros((frame.height, frame.width), dtype=bool)
        return Mask(width=frame.width, height=frame.height, bits=bits)


class MockModel:
    """Template-matching 'detector weights': one RGB template per class."""

    def __init__(self, classes: list[str], templates: dict[int, np.ndarray],
                 epochs_budget: int, patience: int):
        self.classes = list(classes)
        self.templates = templates
        self.epochs_budget = epochs_budget
        self.patience = patience

    def save(self, root: Path | str) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        (root / "classes.txt").write_text("\n".join(self.classes) + "\n", encoding="utf-8")
        meta = {"epochs_budget": self.epochs_budget, "patience": self.patience}
        (root / "meta.json").write_text(json.dumps(meta) + "\n", encoding="utf-8")
        for cid, tile in self.templates.items():
            rawimg.save_tile(root / f"c{cid}.rgb", tile)

    @classmethod
    def load(cls, root: Path | str) -> "MockModel":
        root = Path(root)
        classes = (root / "classes.txt").read_text(encoding="utf-8").splitlines()
        meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
        templates = {
            cid: rawimg.load_tile(root / f"c{cid}.rgb") for cid in range(len(classes))
        }
        return cls(classes, templates, meta["epochs_budget"], meta["patience"])


class MockTrainer(Trainer):
    """Stores one acquaintance template per class instead of fitting weights.

    The template is the bbox crop of the class's first training sample, so
    retraining over the same cached samples reproduces the same model.
    """

    def train(self, dataset: Dataset, prev, epochs: int, patience: int) -> MockModel:
        templates: dict[int, np.ndarray] = {}
        for sample in dataset.train:
            if sample.class_id in templates:
                continue
            rgb = frame_to_array(sample.frame)
            x0, y0, x1, y1 = sample.bbox.to_pixels(sample.frame.width, sample.frame.height)
            templates[sample.class_id] = rgb[y0:y1, x0:x1].copy()
        missing = [cid for cid in range(len(dataset.class_names)) if cid not in templates]
        if missing:
            raise BackendFailure(f"no training samples for classes {missing}")
        return MockModel(dataset.class_names, templates, epochs_budget=epochs, patience=patience)

    def save_model(self, model: MockModel, root) -> None:
        model.save(root)

    def load_model(self, root) -> MockModel:
        return MockModel.load(root)


class MockDetector(DetectorBackend):
    """Normalized cross-correlation template matcher.

    Confidence is the correlation score of the best placement per class.
    Processing cost is charged to the injected clock: a per-class term plus
    a deterministic jitter keyed by the frame sequence, so simulated latency
    statistics are exactly reproducible.
    """

    def __init__(self, clock=None, base_cost_ms: float = 8.0, per_class_cost_ms: float = 1.0):
        self.clock = clock
        self.base_cost_ms = base_cost_ms
        self.per_class_cost_ms = per_class_cost_ms

    def _cost_ms(self, sequence: int, n_classes: int) -> float:
        jitter = ((sequence * 2654435761) % 2048) / 1024.0
        return self.base_cost_ms + self.per_class_cost_ms * n_classes + jitter

    def run(self, frame, model: MockModel) -> list[tuple[int, BBox, float]]:
        rgb = frame_to_array(frame)
        out: list[tuple[int, BBox, float]] = []
        for cid, template in model.templates.items():
            th, tw = template.shape[:2]
            if th > frame.height or tw > frame.width:
                continue
            scores = cv2.matchTemplate(rgb, template, cv2.TM_CCOEFF_NORMED)
            _, max_val, _, max_loc = cv2.minMaxLoc(scores)
            x, y = max_loc
            bbox = BBox(
                cx=(x + tw / 2) / frame.width,
                cy=(y + th / 2) / frame.height,
                w=tw / frame.width,
                h=th / frame.height,
            )
            out.append((cid, bbox, float(np.clip(max_val, 0.0, 1.0))))
        if self.clock is not None:
            self.clock.advance(self._cost_ms(frame.sequence, len(model.templates)))
        return out


# Rule table keyed by the dominant hue of the salient region. Bilingual:
# each entry carries English and Chinese field sets.
_PERSONA_RULES = {
    "red": {
        "voice": VoiceId.YOUNG_FEMALE,
        "en": ("Cuppie", "female", "about 3 years",
               "Warm, bubbly, and a little protective of her owner.",
               "Fired in a small kiln and adopted on a rainy Tuesday, she has held every drink like a secret."),
        "zh": ("小红", "女", "大约三岁",
               "热情开朗，还有点爱操心。",
               "她在一个小窑里诞生，一个雨天被带回家，从此守护着每一杯饮品。"),
    },
    "orange": {
        "voice": VoiceId.CHILD_MALE,
        "en": ("Pumpo", "male", "4 autumns",
               "Playful and easily excited, laughs at his own jokes.",
               "Sewn from leftover autumn felt, he dreams of one day rolling down a real hill."),
        "zh": ("南瓜瓜", "男", "四个秋天",
               "爱玩爱闹，总被自己的笑话逗乐。",
               "他由秋天剩下的绒布缝成，梦想有一天滚下真正的山坡。"),
    },
    "yellow": {
        "voice": VoiceId.CHILD_FEMALE,
        "en": ("Bouncy", "female", "2 seasons",
               "Restless and cheerful, always ready for one more game.",
               "She escaped a tennis court once and decided desks are safer than rackets."),
        "zh": ("跳跳", "女", "两个赛季",
               "闲不住又乐呵呵，永远想再玩一局。",
               "她曾从网球场逃出来，觉得书桌比球拍安全多了。"),
    },
    "green": {
        "voice": VoiceId.ELDERLY_FEMALE,
        "en": ("Fern", "female", "many springs",
               "Calm and patient, speaks slowly and notices everything.",
               "Grown from a cutting passed between three households, she remembers every windowsill."),
        "zh": ("蕨奶奶", "女", "许多个春天",
               "沉稳耐心，说话慢悠悠，却什么都看在眼里。",
               "她由一段插枝长成，辗转三户人家，记得每一个窗台。"),
    },
    "cyan": {
        "voice": VoiceId.YOUNG_MALE,
        "en": ("Jotty", "male", "one semester",
               "Earnest and tidy, quietly proud of straight lines.",
               "Bound from recycled paper, he believes every blank page is a promise."),
        "zh": ("小记", "男", "一个学期",
               "认真细致，为笔直的线条偷偷自豪。",
               "他由再生纸装订而成，相信每一页空白都是一个约定。"),
    },
    "blue": {
        "voice": VoiceId.ELDERLY_MALE,
        "en": ("Boardie", "male", "a decade of classes",
               "Dry-humored and encouraging, fond of long pauses.",
               "He has carried a thousand sketches and erased none of them from memory."),
        "zh": ("板板", "男", "十年课堂",
               "幽默冷静，喜欢鼓励人，也喜欢停顿。",
               "他承载过上千幅草图，却从未从记忆里擦去任何一幅。"),
    },
    "purple": {
        "voice": VoiceId.NEUTRAL,
        "en": ("Figgy", "none", "timeless",
               "Theatrical and mysterious, speaks as if on stage.",
               "Cast from resin under a full moon, or so Figgy insists on telling everyone."),
        "zh": ("小紫", "无", "无法考证",
               "戏剧化又神秘，说话像在舞台上。",
               "据它自己坚持的说法，它是在满月之夜用树脂铸成的。"),
    },
    "magenta": {
        "voice": VoiceId.YOUNG_FEMALE,
        "en": ("Rouge", "female", "one collection",
               "Confident and precise, never raises her voice.",
               "Picked from a hundred shades, she takes her duty of first impressions seriously."),
        "zh": ("胭脂", "女", "一个系列",
               "自信而精准，从不提高嗓门。",
               "她是从上百个色号中选出的，郑重对待每一次第一印象。"),
    },
    "gray": {
        "voice": VoiceId.NEUTRAL,
        "en": ("Pebble", "none", "unknown",
               "Quiet and thoughtful, comfortable with silence.",
               "Nobody remembers where it came from, which suits it perfectly."),
        "zh": ("小灰", "无", "不详",
               "安静沉思，与沉默相处自如。",
               "没有人记得它从哪里来，它觉得这样正好。"),
    },
}


def dominant_color_bucket(frame) -> str:
    """Name the hue bucket of the frame's colorful pixels, or 'gray'."""
    rgb = frame_to_array(frame).astype(np.int16)
    spread = rgb.max(axis=2) - rgb.min(axis=2)
    colorful = spread > COLORFULNESS_THRESHOLD
    if not colorful.any():
        return "gray"
    mean = rgb[colorful].mean(axis=0) / 255.0
    hue = colorsys.rgb_to_hsv(*mean)[0] * 360.0
    if hue < 20 or hue >= 330:
        return "red"
    if hue < 50:
        return "orange"
    if hue < 80:
        return "yellow"
    if hue < 160:
        return "green"
    if hue < 200:
        return "cyan"
    if hue < 260:
        return "blue"
    if hue < 300:
        return "purple"
    return "magenta"


class MockPersonaGenerator(PersonaGenerator):
    """Rule-table persona writer keyed by the dominant sprite color."""

    def generate(self, frame, language: str, prompt: str) -> str:
        if language not in ("en", "zh"):
            raise BackendFailure(f"unsupported language {language!r}")
        rule = _PERSONA_RULES[dominant_color_bucket(frame)]
        name, gender, age, personality, backstory = rule[language]
        document = {
            "name": name,
            "gender": gender,
            "age": age,
            "personality": personality,
            "backstory": backstory,
            "voice": rule["voice"].value,
            "language": language,
        }
        return json.dumps(document, ensure_ascii=False)


class MockTranscriber(Transcriber):
    """Returns the utterance text embedded in a simulated recording."""

    def transcribe(self, audio: RecordedAudio, language: str) -> str:
        if audio.text_payload is None:
            raise BackendFailure("mock transcriber needs a recording with an embedded text payload")
        return audio.text_payload


class MockChat(ChatModel):
    """Templated echo: deterministic reply embedding the persona name, the
    last user text, and the history length, a marker after every sentence."""

    def __init__(self, sentences: int | None = None):
        self.sentences = sentences

    def complete(self, request: dict) -> str:
        meta = request["meta"]
        name = meta["persona_name"]
        marker = meta["marker"]
        records = meta["history_records"]
        user_text = request["messages"][-1]["content"]
        if meta["language"] == "zh":
            pool = [
                f"{name}听到了：{user_text}。",
                f"{name}记得之前的{records}句话。",
                f"{name}轻轻哼起了小曲。",
                f"{name}想了想，点了点头。",
            ]
        else:
            pool = [
                f"{name} hears: {user_text}.",
                f"{name} recalls {records} earlier lines.",
                f"{name} hums a little tune.",
                f"{name} thinks it over and nods.",
            ]
        if self.sentences is None:
            chosen = pool[:1] if records == 0 else pool[:2]
        else:
            chosen = [pool[i % len(pool)] for i in range(self.sentences)]
        return " ".join(s + marker for s in chosen).strip()


class MockSynthesizer(Synthesizer):
    """Sine-tone synthesis: the tone frequency encodes the voice id, audio
    duration is 60 ms per character, and the reported synthesis time is the
    analytic SIM_SYNTH_RTF fraction of that duration.

    delay_fn (text -> ms) injects real scheduling delays so tests can force
    adversarial completion orders without touching the reported timings.
    """

    def __init__(self, ms_per_char: int = MS_PER_CHAR, sim_rtf: float = SIM_SYNTH_RTF,
                 delay_fn=None):
        self.ms_per_char = ms_per_char
        self.sim_rtf = sim_rtf
        self.delay_fn = delay_fn

    def synthesize(self, text: str, voice: VoiceId) -> tuple[bytes, float]:
        if self.delay_fn is not None:
            time.sleep(self.delay_fn(text) / 1000.0)
        freq = VOICE_FREQ_HZ[VoiceId(voice)]
        duration_ms = len(text) * self.ms_per_char
        n = duration_ms * SAMPLE_RATE // 1000
        t = np.arange(n, dtype=np.float64)
        wave = np.sin(2.0 * np.pi * freq * t / SAMPLE_RATE)
        samples = np.round(wave * 0.3 * 32767.0).astype("<i2").tobytes()
        return samples, duration_ms * self.sim_rtf


def tone_frequency(samples: bytes) -> float:
    """Dominant frequency of a PCM16 clip, for asserting voice selection."""
    data = np.frombuffer(samples, dtype="<i2").astype(np.float64)
    if len(data) == 0:
        return 0.0
    spectrum = np.abs(np.fft.rfft(data))
    return float(np.argmax(spectrum) * SAMPLE_RATE / len(data))


def make_mock_capabilities(clock=None, chat_sentences: int | None = None,
                           synth_delay_fn=None) -> CapabilitySet:
    return CapabilitySet(
        segmenter=MockSegmenter(),
        trainer=MockTrainer(),
        detector=MockDetector(clock=clock),
        persona_generator=MockPersonaGenerator(),
        transcriber=MockTranscriber(),
        chat=MockChat(sentences=chat_sentences),
        synthesizer=MockSynthesizer(delay_fn=synth_delay_fn),
    )
