"""Visual pipeline: frame collection, mask-to-box conversion, dataset
construction with the 7:2:1 split, incremental detector registration, and
detection-stream evaluation.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .clock import RealClock
from .errors import (
    ClassListMismatch,
    EmptyMask,
    IoFailure,
    SourceLost,
    TooFewSamples,
    TrainerFailure,
)
from .protocol import ScopeFrame

DEFAULT_CONFIDENCE_THRESHOLD = 0.75
TRAIN_EPOCHS = 100
TRAIN_PATIENCE = 25
EVAL_FRAMES = 200


@dataclass
class Mask:
    width: int
    height: int
    bits: np.ndarray  # bool, shape (height, width), row-major

    @property
    def empty(self) -> bool:
        return not bool(self.bits.any())


@dataclass(frozen=True)
class BBox:
    """Normalized center-format box in the unit square."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"center out of unit square: ({self.cx}, {self.cy})")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"bad box size: {self.w}x{self.h}")
        eps = 1e-9
        if (
            self.cx - self.w / 2 < -eps
            or self.cx + self.w / 2 > 1 + eps
            or self.cy - self.h / 2 < -eps
            or self.cy + self.h / 2 > 1 + eps
        ):
            raise ValueError("box extends past the unit square")

    def to_pixels(self, width: int, height: int) -> tuple[int, int, int, int]:
        """(x0, y0, x1, y1) pixel rectangle, x1/y1 exclusive."""
        x0 = int(round((self.cx - self.w / 2) * width))
        y0 = int(round((self.cy - self.h / 2) * height))
        x1 = int(round((self.cx + self.w / 2) * width))
        y1 = int(round((self.cy + self.h / 2) * height))
        return x0, y0, x1, y1


@dataclass
class AnnotatedSample:
    frame: ScopeFrame
    class_id: int
    bbox: BBox


@dataclass
class Dataset:
    train: list[AnnotatedSample] = field(default_factory=list)
    val: list[AnnotatedSample] = field(default_factory=list)
    test: list[AnnotatedSample] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    @property
    def samples(self) -> list[AnnotatedSample]:
        return self.train + self.val + self.test


@dataclass(frozen=True)
class Detection:
    class_id: int
    bbox: BBox
    confidence: float
    latency_ms: float


@dataclass
class DetectionReport:
    truth_class: int
    frames_evaluated: int
    accuracy: float
    latency_ms_mean: float
    latency_ms_sd: float
    confidence_mean: float
    confidence_sd: float
    threshold: float

    def to_text(self) -> str:
        lines = [
            f"truth_class = {self.truth_class}",
            f"frames_evaluated = {self.frames_evaluated}",
            f"threshold = {self.threshold:.6f}",
            f"accuracy = {self.accuracy:.6f}",
            f"latency_ms_mean = {self.latency_ms_mean:.6f}",
            f"latency_ms_sd = {self.latency_ms_sd:.6f}",
            f"confidence_mean = {self.confidence_mean:.6f}",
            f"confidence_sd = {self.confidence_sd:.6f}",
        ]
        return "\n".join(lines) + "\n"


def frame_to_array(frame: ScopeFrame) -> np.ndarray:
    """RGB uint8 array of shape (height, width, 3)."""
    return np.frombuffer(frame.pixels, dtype=np.uint8).reshape(frame.height, frame.width, 3)


def collect_frames(source, n: int) -> list[ScopeFrame]:
    """Pull exactly n frames in arrival order; a partial buffer is discarded."""
    if n < 1:
        raise ValueError("frame count must be >= 1")
    frames: list[ScopeFrame] = []
    for _ in range(n):
        frames.append(source.fetch())  # SourceLost propagates, dropping the partial buffer
    return frames


def mask_to_bbox(mask: Mask) -> BBox:
    """Minimal normalized box containing every true bit, center-format.

    A pixel covers the unit cell [x, x+1) x [y, y+1), so a single true bit
    at (0,0) maps to a box of width 1/w centered at 0.5/w.
    """
    if mask.empty:
        raise EmptyMask("cannot box an all-false mask")
    ys, xs = np.nonzero(mask.bits)
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    return BBox(
        cx=(x0 + x1) / 2 / mask.width,
        cy=(y0 + y1) / 2 / mask.height,
        w=(x1 - x0) / mask.width,
        h=(y1 - y0) / mask.height,
    )


def split_sizes(n: int) -> tuple[int, int, int]:
    """(train, val, test) sizes for the 7:2:1 split under the floor rule."""
    test = n // 10
    val = (2 * n) // 10
    return n - val - test, val, test


def build_dataset(
    samples: list[AnnotatedSample], seed: int, class_names: list[str] | None = None
) -> Dataset:
    """Deterministic shuffle by seed, then 7:2:1 split."""
    if len(samples) < 10:
        raise TooFewSamples(f"need at least 10 samples, got {len(samples)}")
    shuffled = list(samples)
    random.Random(seed).shuffle(shuffled)
    n_train, n_val, n_test = split_sizes(len(shuffled))
    if class_names is None:
        class_names = [f"class_{cid}" for cid in sorted({s.class_id for s in shuffled})]
    for sample in shuffled:
        if sample.class_id >= len(class_names):
            raise ValueError(f"sample class {sample.class_id} has no label")
    return Dataset(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        class_names=class_names,
    )


def _label_line(sample: AnnotatedSample) -> str:
    b = sample.bbox
    return f"{sample.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}"


def _sample_basename(sample: AnnotatedSample) -> str:
    return f"c{sample.class_id}_s{sample.frame.sequence:06d}"


def write_annotations(dataset: Dataset, root: Path | str) -> list[Path]:
    """Write the split dataset layout and return the written paths.

    Layout: root/{train,val,test}/{images,labels} plus root/classes.txt with
    one label per line (line number = class id). Labels are one-line
    "class_id cx cy w h" with six-decimal floats.
    """
    root = Path(root)
    written: list[Path] = []
    try:
        for split_name, samples in (("train", dataset.train), ("val", dataset.val), ("test", dataset.test)):
            images = root / split_name / "images"
            labels = root / split_name / "labels"
            images.mkdir(parents=True, exist_ok=True)
            labels.mkdir(parents=True, exist_ok=True)
            for sample in samples:
                base = _sample_basename(sample)
                image_path = images / f"{base}.png"
                rgb = frame_to_array(sample.frame)
                if not cv2.imwrite(str(image_path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR)):
                    raise IoFailure(f"image encode failed: {image_path}")
                label_path = labels / f"{base}.txt"
                label_path.write_text(_label_line(sample) + "\n", encoding="utf-8")
                written.extend([image_path, label_path])
        classes_path = root / "classes.txt"
        classes_path.write_text("\n".join(dataset.class_names) + "\n", encoding="utf-8")
        written.append(classes_path)
    except OSError as exc:
        raise IoFailure(f"cannot write dataset under {root}: {exc}") from exc
    return written


def read_annotations(root: Path | str) -> list[AnnotatedSample]:
    """Load samples back from a written dataset directory (all splits)."""
    root = Path(root)
    samples: list[AnnotatedSample] = []
    try:
        for split_name in ("train", "val", "test"):
            labels = root / split_name / "labels"
            if not labels.is_dir():
                continue
            for label_path in sorted(labels.glob("*.txt")):
                image_path = root / split_name / "images" / (label_path.stem + ".png")
                bgr = cv2.imread(str(image_path), cv2.IMREAD_COLOR)
                if bgr is None:
                    raise IoFailure(f"cannot read image {image_path}")
                rgb = cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)
                parts = label_path.read_text(encoding="utf-8").split()
                class_id = int(parts[0])
                bbox = BBox(cx=float(parts[1]), cy=float(parts[2]), w=float(parts[3]), h=float(parts[4]))
                sequence = int(label_path.stem.rsplit("_s", 1)[1])
                frame = ScopeFrame(
                    sequence=sequence,
                    timestamp_ms=0,
                    width=rgb.shape[1],
                    height=rgb.shape[0],
                    pixels=rgb.tobytes(),
                )
                samples.append(AnnotatedSample(frame=frame, class_id=class_id, bbox=bbox))
    except OSError as exc:
        raise IoFailure(f"cannot read dataset under {root}: {exc}") from exc
    return samples


def register_class(dataset: Dataset, trainer, prev=None):
    """Train/extend the detector over the dataset's classes.

    The trainer receives the fixed 100-epoch budget with patience 25. When a
    previous model is given its class list must be a prefix of the dataset's.
    """
    if prev is not None:
        prev_classes = list(prev.classes)
        if dataset.class_names[: len(prev_classes)] != prev_classes:
            raise ClassListMismatch(
                f"previous classes {prev_classes} are not a prefix of {dataset.class_names}"
            )
    try:
        model = trainer.train(dataset, prev, epochs=TRAIN_EPOCHS, patience=TRAIN_PATIENCE)
    except Exception as exc:
        raise TrainerFailure(str(exc)) from exc
    if list(model.classes) != list(dataset.class_names):
        raise TrainerFailure(
            f"trainer returned classes {list(model.classes)}, wanted {dataset.class_names}"
        )
    return model


def detect(
    frame: ScopeFrame,
    model,
    detector,
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    clock=None,
) -> list[Detection]:
    """Run the detector backend, measure latency around the call, and keep
    detections at or above the confidence threshold, sorted by confidence."""
    if not model.classes:
        raise ValueError("model has no registered classes")
    clock = clock or RealClock()
    start = clock.now_ms()
    raw = detector.run(frame, model)
    latency = clock.now_ms() - start
    hits = [
        Detection(class_id=cid, bbox=bbox, confidence=conf, latency_ms=latency)
        for cid, bbox, conf in raw
        if conf >= threshold
    ]
    hits.sort(key=lambda d: -d.confidence)
    return hits


def evaluate_stream(
    source,
    model,
    detector,
    truth: int,
    n: int = EVAL_FRAMES,
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    clock=None,
) -> DetectionReport:
    """Continuous-detection accuracy over n frames, with latency and
    confidence statistics over the accepted detections."""
    if n < 1:
        raise TooFewSamples("evaluation needs at least one frame")
    clock = clock or RealClock()
    correct = 0
    latencies: list[float] = []
    confidences: list[float] = []
    for _ in range(n):
        frame = source.fetch()
        detections = detect(frame, model, detector, threshold=threshold, clock=clock)
        if detections:
            latencies.append(detections[0].latency_ms)
        if detections and detections[0].class_id == truth:
            correct += 1
            confidences.append(detections[0].confidence)
    return DetectionReport(
        truth_class=truth,
        frames_evaluated=n,
        accuracy=correct / n,
        latency_ms_mean=statistics.fmean(latencies) if latencies else 0.0,
        latency_ms_sd=statistics.pstdev(latencies) if latencies else 0.0,
        confidence_mean=statistics.fmean(confidences) if confidences else 0.0,
        confidence_sd=statistics.pstdev(confidences) if confidences else 0.0,
        threshold=threshold,
    )
