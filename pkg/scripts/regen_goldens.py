#!/usr/bin/env python3
"""Regenerate the golden files for the end-to-end simulated session.

Runs the public CLI against the committed fixture scripts in a scratch
workspace and copies the outputs into tests/golden/e2e/. Run from the
repository root after any intentional change to the simulated pipeline,
then review the diff before committing.
"""

import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from vivify.cli import main  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"
GOLDEN = REPO / "tests" / "golden" / "e2e"


def run() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        workspace = Path(scratch) / "ws"
        out_dir = Path(scratch) / "sim"
        code = main([
            "--workspace", str(workspace), "acquaint",
            "--source", str(FIXTURES / "acquaint_mug.json"),
            "--language", "en", "--label", "mug",
        ])
        assert code == 0, "acquaint failed"
        code = main([
            "--workspace", str(workspace), "simulate",
            "--scene", str(FIXTURES / "bonding_mug.json"),
            "--wand", str(FIXTURES / "wand_two_cycles.json"),
            "--out", str(out_dir),
        ])
        assert code == 0, "simulate failed"

        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        GOLDEN.mkdir(parents=True)
        shutil.copy2(out_dir / "transcript.txt", GOLDEN / "transcript.txt")
        shutil.copy2(out_dir / "metrics.txt", GOLDEN / "metrics.txt")
        shutil.copy2(workspace / "history" / "0.json", GOLDEN / "history_0.json")
        (GOLDEN / "clips").mkdir()
        for clip in sorted((out_dir / "clips").iterdir()):
            shutil.copy2(clip, GOLDEN / "clips" / clip.name)
    print(f"golden files written under {GOLDEN}")


if __name__ == "__main__":
    run()
