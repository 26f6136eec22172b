"""Operator entry point.

Subcommands: acquaint, talk, simulate, eval, serve, persona. Exit codes:
0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .clock import RealClock, VirtualClock
from .config import build_capabilities, load_config
from .devsim import SceneScript, ScopeSim, WandScript, make_recording
from .dialogue import write_wav
from .errors import UsageError, VivifyError
from .orchestrator import Engine
from .persona import PersonaStore, edit_persona
from .protocol import FrameClient
from .runner import run_scripted_session
from .service import SessionServer
from .vision import evaluate_stream


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _global_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--backends", choices=["mock", "http"], help="backend kind for all slots")
    parser.add_argument("--endpoint", help="base URL for http backends")
    parser.add_argument("--workspace", help="engine workspace directory")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vivify", description="Give everyday objects a voice.")
    _global_options(parser)
    # The same options are accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering values given before it.
    shared = _Parser(add_help=False)
    _global_options(shared)
    for action in shared._actions:
        action.default = argparse.SUPPRESS
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[shared], help=help_text)

    p = add_command("acquaint", "register a new object from a frame source")
    p.add_argument("--source", required=True, help="host:port or a scene script JSON")
    p.add_argument("--language", choices=["en", "zh"], default="en")
    p.add_argument("--label", help="object label (defaults to objectN)")
    p.add_argument("--seed", type=int, help="scene seed when --source is a script")

    p = add_command("talk", "interactive push-to-talk in the terminal")
    p.add_argument("--profile", type=int, required=True, help="registered class id")

    p = add_command("simulate", "run a fully scripted session")
    p.add_argument("--scene", required=True, help="scene script JSON")
    p.add_argument("--wand", required=True, help="wand script JSON")
    p.add_argument("--out", default="simulation", help="output directory")
    p.add_argument("--seed", type=int, help="scene seed override")

    p = add_command("eval", "detection-stream evaluation report")
    p.add_argument("--scene", required=True, help="scene script JSON")
    p.add_argument("--truth", type=int, required=True, help="ground-truth class id")
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--seed", type=int, help="scene seed override")

    p = add_command("serve", "host the session API for the web UI")
    p.add_argument("--bind", default="127.0.0.1:8765", help="host:port to listen on")
    p.add_argument("--source", required=True, help="host:port or a scene script JSON")
    p.add_argument("--seed", type=int, help="scene seed when --source is a script")

    p = add_command("persona", "manage stored personas")
    p.add_argument("action", choices=["edit", "show"])
    p.add_argument("class_id", type=int)
    p.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                   help="field override, repeatable")
    return parser


def _make_engine(args, clock) -> Engine:
    flags = {
        "backends": args.backends,
        "endpoint": args.endpoint,
        "workspace": args.workspace,
    }
    config = load_config(args.config, flags={k: v for k, v in flags.items() if v})
    capabilities = build_capabilities(config, clock=clock)
    return Engine(config, capabilities, clock=clock)


def _open_source(spec: str, engine: Engine, seed: int | None):
    if spec.endswith(".json") or Path(spec).exists():
        script = SceneScript.from_json(spec)
        return ScopeSim(script, seed=engine.config.scene_seed if seed is None else seed,
                        clock=engine.clock)
    return FrameClient(spec)


def _cmd_acquaint(args) -> int:
    scripted = args.source.endswith(".json") or Path(args.source).exists()
    engine = _make_engine(args, VirtualClock() if scripted else RealClock())
    source = _open_source(args.source, engine, args.seed)
    profile = engine.acquaint(source, args.language, label=args.label)
    persona = engine.persona_store.load(profile.class_id)
    print(f"registered class {profile.class_id} ({profile.label}) "
          f"as {persona.name!r}, voice {persona.voice.value}, "
          f"{len(engine.model.classes)} classes total")
    return 0


def _cmd_talk(args) -> int:
    engine = _make_engine(args, RealClock())
    if not engine.registry.profiles:
        print("no profiles registered; run `vivify acquaint` first", file=sys.stderr)
        return 2
    profile = engine.registry.get(args.profile)
    persona = engine.persona_store.load(profile.class_id)
    engine.registry.active = profile.class_id
    clips_dir = engine.workspace / "talk_clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    print(f"talking to {persona.name} ({profile.label}); enter text, Ctrl-D to stop")
    cycle = 0
    for line in sys.stdin:
        text = line.strip()
        if not text:
            continue
        cycle += 1
        audio = make_recording(text, 1000 + 50 * len(text))
        result = engine.run_bonding_cycle(audio, profile)
        if result.skipped:
            print("(cycle skipped: empty transcript)")
            continue
        print(f"{persona.name}: {result.reply_text}")
        for clip in result.played:
            path = clips_dir / f"cycle{cycle:02d}_seg{clip.segment_index:02d}.wav"
            write_wav(path, clip.samples)
    return 0


def _cmd_simulate(args) -> int:
    engine = _make_engine(args, VirtualClock())
    if not engine.registry.profiles:
        print("no profiles registered; run `vivify acquaint` first", file=sys.stderr)
        return 2
    scene = SceneScript.from_json(args.scene)
    wand = WandScript.from_json(args.wand)
    result = run_scripted_session(engine, scene, wand, args.out, seed=args.seed)
    completed = [c for c in result.cycles if not c.skipped]
    print(f"simulated {len(completed)} bonding cycles "
          f"({len(result.clip_paths)} audio files) -> {args.out}")
    print(result.transcript_path.read_text(encoding="utf-8"), end="")
    return 0


def _cmd_eval(args) -> int:
    engine = _make_engine(args, VirtualClock())
    if engine.model is None:
        print("no trained model in the workspace; run `vivify acquaint` first", file=sys.stderr)
        return 2
    scene = SceneScript.from_json(args.scene)
    source = ScopeSim(scene, seed=engine.config.scene_seed if args.seed is None else args.seed,
                      clock=engine.clock)
    report = evaluate_stream(
        source,
        engine.model,
        engine.capabilities.detector,
        truth=args.truth,
        n=args.frames,
        threshold=engine.config.confidence_threshold,
        clock=engine.clock,
    )
    text = report.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _cmd_serve(args) -> int:
    engine = _make_engine(args, RealClock())
    source = _open_source(args.source, engine, args.seed)
    host, _, port = args.bind.rpartition(":")
    server = SessionServer(engine, source, host=host or "127.0.0.1", port=int(port))
    server.start()
    print(f"session API listening on {server.endpoint}")
    try:
        server.wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _cmd_persona(args) -> int:
    config = load_config(args.config, flags={"workspace": args.workspace} if args.workspace else {})
    store = PersonaStore(config.workspace)
    persona = store.load(args.class_id)
    if args.action == "edit":
        overrides = {}
        for item in getattr(args, "set"):
            if "=" not in item:
                raise UsageError(f"--set expects FIELD=VALUE, got {item!r}")
            key, _, value = item.partition("=")
            overrides[key] = value
        persona = edit_persona(persona, overrides)
        store.save(args.class_id, persona)
    print(persona.to_json(), end="")
    return 0


_COMMANDS = {
    "acquaint": _cmd_acquaint,
    "talk": _cmd_talk,
    "simulate": _cmd_simulate,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "persona": _cmd_persona,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (VivifyError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
