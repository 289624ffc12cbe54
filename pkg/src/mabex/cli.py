"""`mabex` command line: a thin client of the session service.

`run` and `repl` speak the service's HTTP protocol; without `--server` they
spin the FastAPI app up in process, so transcripts are identical either way.

    mabex run <scene> [--script FILE] [--recipient end_user|engineer] [--out FILE]
    mabex repl <scene>
    mabex check <spec.sml> [--scene SCENE]
    mabex serve [--host HOST] [--port PORT]

Exit codes: 0 success, 1 violation/invalid spec, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Any

from .sml.parser import ParseError, parse_specification
from .sml.validate import validate
from .v2x.script import run_script


class ServiceClient:
    """Minimal wrapper over an httpx-compatible client."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self.http = httpx.Client(base_url=server, timeout=60.0)
        else:
            from fastapi.testclient import TestClient

            from .service.app import create_app

            self.http = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        response = self.http.post(path, json=payload)
        if response.status_code >= 400:
            detail = response.json().get("detail", response.text)
            raise RuntimeError(detail)
        return response.json()

    def get(self, path: str, params: dict | None = None) -> dict:
        response = self.http.get(path, params=params or {})
        if response.status_code >= 400:
            detail = response.json().get("detail", response.text)
            raise RuntimeError(detail)
        return response.json()


class HttpDriver:
    """ScriptDriver over the service protocol."""

    def __init__(self, client: ServiceClient, session_id: str):
        self.client = client
        self.session_id = session_id

    def inject(self, event_text: str) -> dict[str, Any]:
        body = self.client.post(
            f"/sessions/{self.session_id}/events", {"event": event_text}
        )
        return body["results"][0]

    def step(self) -> dict[str, Any]:
        body = self.client.post(f"/sessions/{self.session_id}/step", {})
        return body["results"][0]

    def quiesce(self) -> list[dict[str, Any]]:
        body = self.client.post(
            f"/sessions/{self.session_id}/step", {"until_quiescent": True}
        )
        return [r for r in body["results"] if r["kind"] != "quiescent"]

    def query(self, kind: str, payload: dict[str, Any], recipient: str) -> dict[str, Any]:
        request: dict[str, Any] = {
            "kind": kind,
            "recipient": {"id": recipient, "audience": recipient},
        }
        request.update(payload)
        return self.client.post(f"/sessions/{self.session_id}/query", request)

    def reload(self, spec_text: str | None, trees: dict[str, str]) -> dict[str, Any]:
        return self.client.post(
            f"/sessions/{self.session_id}/reload-models",
            {"spec_text": spec_text, "trees": trees},
        )

    def pending(self) -> list[str]:
        state = self.client.get(f"/sessions/{self.session_id}/state")
        return state.get("pending_requested", [])


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mabex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scene script and print the transcript")
    run_p.add_argument("scene")
    run_p.add_argument("--script", type=Path, help="command file; omit for a header-only run")
    run_p.add_argument("--recipient", choices=["end_user", "engineer"], default="end_user")
    run_p.add_argument("--out", type=Path, help="write the transcript here instead of stdout")
    run_p.add_argument("--server", help="base URL of a running service (default: in-process)")

    repl_p = sub.add_parser("repl", help="interactive scene session")
    repl_p.add_argument("scene")
    repl_p.add_argument("--recipient", choices=["end_user", "engineer"], default="end_user")
    repl_p.add_argument("--server")

    check_p = sub.add_parser("check", help="parse and validate a specification file")
    check_p.add_argument("spec", type=Path)
    check_p.add_argument(
        "--scene", default="fig2", help="scene whose world schema to validate against"
    )

    serve_p = sub.add_parser("serve", help="start the session service")
    serve_p.add_argument("--host", default=os.environ.get("MABEX_HOST", "127.0.0.1"))
    serve_p.add_argument("--port", type=int, default=int(os.environ.get("MABEX_PORT", "8008")))
    serve_p.add_argument("--scene-dir", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "repl":
            return _cmd_repl(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


def _open_session(client: ServiceClient, scene: str) -> HttpDriver:
    created = client.post("/sessions", {"scene": scene})
    return HttpDriver(client, created["session_id"])


def _cmd_run(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    driver = _open_session(client, args.scene)
    commands: list[str] = []
    if args.script is not None:
        commands = args.script.read_text(encoding="utf-8").splitlines()
    transcript, exit_code = run_script(
        driver, commands, recipient=args.recipient, scene_name=args.scene
    )
    if args.out is not None:
        args.out.write_text(transcript, encoding="utf-8")
    else:
        sys.stdout.write(transcript)
    return exit_code


def _cmd_repl(args: argparse.Namespace) -> int:
    from .v2x.script import execute_command

    client = ServiceClient(args.server)
    driver = _open_session(client, args.scene)
    print(f"mabex repl, scene {args.scene!r}; commands: inject/step/quiesce/why/"
          "whycond/when/reload/follow <n>/quit")
    exit_code = 0
    last_follow_ups: list[dict] = []
    while True:
        try:
            line = input("mabex> ").strip()
        except EOFError:
            break
        if line in ("quit", "exit"):
            break
        if not line:
            continue
        if line.split(" ", 1)[0] == "follow":
            _, _, number = line.partition(" ")
            try:
                handle = last_follow_ups[int(number or "1") - 1]
            except (ValueError, IndexError):
                print("no such follow-up handle")
                continue
            line = f"{handle['kind']} {handle['payload']}"
        lines, stop, follow_ups = execute_command(
            driver, line, args.recipient, show_follow_ups=True
        )
        print("\n".join(lines))
        if follow_ups:
            last_follow_ups = follow_ups
        if stop is True:
            exit_code = 1
    return exit_code


def _cmd_check(args: argparse.Namespace) -> int:
    filename = str(args.spec)
    try:
        text = args.spec.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        spec = parse_specification(text)
    except ParseError as exc:
        print(f"{filename}:{exc.line}:{exc.col}: error: {exc.message}")
        return 1
    from .v2x.scenes import load_scene

    session = load_scene(args.scene)
    diagnostics = validate(spec, session.engine.world.schema())
    for diagnostic in diagnostics:
        print(diagnostic.to_line(filename))
    if diagnostics:
        return 1
    print(f"{filename}: OK ({len(spec.scenarios)} scenarios)")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(scene_dir=args.scene_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
