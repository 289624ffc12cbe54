"""Scripted scene runs producing deterministic transcripts.

Commands (one per line, `#` starts a comment):

    inject <sender -> receiver.message(args)>
    step
    quiesce
    why <event-ref>            # "last", "#<n>", or an event pattern
    whycond <condition>
    when <pattern> [<horizon>]
    reload <file> [<file> ...] # .sml swaps the scenario models, .causes the trees

The interpreter runs against a driver so the same transcripts come out of
an in-process session and of the HTTP client the CLI uses.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Protocol

from ..engine.playout import EngineError
from ..loop.build import ConditionNotHolding, TargetNotFound
from ..loop.session import ExplanationSession, QueryError, parse_event_text
from ..loop.wire import rendered_to_dict, step_result_to_dict


class ScriptDriver(Protocol):
    def inject(self, event_text: str) -> dict[str, Any]: ...

    def step(self) -> dict[str, Any]: ...

    def quiesce(self) -> list[dict[str, Any]]: ...

    def query(self, kind: str, payload: dict[str, Any], recipient: str) -> dict[str, Any]: ...

    def reload(self, spec_text: str | None, trees: dict[str, str]) -> dict[str, Any]: ...

    def pending(self) -> list[str]: ...


class SessionDriver:
    """Drives an in-process session, shaping results like the service wire."""

    def __init__(self, session: ExplanationSession):
        self.session = session

    def inject(self, event_text: str) -> dict[str, Any]:
        return step_result_to_dict(self.session.inject(parse_event_text(event_text)))

    def step(self) -> dict[str, Any]:
        return step_result_to_dict(self.session.step())

    def quiesce(self) -> list[dict[str, Any]]:
        results = []
        while True:
            result = self.step()
            if result["kind"] != "executed":
                if result["kind"] == "violation":
                    results.append(result)
                return results
            results.append(result)

    def query(self, kind: str, payload: dict[str, Any], recipient: str) -> dict[str, Any]:
        spec = {"audience": recipient, "id": recipient}
        if kind == "why":
            rendered = self.session.why(payload["target"], spec)
        elif kind == "whycond":
            rendered = self.session.whycond(payload["condition"], spec)
        elif kind == "when":
            rendered = self.session.when(payload["pattern"], payload.get("horizon", 4), spec)
        else:
            raise QueryError(f"unsupported query kind '{kind}'")
        return rendered_to_dict(rendered)

    def reload(self, spec_text: str | None, trees: dict[str, str]) -> dict[str, Any]:
        report = self.session.reload_models(spec_text=spec_text, tree_texts=trees)
        return {
            "accepted": report.accepted,
            "errors": report.errors,
            "resolved": report.resolved,
        }

    def pending(self) -> list[str]:
        return [
            f"{scenario}#{iid}: {text}"
            for iid, scenario, text in self.session.engine.pending_requested()
        ]


def run_script(
    session_or_driver: ExplanationSession | ScriptDriver,
    commands: list[str],
    *,
    recipient: str = "end_user",
    scene_name: str | None = None,
) -> tuple[str, int]:
    """Execute script commands; returns (transcript text, exit code)."""
    if isinstance(session_or_driver, ExplanationSession):
        driver: ScriptDriver = SessionDriver(session_or_driver)
        scene = scene_name or session_or_driver.scene_name
    else:
        driver = session_or_driver
        scene = scene_name or ""

    lines = [
        "# mabex transcript",
        f"# scene: {scene}",
        f"# recipient: {recipient}",
    ]
    exit_code = 0

    for raw in commands:
        command = raw.strip()
        if not command or command.startswith("#"):
            continue
        lines.append(f"> {command}")
        body, stop, _ = execute_command(driver, command, recipient)
        lines.extend(body)
        if stop == "error":
            exit_code = 2
            continue
        if stop:
            exit_code = 1
            break

    pending = driver.pending()
    if pending:
        lines.append("pending requested events:")
        lines.extend(f"  {item}" for item in pending)
    return "\n".join(lines) + "\n", exit_code


def execute_command(
    driver: ScriptDriver, command: str, recipient: str, show_follow_ups: bool = False
) -> tuple[list[str], bool | str, list[dict[str, Any]]]:
    """Run one command.

    Returns (output lines, stop flag, follow-up handles). The stop flag is
    True after a violation, "error" after a rejected command, False otherwise.
    """
    lines: list[str] = []
    try:
        stop, follow_ups = _execute(driver, command, recipient, lines, show_follow_ups)
    except (QueryError, TargetNotFound, ConditionNotHolding, EngineError, ValueError) as exc:
        return [f"error: {exc}"], "error", []
    except RuntimeError as exc:  # the HTTP driver surfaces service errors this way
        return [f"error: {exc}"], "error", []
    return lines, stop, follow_ups


def _execute(
    driver: ScriptDriver,
    command: str,
    recipient: str,
    lines: list[str],
    show_follow_ups: bool,
) -> tuple[bool, list[dict[str, Any]]]:
    word, _, rest = command.partition(" ")
    rest = rest.strip()

    if word == "inject":
        result = driver.inject(rest)
        _format_result(result, lines)
        return result["kind"] == "violation", []
    if word == "step":
        result = driver.step()
        _format_result(result, lines)
        return result["kind"] == "violation", []
    if word == "quiesce":
        results = driver.quiesce()
        if not results:
            lines.append("quiescent")
        for result in results:
            _format_result(result, lines)
        return bool(results) and results[-1]["kind"] == "violation", []
    if word == "why":
        response = driver.query("why", {"target": rest or "last"}, recipient)
        _format_explanation(response, lines, show_follow_ups)
        return False, response.get("follow_ups", [])
    if word == "whycond":
        response = driver.query("whycond", {"condition": rest}, recipient)
        _format_explanation(response, lines, show_follow_ups)
        return False, response.get("follow_ups", [])
    if word == "when":
        parts = rest.rsplit(" ", 1)
        horizon = 4
        pattern = rest
        if len(parts) == 2 and parts[1].isdigit():
            pattern, horizon = parts[0], int(parts[1])
        response = driver.query("when", {"pattern": pattern, "horizon": horizon}, recipient)
        _format_explanation(response, lines, show_follow_ups)
        return False, response.get("follow_ups", [])
    if word == "reload":
        spec_text = None
        trees: dict[str, str] = {}
        for filename in rest.split():
            text = Path(filename).read_text(encoding="utf-8")
            if filename.endswith(".sml"):
                spec_text = text
            else:
                from ..causality import load_tree

                trees[load_tree(text).root.node_id] = text
        report = driver.reload(spec_text, trees)
        status = "accepted" if report["accepted"] else "rejected"
        lines.append(f"reload {status}; resolved {len(report['resolved'])} ledger entries")
        for error in report["errors"]:
            lines.append(f"  {error}")
        return False, []
    raise ValueError(f"unknown command '{word}'")


def _format_result(result: dict[str, Any], lines: list[str]) -> None:
    kind = result["kind"]
    if kind == "quiescent":
        lines.append("quiescent")
        return
    event = result["event"]
    if event is not None:
        lines.append(f"executed {event['text']}")
    for transition in result["transitions"]:
        lines.append(f"  {transition['kind']} {transition['scenario']}#{transition['iid']}")
    if kind == "violation":
        violation = result["violation"]
        lines.append(
            f"violation: {violation['reason']} in instance #{violation['instance_id']}"
        )


def _format_explanation(
    response: dict[str, Any], lines: list[str], show_follow_ups: bool
) -> None:
    if response.get("text") is not None:
        lines.extend(response["text"].split("\n"))
    else:
        import json

        lines.append(json.dumps(response["structured"], sort_keys=True))
    if show_follow_ups:
        for i, handle in enumerate(response.get("follow_ups", []), start=1):
            lines.append(f"  [{i}] {handle['label']}")
