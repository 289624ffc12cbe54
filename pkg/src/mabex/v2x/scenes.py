"""Scene loading: world + specification + config into a ready session.

Built-in scenes live as JSON documents in the package data directory; a path
to a scene file of the same shape is accepted anywhere a scene name is.
The scene's preroll events run through the session, so their effects are
ordinary history entries (the fig2 priority registration is queryable).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..engine.playout import Engine
from ..loop.build import TreeBinding
from ..loop.config import load_rules
from ..loop.records import EnvMacro
from ..loop.session import ExplanationSession, parse_event_text
from ..causality import load_tree
from ..sml.parser import parse_pattern, parse_specification
from . import world as v2x_world

BUILTIN_SCENES = ("fig2", "empty-road")


class UnknownScene(Exception):
    pass


def _data_dir():
    return resources.files("mabex.v2x") / "data"


def scene_names() -> list[str]:
    return list(BUILTIN_SCENES)


def read_data_text(filename: str) -> str:
    return (_data_dir() / filename).read_text(encoding="utf-8")


def _scene_document(name_or_path: str) -> tuple[dict, Path | None]:
    if name_or_path in BUILTIN_SCENES:
        filename = name_or_path.replace("-", "_") + ".json"
        return json.loads(read_data_text(filename)), None
    path = Path(name_or_path)
    if not path.exists():
        raise UnknownScene(f"unknown scene or missing file: {name_or_path!r}")
    try:
        return json.loads(path.read_text(encoding="utf-8")), path.parent
    except json.JSONDecodeError as exc:
        raise UnknownScene(f"scene file {name_or_path!r} is not valid JSON: {exc}") from exc


def _read_relative(filename: str, base: Path | None) -> str:
    if base is not None and (base / filename).exists():
        return (base / filename).read_text(encoding="utf-8")
    return read_data_text(filename)


def load_scene(
    name_or_path: str,
    *,
    spec_text: str | None = None,
    ledger_path: str | Path | None = None,
    bind_trees: bool = False,
) -> ExplanationSession:
    """Build the engine and session for a scene and run its preroll.

    `spec_text` overrides the scene's specification (used by reload tests);
    `bind_trees` additionally consults the scene's causality trees when
    explaining matching events (off by default: the scenario annotations
    already cover the shipped scenes).
    """
    document, base = _scene_document(name_or_path)

    spec_source = spec_text if spec_text is not None else _read_relative(document["spec"], base)
    spec = parse_specification(spec_source)

    world = v2x_world.build_world(document["objects"])
    engine = Engine(spec, world, reactor=v2x_world.reactor)

    config = load_rules(_read_relative(document["rules"], base))

    tree_bindings = []
    if bind_trees:
        for tree_file in document.get("trees", []):
            tree = load_tree(_read_relative(tree_file, base))
            tree_bindings.append(
                TreeBinding(
                    pattern=parse_pattern("* -> *.enteringDisallowed()"),
                    tree=tree,
                    variables=v2x_world.variable_snapshot,
                )
            )

    macros = [
        EnvMacro(
            name=entry["name"],
            events=tuple(parse_event_text(text) for text in entry["events"]),
        )
        for entry in document.get("alphabet", [])
    ]

    session = ExplanationSession(
        engine,
        scene_name=document.get("name", name_or_path),
        rules=config.rules,
        query_map=config.query_map,
        tree_bindings=tree_bindings,
        env_macros=macros,
        ledger_path=ledger_path,
    )

    for event_text in document.get("preroll", []):
        session.inject(parse_event_text(event_text))
        session.run_to_quiescence()
    return session


def scene_tree_texts(name_or_path: str) -> dict[str, str]:
    """Tree documents shipped with a scene, keyed by root node id."""
    document, base = _scene_document(name_or_path)
    out: dict[str, str] = {}
    for tree_file in document.get("trees", []):
        text = _read_relative(tree_file, base)
        out[load_tree(text).root.node_id] = text
    return out
