"""Narrow-passage case study: world, scenes, scripted runs."""

from .scenes import UnknownScene, load_scene, read_data_text, scene_names, scene_tree_texts
from .script import SessionDriver, run_script
from .world import InvariantViolation, build_world, check_invariants, reactor

__all__ = [
    "InvariantViolation",
    "SessionDriver",
    "UnknownScene",
    "build_world",
    "check_invariants",
    "load_scene",
    "reactor",
    "read_data_text",
    "run_script",
    "scene_names",
    "scene_tree_texts",
]
