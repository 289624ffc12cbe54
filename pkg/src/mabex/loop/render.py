"""Explain phase: shape an intermediate explanation for a recipient.

End users get a single merged sentence per subject clause; engineers get the
same text plus per-cause provenance lines; machine recipients get the raw
intermediate structure. Rendering is a pure function of (ir, recipient).
"""

from __future__ import annotations

from .records import Cause, ExplanationIR, RecipientModel


def render_explanation(ir: ExplanationIR, recipient: RecipientModel) -> str | dict:
    if recipient.format == "structured" or recipient.audience == "machine":
        return ir.to_dict()
    causes = _visible_causes(ir, recipient)
    text = _render_text(ir, causes)
    if recipient.audience == "engineer":
        lines = [text]
        for cause in causes:
            support = ", ".join(f"#{i}" for i in cause.support)
            where = f"history {support}" if support else "no history support"
            lines.append(f"  - {cause.reason_clause} [{cause.provenance}; {where}]")
        if ir.kind == "future" and ir.witness_events:
            lines.append("  witness: " + "; ".join(e.text() for e in ir.witness_events))
        return "\n".join(lines)
    return text


def _visible_causes(ir: ExplanationIR, recipient: RecipientModel) -> list[Cause]:
    return [c for c in ir.causes if c.depth <= recipient.verbosity_depth]


def _render_text(ir: ExplanationIR, causes: list[Cause]) -> str:
    if ir.kind == "condition":
        return _render_condition(ir, causes)
    if ir.kind == "future":
        return _render_future(ir)
    return _render_event(ir, causes)


def _render_event(ir: ExplanationIR, causes: list[Cause]) -> str:
    # group causes by subject clause, keeping first-seen order
    groups: dict[str | None, list[str]] = {}
    for cause in causes:
        groups.setdefault(cause.subject_clause, []).append(cause.reason_clause)

    sentences: list[str] = []
    for subject, reasons in groups.items():
        if subject is None:
            sentences.extend(_capitalize(r) for r in reasons)
        else:
            sentences.append(f"{_capitalize(subject)} because {merge_clauses(reasons)}")
    if len(sentences) == 1:
        return sentences[0]
    return " ".join(s if s.endswith(".") else s + "." for s in sentences)


def _render_condition(ir: ExplanationIR, causes: list[Cause]) -> str:
    merged = merge_clauses([c.reason_clause for c in causes]) if causes else ""
    if ir.initially_true:
        return "This has held since the initial state."
    if ir.flip_event is not None:
        return f"This became true after {ir.flip_event.call_text()}: {merged}"
    return _capitalize(merged)


def _render_future(ir: ExplanationIR) -> str:
    if ir.steps is None:
        return f"Not reachable within {ir.horizon} environment steps."
    if ir.steps == 0:
        return "Possible now."
    noun = "step" if ir.steps == 1 else "steps"
    how = ", ".join(ir.witness_labels)
    return f"Possible after {ir.steps} environment {noun} (for example: {how})."


def merge_clauses(clauses: list[str]) -> str:
    """Join reason clauses with " and ".

    A single clause is kept verbatim (its own punctuation included); when
    several merge, each clause drops its terminal period so the sentence
    carries at most one.
    """
    if not clauses:
        return ""
    if len(clauses) == 1:
        return clauses[0]
    return " and ".join(c.rstrip().removesuffix(".") for c in clauses)


def _capitalize(text: str) -> str:
    return text[:1].upper() + text[1:] if text else text
