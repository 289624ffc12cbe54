// Pure HTML-string renderers for the dashboard panels (testable without DOM).

import type { SessionViewModel } from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderLanes(model: SessionViewModel): string {
  const lanes = ["L1", "L2"]
    .map((lane) => {
      const cars = model
        .carsInLane(lane)
        .map(
          (car) =>
            `<span class="car${car.emergency ? " emergency" : ""}" title="${escapeHtml(
              car.position,
            )}">${escapeHtml(car.id)}${car.priority ? '<span class="badge">priority</span>' : ""}${
              car.emergency ? '<span class="badge">emergency</span>' : ""
            } <small>${escapeHtml(car.position)}</small></span>`,
        )
        .join("");
      return `<div class="lane" data-lane="${lane}"><h3>${lane}</h3>${cars}</div>`;
    })
    .join("");
  const registry = model.registry();
  const badges = registry.length
    ? registry.map((id) => `<span class="badge">${escapeHtml(id)}</span>`).join("")
    : '<span class="empty">none</span>';
  return `${lanes}<div class="registry"><h3>priority registry</h3>${badges}</div>`;
}

export function renderBanner(model: SessionViewModel): string {
  const event = model.decisionBanner();
  if (!event) return '<span class="empty">no system decision yet</span>';
  return `<button class="why-banner" data-step="${event.step_index}">${escapeHtml(
    event.text,
  )} <small>why?</small></button>`;
}

export function renderExplanation(model: SessionViewModel): string {
  if (!model.explanation) return '<span class="empty">ask a question</span>';
  const text = `<p class="explanation-text">${escapeHtml(model.explanation.text)}</p>`;
  const handles = model.explanation.followUps
    .map(
      (handle, i) =>
        `<button class="follow-up" data-index="${i}">${escapeHtml(handle.label)}</button>`,
    )
    .join("");
  return `${text}<div class="follow-ups">${handles}</div>`;
}

export function renderTimeline(model: SessionViewModel): string {
  const rows = model
    .timeline()
    .map(
      (item) =>
        `<li class="${item.origin}"><span class="idx">#${item.index}</span> ${escapeHtml(
          item.text,
        )}</li>`,
    )
    .join("");
  return `<ol class="timeline">${rows}</ol>`;
}

export function renderPalette(model: SessionViewModel): string {
  return model
    .eventPalette()
    .map(
      (macro, i) =>
        `<button class="macro" data-index="${i}" title="${escapeHtml(
          macro.events.join("; "),
        )}">${escapeHtml(macro.name)}</button>`,
    )
    .join("");
}

export function renderQuestions(model: SessionViewModel): string {
  return model
    .cannedQuestions()
    .map(
      (question, i) =>
        `<button class="question" data-index="${i}">${escapeHtml(question)}</button>`,
    )
    .join("");
}

export function renderConnection(model: SessionViewModel): string {
  if (model.connection === "reconnecting") {
    return '<span class="reconnect">connection lost, reconnecting…</span>';
  }
  if (model.connection === "connected") {
    return '<span class="connected">live</span>';
  }
  return '<span class="empty">not connected</span>';
}
