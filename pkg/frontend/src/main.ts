// Browser bootstrap: wires the view model, the service client and the DOM.

import { ApiClient } from "./api.js";
import { SessionViewModel } from "./model.js";
import {
  renderBanner,
  renderConnection,
  renderExplanation,
  renderLanes,
  renderPalette,
  renderQuestions,
  renderTimeline,
} from "./render.js";
import type { Recipient } from "./types.js";

const model = new SessionViewModel();
let api = new ApiClient(defaultBaseUrl());
let source: EventSource | null = null;

function defaultBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8008";
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paint(): void {
  el("lanes").innerHTML = renderLanes(model);
  el("banner").innerHTML = renderBanner(model);
  el("explanation").innerHTML = renderExplanation(model);
  el("timeline").innerHTML = renderTimeline(model);
  el("palette").innerHTML = renderPalette(model);
  el("questions").innerHTML = renderQuestions(model);
  el("connection").innerHTML = renderConnection(model);
  el("error").textContent = model.error ?? "";
  el("session-label").textContent = model.sessionId
    ? `${model.scene} · ${model.sessionId.slice(0, 8)}`
    : "no session";
}

async function refresh(): Promise<void> {
  if (!model.sessionId) return;
  // stateless beyond the stream: everything reconstructs from these two calls
  model.applyState(await api.state(model.sessionId));
  model.applyHistory((await api.history(model.sessionId)).entries);
  paint();
}

function subscribe(): void {
  if (!model.sessionId) return;
  source?.close();
  source = new EventSource(api.subscribeUrl(model.sessionId));
  source.onopen = () => {
    model.setConnection("connected");
    paint();
  };
  source.onerror = () => {
    model.setConnection("reconnecting");
    paint(); // EventSource retries on its own; state refetches on reopen
  };
  source.addEventListener("history", () => {
    void refresh();
  });
  source.addEventListener("need", (event) => {
    const payload = JSON.parse((event as MessageEvent).data) as {
      label: string;
      text: string | null;
      explained: boolean;
    };
    if (payload.explained && payload.text) {
      model.applyQueryResponse({
        schema_version: 1,
        kind: "why",
        text: payload.text,
        structured: null,
        follow_ups: [],
        ir: {},
      });
    }
    void refresh();
  });
  source.addEventListener("reload", () => {
    void refresh();
  });
}

async function connect(scene: string): Promise<void> {
  const created = await api.createSession(scene);
  model.attach(created.session_id, created.scene);
  subscribe();
  await refresh();
}

async function attachExisting(sessionId: string): Promise<void> {
  const state = await api.state(sessionId);
  model.attach(sessionId, state.scene);
  subscribe();
  await refresh();
}

function recipient(): Recipient {
  return model.recipient;
}

async function guarded(action: () => Promise<void>): Promise<void> {
  try {
    await action();
  } catch (error) {
    model.setError(error instanceof Error ? error.message : String(error));
    paint();
  }
}

function wire(): void {
  el("connect").addEventListener("click", () =>
    guarded(async () => {
      api = new ApiClient((el("base-url") as HTMLInputElement).value || defaultBaseUrl());
      const existing = (el("session-id") as HTMLInputElement).value.trim();
      if (existing) {
        await attachExisting(existing);
      } else {
        await connect((el("scene") as HTMLSelectElement).value);
      }
    }),
  );

  el("step").addEventListener("click", () =>
    guarded(async () => {
      if (!model.sessionId) return;
      model.applyStepResponse(await api.step(model.sessionId));
      await refresh();
    }),
  );

  el("inject").addEventListener("click", () =>
    guarded(async () => {
      if (!model.sessionId) return;
      const text = (el("event-text") as HTMLInputElement).value.trim();
      if (!text) return;
      model.applyStepResponse(await api.postEvent(model.sessionId, text));
      await refresh();
    }),
  );

  el("palette").addEventListener("click", (event) =>
    guarded(async () => {
      const target = event.target as HTMLElement;
      if (!target.classList.contains("macro") || !model.sessionId) return;
      const macro = model.eventPalette()[Number(target.dataset.index)];
      for (const text of macro.events) {
        model.applyStepResponse(await api.postEvent(model.sessionId, text));
      }
      model.applyStepResponse(await api.step(model.sessionId));
      await refresh();
    }),
  );

  el("banner").addEventListener("click", (event) =>
    guarded(async () => {
      const target = (event.target as HTMLElement).closest(".why-banner");
      if (!target || !model.sessionId) return;
      const step = Number((target as HTMLElement).dataset.step);
      model.applyQueryResponse(await api.askWhy(model.sessionId, step, recipient()));
      paint();
    }),
  );

  el("explanation").addEventListener("click", (event) =>
    guarded(async () => {
      const target = event.target as HTMLElement;
      if (!target.classList.contains("follow-up") || !model.sessionId) return;
      const handle = model.explanation?.followUps[Number(target.dataset.index)];
      if (!handle) return;
      if (handle.kind === "whycond") {
        model.applyQueryResponse(
          await api.askWhyCond(model.sessionId, handle.payload, recipient(), true),
        );
      } else if (handle.kind === "when") {
        model.applyQueryResponse(
          await api.askWhen(model.sessionId, handle.payload, handle.horizon ?? 4, recipient()),
        );
      }
      paint();
    }),
  );

  el("questions").addEventListener("click", (event) =>
    guarded(async () => {
      const target = event.target as HTMLElement;
      if (!target.classList.contains("question") || !model.sessionId) return;
      const question = model.cannedQuestions()[Number(target.dataset.index)];
      model.applyQueryResponse(
        await api.askQuestion(model.sessionId, question, recipient()),
      );
      paint();
    }),
  );

  el("ask-when").addEventListener("click", () =>
    guarded(async () => {
      if (!model.sessionId) return;
      const pattern = (el("when-pattern") as HTMLInputElement).value.trim();
      const horizon = Number((el("when-horizon") as HTMLInputElement).value || "4");
      if (!pattern) return;
      model.applyQueryResponse(
        await api.askWhen(model.sessionId, pattern, horizon, recipient()),
      );
      paint();
    }),
  );

  el("recipient").addEventListener("change", () => {
    model.setRecipient((el("recipient") as HTMLSelectElement).value as Recipient);
  });
}

async function boot(): Promise<void> {
  wire();
  try {
    const scenes = await api.scenes();
    const select = el<HTMLSelectElement>("scene");
    select.innerHTML = scenes.scenes
      .map((name) => `<option value="${name}">${name}</option>`)
      .join("");
  } catch {
    model.setError("service unreachable; set the base URL and connect");
  }
  paint();
}

void boot();
