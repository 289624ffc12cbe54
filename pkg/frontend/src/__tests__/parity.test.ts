// Criterion 11: what the dashboard displays after ask-why and after one
// follow-up click is byte-identical to the service responses. Runs against a
// real service process.

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../api.js";
import { SessionViewModel } from "../model.js";

const PORT = 8700 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/scenes`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("service did not come up in time");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "uvicorn", "mabex.service.app:app", "--port", String(PORT), "--log-level", "warning"],
    { cwd: "..", stdio: "ignore" },
  );
  await waitForService();
}, 40_000);

afterAll(() => {
  server?.kill();
});

describe("dashboard parity with the service", () => {
  it("ask_why and one follow_up display the service responses verbatim", async () => {
    const api = new ApiClient(BASE);
    const model = new SessionViewModel();

    const created = await api.createSession("fig2");
    model.attach(created.session_id, created.scene);
    const sid = created.session_id;

    // the operator steers the scene: c1 approaches, registers, system reacts
    model.applyStepResponse(await api.postEvent(sid, "sensor -> c1.approachingObstacle()"));
    model.applyStepResponse(await api.postEvent(sid, "c1 -> oc.register()"));
    model.applyStepResponse(await api.step(sid));
    model.applyState(await api.state(sid));

    const banner = model.decisionBanner();
    expect(banner?.message).toBe("enteringDisallowed");

    // ask_why on the decision banner, exactly as the click handler does
    const whyResponse = await api.askWhy(sid, banner!.step_index!, model.recipient);
    model.applyQueryResponse(whyResponse);
    expect(model.displayedExplanationText()).toBe(whyResponse.text);
    expect(model.displayedExplanationText()).toBe(
      "Entering is disallowed because other cars are passing the obstacle in " +
        "the opposite direction and a priority vehicle is registered for " +
        "passing the obstacle",
    );

    // one follow_up click on the priority handle
    const handle = model.explanation!.followUps.find(
      (h) => h.label === "Why is a priority vehicle registered?",
    );
    expect(handle).toBeDefined();
    const followResponse = await api.askWhyCond(sid, handle!.payload, model.recipient, true);
    model.applyQueryResponse(followResponse);
    expect(model.displayedExplanationText()).toBe(followResponse.text);
    expect(model.displayedExplanationText()).toContain(
      "car registered is a priority vehicle because it is an emergency vehicle",
    );
  }, 30_000);

  it("when-answer for an already executable target displays now", async () => {
    const api = new ApiClient(BASE);
    const model = new SessionViewModel();
    const created = await api.createSession("empty-road");
    const sid = created.session_id;
    await api.postEvent(sid, "sensor -> c1.approachingObstacle()");
    await api.postEvent(sid, "c1 -> oc.register()");
    const response = await api.askWhen(sid, "oc -> c1.enteringAllowed()", 4, "end_user");
    model.applyQueryResponse(response);
    expect(model.displayedExplanationText()).toBe("Possible now.");
    expect(response.ir["steps"]).toBe(0);
  });

  it("recipient toggle changes rendering detail, never the causes", async () => {
    const api = new ApiClient(BASE);
    const created = await api.createSession("fig2");
    const sid = created.session_id;
    await api.postEvent(sid, "sensor -> c1.approachingObstacle()");
    await api.postEvent(sid, "c1 -> oc.register()");
    await api.step(sid);
    const endUser = await api.askWhy(sid, "last", "end_user");
    const engineer = await api.askWhy(sid, "last", "engineer");
    expect(engineer.text).toContain(endUser.text!);
    const causes = (ir: Record<string, unknown>) =>
      (ir["causes"] as { reason: string }[]).map((c) => c.reason);
    expect(causes(engineer.ir)).toEqual(causes(endUser.ir));
  });
});
