// Session view model: a pure state container fed exclusively by service
// responses and pushes. It never simulates; every field is re-derivable by
// refetching state + history.

import type {
  FollowUpHandle,
  HistoryEntry,
  NeedNotification,
  QueryResponse,
  Recipient,
  StateResponse,
  StepResponse,
  WireEvent,
} from "./types.js";

export type ConnectionStatus = "idle" | "connected" | "reconnecting";

export interface CarView {
  id: string;
  emergency: boolean;
  direction: string;
  position: string;
  priority: boolean;
}

export interface ExplanationView {
  text: string; // shown verbatim; byte-identical to the service response
  followUps: FollowUpHandle[];
  kind: string;
}

export class SessionViewModel {
  sessionId: string | null = null;
  scene = "";
  connection: ConnectionStatus = "idle";
  recipient: Recipient = "end_user";
  state: StateResponse | null = null;
  history: HistoryEntry[] = [];
  explanation: ExplanationView | null = null;
  notifications: NeedNotification[] = [];
  error: string | null = null;

  attach(sessionId: string, scene: string): void {
    this.sessionId = sessionId;
    this.scene = scene;
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
  }

  setRecipient(recipient: Recipient): void {
    // rendering detail only; causes and state are untouched
    this.recipient = recipient;
  }

  applyState(state: StateResponse): void {
    this.state = state;
    this.scene = state.scene;
    this.error = null;
  }

  applyHistory(entries: HistoryEntry[]): void {
    this.history = entries;
  }

  applyStepResponse(response: StepResponse): void {
    for (const entry of response.new_entries) {
      if (!this.history.some((e) => e.step_index === entry.step_index)) {
        this.history.push(entry);
      }
    }
    this.notifications.push(...response.notifications);
  }

  applyQueryResponse(response: QueryResponse): void {
    this.explanation = {
      text: response.text ?? JSON.stringify(response.structured),
      followUps: response.follow_ups,
      kind: response.kind,
    };
    this.error = null;
  }

  setError(message: string): void {
    this.error = message;
  }

  // -- derived views -----------------------------------------------------

  cars(): CarView[] {
    if (!this.state) return [];
    const registry = this.registry();
    const out: CarView[] = [];
    for (const [id, object] of Object.entries(this.state.world)) {
      const direction = object.attributes["direction"];
      if (typeof direction !== "string") continue;
      out.push({
        id,
        emergency: object.class === "EmergencyVehicle",
        direction,
        position: String(object.attributes["position"] ?? "unknown"),
        priority: registry.includes(id),
      });
    }
    return out.sort((a, b) => a.id.localeCompare(b.id));
  }

  carsInLane(lane: string): CarView[] {
    return this.cars().filter((car) => car.direction === lane);
  }

  registry(): string[] {
    return this.controllerCollection("registeredPriorityVehicles");
  }

  passing(lane: "passingL1" | "passingL2"): string[] {
    return this.controllerCollection(lane);
  }

  private controllerCollection(name: string): string[] {
    if (!this.state) return [];
    for (const object of Object.values(this.state.world)) {
      if (object.class === "ObstacleController") {
        return object.collections[name] ?? [];
      }
    }
    return [];
  }

  decisionBanner(): WireEvent | null {
    return this.state?.last_system_event ?? null;
  }

  displayedExplanationText(): string {
    return this.explanation?.text ?? "";
  }

  eventPalette(): { name: string; events: string[] }[] {
    return this.state?.alphabet ?? [];
  }

  cannedQuestions(): string[] {
    return this.state?.questions ?? [];
  }

  timeline(): { index: number; text: string; origin: string }[] {
    return this.history.map((entry) => ({
      index: entry.step_index,
      text: entry.event.text,
      origin: entry.event.origin,
    }));
  }
}
