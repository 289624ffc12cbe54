// Wire types of the session service (schema_version 1).

export interface WireEvent {
  sender: string;
  receiver: string;
  message: string;
  args: unknown[];
  origin: string;
  step_index: number | null;
  text: string;
}

export interface Transition {
  iid: number;
  kind: string;
  scenario: string;
  steps: string[];
}

export interface HistoryEntry {
  step_index: number;
  event: WireEvent;
  transitions: Transition[];
  annotations: { scenario: string; step: string; text: string }[];
  snapshot_digest: string;
}

export interface StepResult {
  kind: "executed" | "quiescent" | "violation";
  event: WireEvent | null;
  transitions: Transition[];
  violation: { instance_id: number; reason: string } | null;
}

export interface NeedNotification {
  label: string;
  rule: string | null;
  explained: boolean;
  text: string | null;
  note: string | null;
}

export interface StepResponse {
  schema_version: number;
  results: StepResult[];
  new_entries: HistoryEntry[];
  notifications: NeedNotification[];
}

export interface FollowUpHandle {
  label: string;
  kind: string;
  payload: string;
  horizon: number | null;
}

export interface QueryResponse {
  schema_version: number;
  kind: string;
  text: string | null;
  structured: Record<string, unknown> | null;
  follow_ups: FollowUpHandle[];
  ir: Record<string, unknown>;
}

export interface WorldObjectView {
  class: string;
  realm: string;
  attributes: Record<string, unknown>;
  collections: Record<string, string[]>;
}

export interface StateResponse {
  schema_version: number;
  scene: string;
  step_count: number;
  world: Record<string, WorldObjectView>;
  last_system_event: WireEvent | null;
  instances: { iid: number; scenario: string; status: string; cut: number[] }[];
  alphabet: { name: string; events: string[] }[];
  questions: string[];
  pending_ledger: number;
  pending_requested: string[];
}

export type Recipient = "end_user" | "engineer";
