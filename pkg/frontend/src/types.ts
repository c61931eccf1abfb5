/** Document shapes mirrored from the scheduling service. */

export interface CtsPatient {
  id: string;
  durations: [number, number, number, number];
  preferred: "bed" | "chair";
  scalp_cooling: boolean;
  isolation: boolean;
  drug_ready_slot: number | null;
}

export interface CtsResource {
  id: string;
  type: "bed" | "chair";
  room: string;
  scalp_cooling: boolean;
}

export interface CtsInstance {
  format_version: number;
  kind: "cts";
  slots: number;
  slot_minutes: number;
  day_start: string;
  staff_capacity: Record<string, number>;
  patients: CtsPatient[];
  resources: CtsResource[];
  rooms: { id: string; resources: string[] }[];
}

export interface OrsRegistration {
  id: string;
  specialty: string;
  duration: number;
  priority: number;
  scu: { unit: string; stay_days: number } | null;
}

export interface OrsInstance {
  format_version: number;
  kind: "ors";
  horizon_days: number;
  registrations: OrsRegistration[];
  shifts: { id: string; room: string; day: number; specialty: string; length: number }[];
  units: { id: string; beds_per_day: number }[];
}

export type Instance = CtsInstance | OrsInstance;

export interface CtsSolution {
  kind: "cts-solution";
  status: string;
  objective: number[];
  patients: { id: string; phase_starts: number[]; resource: string }[];
}

export interface OrsSolution {
  kind: "ors-solution";
  status: string;
  objective: number[];
  assignments: { id: string; shift: string | null }[];
}

export interface UnsatOutcome {
  status: string;
  objective: null;
}

export type Outcome = CtsSolution | OrsSolution | UnsatOutcome;

export interface Charts {
  labels: string[];
  exact: number[];
  baseline: number[];
}

export interface SessionState {
  id: string;
  instance: Instance;
  outcome: Outcome | null;
  stale: boolean;
  background: string[];
  history: string[][];
  edits: Record<string, unknown>[];
  charts: Charts | null;
}

export interface MusEntry {
  label: string;
  description: string;
}

export interface MusDocument {
  kind: "mus";
  constraints: MusEntry[];
}

export interface JustificationNode {
  id: number;
  type: "assignment" | "fact";
  atom?: string;
  status?: string;
  label?: string;
  description?: string;
}

export interface JustificationDocument {
  kind: "justification";
  roots: number[];
  nodes: JustificationNode[];
  edges: { from: number; to: number[] }[];
}

export interface ContrastDocument {
  kind: "contrast";
  verdict: string;
  original_objective: number[];
  alternative_objective: number[] | null;
  mus: MusEntry[] | null;
}

export type EditOp = Record<string, unknown> & { op: string };
