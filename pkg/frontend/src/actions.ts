/**
 * Editor actions over the protocol model. Every action either applies,
 * returning the next model, or is rejected with a message and the model
 * untouched. Applied actions go on an undo stack (inverse snapshots of
 * the slice they changed), redo replays them; history holds at least the
 * last 100 edits.
 */
import type {
  Bundle,
  Goal,
  LtkDecl,
  Message,
  ProtocolModel,
  Term,
} from "./model";
import { IDENT, cloneModel, knownSymbols, termIssue } from "./model";

export type TermTarget =
  | { at: "message"; index: number }
  | { at: "knows"; role: string; index: number }
  | { at: "secrecy"; goal: number }
  | { at: "agreement"; goal: number; position: number };

export type EditorAction =
  | { type: "rename-protocol"; name: string }
  | { type: "add-role"; name: string }
  | { type: "remove-role"; name: string }
  | { type: "add-fresh"; role: string; name: string }
  | { type: "add-ltk"; role: string; ltk: LtkDecl }
  | { type: "add-knows"; role: string; term: Term }
  | { type: "add-message"; message: Message }
  | { type: "remove-message"; index: number }
  | { type: "reorder-message"; from: number; to: number }
  | { type: "edit-term"; target: TermTarget; term: Term }
  | { type: "set-delivery"; index: number; delivery: "decompose" | "atomic" }
  | { type: "add-goal"; goal: Goal }
  | { type: "remove-goal"; index: number }
  | { type: "set-bundle"; bundle: Bundle; enabled: boolean };

export type ApplyResult =
  | { ok: true; model: ProtocolModel }
  | { ok: false; error: string };

function reject(error: string): ApplyResult {
  return { ok: false, error };
}

function roleOf(model: ProtocolModel, name: string) {
  return model.roles.find((r) => r.name === name);
}

export function applyAction(model: ProtocolModel, action: EditorAction): ApplyResult {
  const next = cloneModel(model);
  switch (action.type) {
    case "rename-protocol": {
      if (!IDENT.test(action.name)) return reject(`bad protocol name '${action.name}'`);
      next.name = action.name;
      return { ok: true, model: next };
    }
    case "add-role": {
      if (!IDENT.test(action.name)) return reject(`bad role name '${action.name}'`);
      if (roleOf(next, action.name)) return reject(`role '${action.name}' already exists`);
      next.roles.push({ name: action.name, knows: [], fresh: [], ltks: [] });
      return { ok: true, model: next };
    }
    case "remove-role": {
      if (!roleOf(next, action.name)) return reject(`no role named '${action.name}'`);
      const used = next.messages.some(
        (m) => m.from === action.name || m.to === action.name,
      );
      if (used) return reject(`role '${action.name}' is used by the exchange`);
      const inGoals = next.goals.some((g) =>
        g.kind === "secrecy" ? g.role === action.name : g.claimer === action.name || g.peer === action.name,
      );
      if (inGoals) return reject(`role '${action.name}' is used by a goal`);
      next.roles = next.roles.filter((r) => r.name !== action.name);
      return { ok: true, model: next };
    }
    case "add-fresh": {
      const role = roleOf(next, action.role);
      if (!role) return reject(`no role named '${action.role}'`);
      if (!IDENT.test(action.name)) return reject(`bad fresh name '${action.name}'`);
      const owned = next.roles.some(
        (r) => r.fresh.includes(action.name) || r.ltks.some((k) => k.name === action.name),
      );
      if (owned) return reject(`fresh value '${action.name}' is already declared`);
      role.fresh.push(action.name);
      return { ok: true, model: next };
    }
    case "add-ltk": {
      const role = roleOf(next, action.role);
      if (!role) return reject(`no role named '${action.role}'`);
      if (!IDENT.test(action.ltk.name)) return reject(`bad key name '${action.ltk.name}'`);
      const owned = next.roles.some(
        (r) => r.fresh.includes(action.ltk.name) || r.ltks.some((k) => k.name === action.ltk.name),
      );
      if (owned) return reject(`key '${action.ltk.name}' is already declared`);
      role.ltks.push({ ...action.ltk });
      return { ok: true, model: next };
    }
    case "add-knows": {
      const role = roleOf(next, action.role);
      if (!role) return reject(`no role named '${action.role}'`);
      const issue = termIssue(action.term, knownSymbols(next));
      if (issue) return reject(issue);
      role.knows.push(action.term);
      return { ok: true, model: next };
    }
    case "add-message": {
      const { message } = action;
      if (message.from === message.to) return reject("sender and receiver must differ");
      if (!roleOf(next, message.from)) return reject(`no role named '${message.from}'`);
      if (!roleOf(next, message.to)) return reject(`no role named '${message.to}'`);
      const issue = termIssue(message.payload, knownSymbols(next));
      if (issue) return reject(issue);
      next.messages.push({ ...message });
      return { ok: true, model: next };
    }
    case "remove-message": {
      if (action.index < 0 || action.index >= next.messages.length) {
        return reject("no such message");
      }
      next.messages.splice(action.index, 1);
      return { ok: true, model: next };
    }
    case "reorder-message": {
      const { from, to } = action;
      const last = next.messages.length - 1;
      if (from < 0 || from > last || to < 0 || to > last) return reject("no such message");
      const [moved] = next.messages.splice(from, 1);
      next.messages.splice(to, 0, moved);
      return { ok: true, model: next };
    }
    case "edit-term": {
      const issue = termIssue(action.term, knownSymbols(next));
      if (issue) return reject(issue);
      const placed = placeTerm(next, action.target, action.term);
      return placed ? { ok: true, model: next } : reject("no such term slot");
    }
    case "set-delivery": {
      const message = next.messages[action.index];
      if (!message) return reject("no such message");
      message.delivery = action.delivery;
      return { ok: true, model: next };
    }
    case "add-goal": {
      const goal = action.goal;
      const names = next.roles.map((r) => r.name);
      const goalRoles = goal.kind === "secrecy" ? [goal.role] : [goal.claimer, goal.peer];
      for (const name of goalRoles) {
        if (!names.includes(name)) return reject(`no role named '${name}'`);
      }
      if (goal.kind === "agreement") {
        if (goal.claimer === goal.peer) return reject("claimer and peer must differ");
        if (!goal.terms.length) return reject("agreement needs at least one term");
      }
      const table = knownSymbols(next);
      const terms = goal.kind === "secrecy" ? [goal.term] : goal.terms;
      for (const term of terms) {
        const issue = termIssue(term, table);
        if (issue) return reject(issue);
      }
      next.goals.push(goal);
      return { ok: true, model: next };
    }
    case "remove-goal": {
      if (action.index < 0 || action.index >= next.goals.length) return reject("no such goal");
      next.goals.splice(action.index, 1);
      return { ok: true, model: next };
    }
    case "set-bundle": {
      const active = next.bundles.includes(action.bundle);
      if (action.enabled && !active) {
        next.bundles.push(action.bundle);
        next.bundles.sort();
      } else if (!action.enabled && active) {
        next.bundles = next.bundles.filter((b) => b !== action.bundle);
      }
      return { ok: true, model: next };
    }
  }
}

function placeTerm(model: ProtocolModel, target: TermTarget, term: Term): boolean {
  switch (target.at) {
    case "message": {
      const message = model.messages[target.index];
      if (!message) return false;
      message.payload = term;
      return true;
    }
    case "knows": {
      const role = model.roles.find((r) => r.name === target.role);
      if (!role || target.index < 0 || target.index >= role.knows.length) return false;
      role.knows[target.index] = term;
      return true;
    }
    case "secrecy": {
      const goal = model.goals[target.goal];
      if (!goal || goal.kind !== "secrecy") return false;
      goal.term = term;
      return true;
    }
    case "agreement": {
      const goal = model.goals[target.goal];
      if (!goal || goal.kind !== "agreement") return false;
      if (target.position < 0 || target.position >= goal.terms.length) return false;
      goal.terms[target.position] = term;
      return true;
    }
  }
}

export interface HistoryEntry {
  action: EditorAction;
  before: ProtocolModel;
  after: ProtocolModel;
}

/** Undo/redo over whole-model snapshots: every action is trivially
 * invertible and the documents are tiny. */
export class History {
  private undoStack: HistoryEntry[] = [];
  private redoStack: HistoryEntry[] = [];

  constructor(private readonly capacity: number = 100) {}

  record(entry: HistoryEntry): void {
    this.undoStack.push(entry);
    if (this.undoStack.length > this.capacity) {
      this.undoStack.shift();
    }
    this.redoStack = [];
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): ProtocolModel | null {
    const entry = this.undoStack.pop();
    if (!entry) return null;
    this.redoStack.push(entry);
    return cloneModel(entry.before);
  }

  redo(): ProtocolModel | null {
    const entry = this.redoStack.pop();
    if (!entry) return null;
    this.undoStack.push(entry);
    return cloneModel(entry.after);
  }

  clear(): void {
    this.undoStack = [];
    this.redoStack = [];
  }
}

/** The editor session: current model, dirty flag, history, diagnostics. */
export class Editor {
  model: ProtocolModel;
  dirty = false;
  readonly history = new History();

  constructor(initial: ProtocolModel) {
    this.model = initial;
  }

  apply(action: EditorAction): ApplyResult {
    const result = applyAction(this.model, action);
    if (result.ok) {
      this.history.record({ action, before: this.model, after: result.model });
      this.model = result.model;
      this.dirty = true;
    }
    return result;
  }

  undo(): boolean {
    const previous = this.history.undo();
    if (previous === null) return false;
    this.model = previous;
    this.dirty = true;
    return true;
  }

  redo(): boolean {
    const next = this.history.redo();
    if (next === null) return false;
    this.model = next;
    this.dirty = true;
    return true;
  }

  load(model: ProtocolModel): void {
    this.model = model;
    this.dirty = false;
    this.history.clear();
  }
}
