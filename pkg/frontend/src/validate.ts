/**
 * Live validation: debounced runs against the service, with stale
 * responses discarded by sequence number so only the result for the
 * newest edit ever reaches the screen. A failed transport is reported as
 * an offline flag, never as diagnostics: editing continues.
 */
import type { Diagnostic } from "./model";
import type { ValidateResult } from "./api";

export interface ValidationState {
  diagnostics: Diagnostic[];
  offline: boolean;
  pending: boolean;
}

type Runner = (xml: string) => Promise<ValidateResult>;
type Listener = (state: ValidationState) => void;

export class LiveValidator {
  private sequence = 0;
  private applied = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  state: ValidationState = { diagnostics: [], offline: false, pending: false };

  constructor(
    private readonly run: Runner,
    private readonly onChange: Listener,
    private readonly debounceMs: number = 300,
  ) {}

  /** Schedule a validation of the given document text. */
  schedule(xml: string): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.state = { ...this.state, pending: true };
    this.onChange(this.state);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(xml);
    }, this.debounceMs);
  }

  /** Validate immediately (used by tests and by export). */
  async fire(xml: string): Promise<void> {
    const ticket = ++this.sequence;
    try {
      const result = await this.run(xml);
      this.settle(ticket, { diagnostics: result.diagnostics, offline: false, pending: false });
    } catch {
      this.settle(ticket, { ...this.state, offline: true, pending: false });
    }
  }

  private settle(ticket: number, state: ValidationState): void {
    if (ticket <= this.applied) {
      return; // a newer result already landed
    }
    this.applied = ticket;
    this.state = state;
    this.onChange(state);
  }
}

export function hasErrors(diagnostics: Diagnostic[]): boolean {
  return diagnostics.some((d) => d.severity === "error");
}

/** Step indices (1-based) whose arrows should light up. */
export function highlightedSteps(diagnostics: Diagnostic[]): Set<number> {
  const steps = new Set<number>();
  for (const diag of diagnostics) {
    if (diag.severity === "error" && diag.stepIndex !== undefined && diag.stepIndex !== null) {
      steps.add(diag.stepIndex);
    }
  }
  return steps;
}
