import { describe, expect, it } from "vitest";

import { LiveValidator, hasErrors, highlightedSteps } from "../src/validate";
import type { ValidateResult } from "../src/api";
import type { Diagnostic } from "../src/model";

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (reason?: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("LiveValidator", () => {
  it("discards stale responses: only the newest result lands", async () => {
    const pending: Array<ReturnType<typeof deferred<ValidateResult>>> = [];
    const states: boolean[] = [];
    const validator = new LiveValidator(
      () => {
        const d = deferred<ValidateResult>();
        pending.push(d);
        return d.promise;
      },
      (state) => states.push(state.diagnostics.length > 0),
      0,
    );
    const first = validator.fire("<old/>");
    const second = validator.fire("<new/>");
    // the newer request answers first: clean result
    pending[1].resolve({ ok: true, diagnostics: [] });
    await second;
    // the stale request answers later with an error: must be ignored
    pending[0].resolve({
      ok: false,
      diagnostics: [{ severity: "error", code: "PSV022", message: "stale" }],
    });
    await first;
    expect(validator.state.diagnostics).toEqual([]);
    expect(states.at(-1)).toBe(false);
  });

  it("flags the service as offline on transport failure and recovers", async () => {
    let fail = true;
    const validator = new LiveValidator(
      () =>
        fail
          ? Promise.reject(new Error("down"))
          : Promise.resolve({ ok: true, diagnostics: [] }),
      () => undefined,
      0,
    );
    await validator.fire("<x/>");
    expect(validator.state.offline).toBe(true);
    fail = false;
    await validator.fire("<x/>");
    expect(validator.state.offline).toBe(false);
  });

  it("debounces scheduled runs", async () => {
    let calls = 0;
    const validator = new LiveValidator(
      () => {
        calls += 1;
        return Promise.resolve({ ok: true, diagnostics: [] });
      },
      () => undefined,
      5,
    );
    validator.schedule("<a/>");
    validator.schedule("<b/>");
    validator.schedule("<c/>");
    await new Promise((resolve) => setTimeout(resolve, 30));
    expect(calls).toBe(1);
  });
});

describe("diagnostic helpers", () => {
  const diags: Diagnostic[] = [
    { severity: "warning", code: "PSVW01", message: "w" },
    { severity: "error", code: "EXE001", message: "m", stepIndex: 2 },
    { severity: "error", code: "PSV024", message: "m", stepIndex: 2 },
    { severity: "error", code: "PSV020", message: "no step" },
  ];

  it("collects highlighted step indices from errors only", () => {
    expect([...highlightedSteps(diags)]).toEqual([2]);
    expect(highlightedSteps([{ severity: "warning", code: "PSVW01", message: "w", stepIndex: 1 }]).size).toBe(0);
  });

  it("hasErrors ignores warnings", () => {
    expect(hasErrors(diags)).toBe(true);
    expect(hasErrors([{ severity: "warning", code: "PSVW01", message: "w" }])).toBe(false);
  });
});
