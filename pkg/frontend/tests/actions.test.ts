import { describe, expect, it } from "vitest";

import { Editor, applyAction } from "../src/actions";
import {
  apply,
  cloneModel,
  constTerm,
  emptyModel,
  modelsEqual,
  tuple,
  varTerm,
  type ProtocolModel,
} from "../src/model";

function withRoles(): ProtocolModel {
  const model = emptyModel();
  model.bundles = ["hashing"];
  model.roles = [
    { name: "A", knows: [], fresh: ["x"], ltks: [] },
    { name: "B", knows: [], fresh: [], ltks: [] },
  ];
  return model;
}

describe("applyAction", () => {
  it("adds roles and rejects duplicates without touching the model", () => {
    const model = emptyModel();
    const added = applyAction(model, { type: "add-role", name: "A" });
    expect(added.ok).toBe(true);
    const again = applyAction((added as any).model, { type: "add-role", name: "A" });
    expect(again).toEqual({ ok: false, error: "role 'A' already exists" });
    const bad = applyAction(model, { type: "add-role", name: "9A" });
    expect(bad.ok).toBe(false);
  });

  it("refuses to remove a role the exchange uses", () => {
    const model = withRoles();
    model.messages.push({
      from: "A",
      to: "B",
      payload: varTerm("x", "fresh"),
      delivery: "decompose",
    });
    const snapshot = cloneModel(model);
    const result = applyAction(model, { type: "remove-role", name: "A" });
    expect(result.ok).toBe(false);
    expect(modelsEqual(model, snapshot)).toBe(true);
  });

  it("checks arity through the active bundles when adding messages", () => {
    const model = withRoles();
    const wrong = applyAction(model, {
      type: "add-message",
      message: {
        from: "A",
        to: "B",
        payload: { kind: "apply", fun: "h", args: [] },
        delivery: "decompose",
      },
    });
    expect(wrong.ok).toBe(false);
    expect((wrong as any).error).toContain("h expects 1");
    const right = applyAction(model, {
      type: "add-message",
      message: { from: "A", to: "B", payload: apply("h", varTerm("m")), delivery: "decompose" },
    });
    expect(right.ok).toBe(true);
  });

  it("rejects self-messages and unknown functions", () => {
    const model = withRoles();
    expect(
      applyAction(model, {
        type: "add-message",
        message: { from: "A", to: "A", payload: varTerm("m"), delivery: "decompose" },
      }).ok,
    ).toBe(false);
    expect(
      applyAction(model, {
        type: "add-message",
        message: { from: "A", to: "B", payload: apply("senc", varTerm("m"), varTerm("k")), delivery: "decompose" },
      }).ok,
    ).toBe(false);
  });

  it("reorders messages", () => {
    const model = withRoles();
    for (const name of ["one", "two", "three"]) {
      model.messages.push({
        from: "A",
        to: "B",
        payload: varTerm(name),
        delivery: "decompose",
      });
    }
    const result = applyAction(model, { type: "reorder-message", from: 2, to: 0 });
    expect(result.ok).toBe(true);
    const names = (result as any).model.messages.map((m: any) => m.payload.name);
    expect(names).toEqual(["three", "one", "two"]);
  });

  it("edits terms in place and validates them", () => {
    const model = withRoles();
    model.messages.push({
      from: "A",
      to: "B",
      payload: varTerm("m"),
      delivery: "decompose",
    });
    const ok = applyAction(model, {
      type: "edit-term",
      target: { at: "message", index: 0 },
      term: tuple(varTerm("m"), constTerm("g")),
    });
    expect(ok.ok).toBe(true);
    const bad = applyAction(model, {
      type: "edit-term",
      target: { at: "message", index: 0 },
      term: { kind: "tuple", items: [varTerm("m")] },
    });
    expect(bad.ok).toBe(false);
  });

  it("guards fresh-name uniqueness across roles", () => {
    const model = withRoles();
    const taken = applyAction(model, { type: "add-fresh", role: "B", name: "x" });
    expect(taken.ok).toBe(false);
    const fine = applyAction(model, { type: "add-fresh", role: "B", name: "y" });
    expect(fine.ok).toBe(true);
  });

  it("keeps the bundle list sorted and toggles idempotently", () => {
    const model = emptyModel();
    const on = applyAction(model, {
      type: "set-bundle",
      bundle: "symmetric-encryption",
      enabled: true,
    });
    const both = applyAction((on as any).model, {
      type: "set-bundle",
      bundle: "diffie-hellman",
      enabled: true,
    });
    expect((both as any).model.bundles).toEqual(["diffie-hellman", "symmetric-encryption"]);
  });

  it("validates goals against declared roles", () => {
    const model = withRoles();
    expect(
      applyAction(model, {
        type: "add-goal",
        goal: { kind: "secrecy", role: "C", term: varTerm("x", "fresh") },
      }).ok,
    ).toBe(false);
    expect(
      applyAction(model, {
        type: "add-goal",
        goal: { kind: "agreement", claimer: "A", peer: "A", terms: [varTerm("x", "fresh")] },
      }).ok,
    ).toBe(false);
  });
});

describe("Editor history", () => {
  it("undoes and redoes edits", () => {
    const editor = new Editor(emptyModel());
    editor.apply({ type: "add-role", name: "A" });
    editor.apply({ type: "add-role", name: "B" });
    expect(editor.model.roles).toHaveLength(2);
    expect(editor.undo()).toBe(true);
    expect(editor.model.roles.map((r) => r.name)).toEqual(["A"]);
    expect(editor.redo()).toBe(true);
    expect(editor.model.roles).toHaveLength(2);
  });

  it("a rejected action records nothing", () => {
    const editor = new Editor(emptyModel());
    editor.apply({ type: "add-role", name: "A" });
    const before = cloneModel(editor.model);
    const result = editor.apply({ type: "add-role", name: "A" });
    expect(result.ok).toBe(false);
    expect(modelsEqual(editor.model, before)).toBe(true);
    expect(editor.undo()).toBe(true);
    expect(editor.model.roles).toHaveLength(0);
    expect(editor.undo()).toBe(false);
  });

  it("holds at least 50 undo steps", () => {
    const editor = new Editor(emptyModel());
    editor.apply({ type: "add-role", name: "R" });
    for (let i = 0; i < 55; i += 1) {
      editor.apply({ type: "add-fresh", role: "R", name: `n${i}` });
    }
    let undone = 0;
    while (undone < 55 && editor.undo()) {
      undone += 1;
    }
    expect(undone).toBeGreaterThanOrEqual(50);
  });

  it("redo stack clears on a new edit", () => {
    const editor = new Editor(emptyModel());
    editor.apply({ type: "add-role", name: "A" });
    editor.apply({ type: "add-role", name: "B" });
    editor.undo();
    editor.apply({ type: "add-role", name: "C" });
    expect(editor.redo()).toBe(false);
    expect(editor.model.roles.map((r) => r.name)).toEqual(["A", "C"]);
  });
});
