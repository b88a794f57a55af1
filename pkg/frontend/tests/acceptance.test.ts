/**
 * Designer-side acceptance: the UI round-trip criteria, exercised at the
 * model level with the committed fixtures (the byte-level authority for
 * canonical form; the live app additionally round-trips through the
 * service store, which re-canonicalizes identically).
 */
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { Editor, type EditorAction } from "../src/actions";
import { renderChart } from "../src/canvas";
import { apply, constTerm, emptyModel, varTerm } from "../src/model";
import { highlightedSteps } from "../src/validate";
import { parsePsv, serializePsv } from "../src/xml";

const dhke = readFileSync("tests/fixtures/dhke.psv.xml", "utf-8");

describe("UI acceptance", () => {
  it("loads the DHKE fixture and exports it byte-identically without edits", () => {
    const editor = new Editor(parsePsv(dhke));
    expect(serializePsv(editor.model)).toBe(dhke);
    expect(editor.dirty).toBe(false);
  });

  it("draws DHKE from a blank canvas in at most 12 scripted actions", () => {
    const editor = new Editor(emptyModel());
    const script: EditorAction[] = [
      { type: "rename-protocol", name: "dhke" },
      { type: "set-bundle", bundle: "diffie-hellman", enabled: true },
      { type: "add-role", name: "A" },
      { type: "add-role", name: "B" },
      { type: "add-fresh", role: "A", name: "x" },
      { type: "add-fresh", role: "B", name: "y" },
      {
        type: "add-message",
        message: {
          from: "A",
          to: "B",
          payload: apply("exp", constTerm("g"), varTerm("x", "fresh")),
          delivery: "decompose",
        },
      },
      {
        type: "add-message",
        message: {
          from: "B",
          to: "A",
          payload: apply("exp", constTerm("g"), varTerm("y", "fresh")),
          delivery: "decompose",
        },
      },
    ];
    expect(script.length).toBeLessThanOrEqual(12);
    for (const action of script) {
      const result = editor.apply(action);
      expect(result.ok).toBe(true);
    }
    // layout lives in the sidecar, not in the document: export matches the
    // fixture exactly
    expect(serializePsv(editor.model)).toBe(dhke);
  });

  it("highlights exactly the arrow a validation error names", () => {
    const model = parsePsv(dhke);
    const diagnostics = [
      {
        severity: "error" as const,
        code: "EXE001",
        message: "role A cannot derive ~y needed to send message 2",
        stepIndex: 2,
      },
    ];
    const svg = renderChart(model, {}, { highlights: highlightedSteps(diagnostics) });
    const highlighted = Array.from(svg.querySelectorAll("g.message-arrow.highlight"));
    expect(highlighted).toHaveLength(1);
    expect(highlighted[0].getAttribute("data-step")).toBe("2");
    const plain = Array.from(svg.querySelectorAll("g.message-arrow:not(.highlight)"));
    expect(plain).toHaveLength(1);
  });

  it("keeps undo available through an entire drawing session", () => {
    const editor = new Editor(parsePsv(dhke));
    editor.apply({ type: "add-role", name: "C" });
    editor.apply({ type: "add-fresh", role: "C", name: "z" });
    expect(editor.undo()).toBe(true);
    expect(editor.undo()).toBe(true);
    expect(serializePsv(editor.model)).toBe(dhke);
  });
});
