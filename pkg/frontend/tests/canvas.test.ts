import { describe, expect, it } from "vitest";

import { CHART, renderChart, roleX } from "../src/canvas";
import { emptyModel, varTerm } from "../src/model";

function bigModel(roles: number, messages: number) {
  const model = emptyModel();
  for (let i = 0; i < roles; i += 1) {
    model.roles.push({ name: `R${i + 1}`, knows: [], fresh: [], ltks: [] });
  }
  for (let i = 0; i < messages; i += 1) {
    model.messages.push({
      from: `R${(i % roles) + 1}`,
      to: `R${((i + 1) % roles) + 1}`,
      payload: varTerm(`m${i + 1}`),
      delivery: "decompose",
    });
  }
  return model;
}

describe("sequence chart", () => {
  it("renders 8 roles and 30 messages without degenerate geometry", () => {
    const model = bigModel(8, 30);
    const svg = renderChart(model, {});
    expect(svg.querySelectorAll("g.lifeline")).toHaveLength(8);
    const arrows = Array.from(svg.querySelectorAll("g.message-arrow line"));
    expect(arrows).toHaveLength(30);
    const ys = arrows.map((line) => Number(line.getAttribute("y1")));
    expect(new Set(ys).size).toBe(30); // one row per message, no overlap
    for (const line of arrows) {
      const x1 = Number(line.getAttribute("x1"));
      const x2 = Number(line.getAttribute("x2"));
      expect(Number.isFinite(x1) && Number.isFinite(x2)).toBe(true);
      expect(x1).not.toBe(x2);
    }
  });

  it("numbers arrows and labels them with the payload", () => {
    const model = bigModel(2, 2);
    const svg = renderChart(model, {});
    const labels = Array.from(svg.querySelectorAll(".arrow-label")).map(
      (n) => n.textContent,
    );
    expect(labels).toEqual(["1. m1", "2. m2"]);
  });

  it("applies highlights to exactly the named steps", () => {
    const model = bigModel(2, 3);
    const svg = renderChart(model, {}, { highlights: new Set([2]) });
    const highlighted = Array.from(svg.querySelectorAll("g.message-arrow.highlight"));
    expect(highlighted).toHaveLength(1);
    expect(highlighted[0].getAttribute("data-step")).toBe("2");
  });

  it("layout overrides role positions; defaults are evenly spaced", () => {
    const model = bigModel(3, 0);
    expect(roleX(model, {}, "R1")).toBe(CHART.marginLeft);
    expect(roleX(model, {}, "R2")).toBe(CHART.marginLeft + CHART.columnGap);
    expect(roleX(model, { "role:R2": { x: 500, y: 0 } }, "R2")).toBe(500);
  });
});
