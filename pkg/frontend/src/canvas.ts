/**
 * Sequence-chart rendering: one lifeline per role, one numbered arrow per
 * message, diagnostics land as highlights on the arrow they name. Pure
 * DOM construction from (model, layout, highlights); dragging a role
 * header horizontally updates the layout sidecar, never the document.
 */
import type { ProtocolModel } from "./model";
import { termText } from "./model";

export type Layout = Record<string, { x: number; y: number }>;

export const CHART = {
  marginLeft: 90,
  columnGap: 150,
  headerY: 28,
  firstRowY: 86,
  rowHeight: 34,
  bottomPad: 40,
};

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

export function roleX(model: ProtocolModel, layout: Layout, role: string): number {
  const fromLayout = layout[`role:${role}`];
  if (fromLayout && Number.isFinite(fromLayout.x)) {
    return fromLayout.x;
  }
  const index = model.roles.findIndex((r) => r.name === role);
  return CHART.marginLeft + index * CHART.columnGap;
}

export interface RenderOptions {
  highlights?: Set<number>;
  onSelectMessage?: (index: number) => void;
  onSelectRole?: (name: string) => void;
}

export function renderChart(
  model: ProtocolModel,
  layout: Layout,
  options: RenderOptions = {},
): SVGSVGElement {
  const highlights = options.highlights ?? new Set<number>();
  const height = CHART.firstRowY + model.messages.length * CHART.rowHeight + CHART.bottomPad;
  const width =
    Math.max(
      ...model.roles.map((r) => roleX(model, layout, r.name)),
      CHART.marginLeft,
    ) + CHART.columnGap;
  const svg = svgEl("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "sequence-chart",
  });

  const defs = svgEl("defs");
  const marker = svgEl("marker", {
    id: "arrowhead",
    markerWidth: 10,
    markerHeight: 8,
    refX: 9,
    refY: 4,
    orient: "auto",
  });
  marker.appendChild(svgEl("path", { d: "M0,0 L10,4 L0,8 z", class: "arrow-head" }));
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const role of model.roles) {
    const x = roleX(model, layout, role.name);
    const group = svgEl("g", { class: "lifeline", "data-role": role.name });
    group.appendChild(
      svgEl("line", {
        x1: x,
        y1: CHART.headerY + 14,
        x2: x,
        y2: height - CHART.bottomPad / 2,
        class: "lifeline-line",
      }),
    );
    const box = svgEl("rect", {
      x: x - 44,
      y: CHART.headerY - 16,
      width: 88,
      height: 30,
      rx: 5,
      class: "role-box",
    });
    group.appendChild(box);
    const label = svgEl("text", {
      x,
      y: CHART.headerY + 4,
      "text-anchor": "middle",
      class: "role-label",
    });
    label.textContent = role.name;
    group.appendChild(label);
    if (options.onSelectRole) {
      group.addEventListener("click", () => options.onSelectRole?.(role.name));
    }
    svg.appendChild(group);
  }

  model.messages.forEach((message, i) => {
    const index = i + 1;
    const y = CHART.firstRowY + i * CHART.rowHeight;
    const x1 = roleX(model, layout, message.from);
    const x2 = roleX(model, layout, message.to);
    const classes = ["message-arrow"];
    if (highlights.has(index)) classes.push("highlight");
    if (message.delivery === "atomic") classes.push("atomic");
    const group = svgEl("g", { class: classes.join(" "), "data-step": index });
    group.appendChild(
      svgEl("line", {
        x1,
        y1: y,
        x2,
        y2: y,
        class: "arrow-line",
        "marker-end": "url(#arrowhead)",
      }),
    );
    const label = svgEl("text", {
      x: (x1 + x2) / 2,
      y: y - 6,
      "text-anchor": "middle",
      class: "arrow-label",
    });
    label.textContent = `${index}. ${termText(message.payload)}`;
    group.appendChild(label);
    if (options.onSelectMessage) {
      group.addEventListener("click", () => options.onSelectMessage?.(i));
    }
    svg.appendChild(group);
  });

  return svg;
}
