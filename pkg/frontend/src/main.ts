/**
 * Designer wiring: toolbar, side panels, sequence chart, diagnostics.
 * The document of record is the editor model; every change reruns the
 * debounced server validation and refreshes the chart.
 */
import { ApiClient, ApiError } from "./api";
import { Editor, type EditorAction } from "./actions";
import { CHART, renderChart, roleX, type Layout } from "./canvas";
import { bundleNames, el, select, termEditor, textInput } from "./forms";
import {
  emptyModel,
  termText,
  type Bundle,
  type Diagnostic,
  type Term,
} from "./model";
import { parsePsv, serializePsv } from "./xml";
import { LiveValidator, hasErrors, highlightedSteps } from "./validate";
import "./style.css";

const api = new ApiClient();
const editor = new Editor(emptyModel());
let layout: Layout = {};
let selectedMessage: number | null = null;

const root = document.getElementById("app") ?? document.body;
const toolbar = el("div", { class: "toolbar" });
const banner = el("div", { class: "banner hidden" });
const chartHost = el("div", { class: "chart-host" });
const sidebar = el("div", { class: "sidebar" });
const inspector = el("div", { class: "inspector" });
const diagnosticsPanel = el("div", { class: "diagnostics" });
root.append(
  toolbar,
  banner,
  el("div", { class: "columns" }, sidebar, chartHost, inspector),
  diagnosticsPanel,
);

const validator = new LiveValidator(
  (xml) => api.validate(xml),
  () => {
    refreshBanner();
    refreshDiagnostics();
    refreshChart();
  },
);

function act(action: EditorAction): boolean {
  const result = editor.apply(action);
  if (!result.ok) {
    flash(result.error);
    return false;
  }
  modelChanged();
  return true;
}

function modelChanged(): void {
  validator.schedule(serializePsv(editor.model));
  refreshAll();
}

function flash(message: string): void {
  banner.textContent = message;
  banner.className = "banner error";
  setTimeout(() => refreshBanner(), 2500);
}

function refreshBanner(): void {
  if (validator.state.offline) {
    banner.textContent = "service unreachable; editing offline";
    banner.className = "banner offline";
  } else {
    banner.textContent = "";
    banner.className = "banner hidden";
  }
}

function refreshChart(): void {
  chartHost.textContent = "";
  const svg = renderChart(editor.model, layout, {
    highlights: highlightedSteps(validator.state.diagnostics),
    onSelectMessage: (index) => {
      selectedMessage = index;
      refreshInspector();
    },
  });
  attachRoleDrag(svg);
  chartHost.appendChild(svg);
}

function attachRoleDrag(svg: SVGSVGElement): void {
  for (const group of Array.from(svg.querySelectorAll("g.lifeline"))) {
    const role = group.getAttribute("data-role");
    if (!role) continue;
    group.addEventListener("mousedown", (down) => {
      const start = (down as MouseEvent).clientX;
      const base = roleX(editor.model, layout, role);
      const move = (ev: Event) => {
        const dx = (ev as MouseEvent).clientX - start;
        layout[`role:${role}`] = { x: Math.max(50, base + dx), y: CHART.headerY };
        refreshChart();
      };
      const up = () => {
        document.removeEventListener("mousemove", move);
        document.removeEventListener("mouseup", up);
        void persistLayout();
      };
      document.addEventListener("mousemove", move);
      document.addEventListener("mouseup", up);
    });
  }
}

async function persistLayout(): Promise<void> {
  try {
    await api.saveLayout(editor.model.name, layout);
  } catch {
    // layout is a convenience sidecar; losing it is not an error
  }
}

function refreshDiagnostics(): void {
  diagnosticsPanel.textContent = "";
  const diags = validator.state.diagnostics;
  if (!diags.length) {
    diagnosticsPanel.appendChild(el("div", { class: "diag ok" }, "no findings"));
    return;
  }
  for (const diag of diags) {
    diagnosticsPanel.appendChild(renderDiagnostic(diag));
  }
}

function renderDiagnostic(diag: Diagnostic): HTMLElement {
  const where = diag.stepIndex ? ` (message ${diag.stepIndex})` : "";
  return el(
    "div",
    { class: `diag ${diag.severity}` },
    `${diag.severity} ${diag.code}${where}: ${diag.message}`,
  );
}

// -- sidebar: document structure ---------------------------------------------

function refreshSidebar(): void {
  sidebar.textContent = "";
  const model = editor.model;

  sidebar.appendChild(el("h3", {}, "protocol"));
  sidebar.appendChild(
    textInput(model.name, (name) => act({ type: "rename-protocol", name })),
  );

  sidebar.appendChild(el("h3", {}, "bundles"));
  for (const bundle of bundleNames()) {
    const row = el("label", { class: "bundle-row" });
    const box = el("input", { type: "checkbox" }) as HTMLInputElement;
    box.checked = model.bundles.includes(bundle as Bundle);
    box.addEventListener("change", () =>
      act({ type: "set-bundle", bundle: bundle as Bundle, enabled: box.checked }),
    );
    row.append(box, ` ${bundle}`);
    sidebar.appendChild(row);
  }

  sidebar.appendChild(el("h3", {}, "roles"));
  for (const role of model.roles) {
    const block = el("div", { class: "role-block" });
    block.appendChild(el("strong", {}, role.name));
    const detail = el("div", { class: "role-detail" });
    detail.appendChild(
      el("div", {}, `fresh: ${role.fresh.join(", ") || "(none)"}`),
    );
    detail.appendChild(
      el(
        "div",
        {},
        `keys: ${role.ltks.map((k) => `${k.name} (${k.kind})`).join(", ") || "(none)"}`,
      ),
    );
    detail.appendChild(
      el("div", {}, `knows: ${role.knows.map(termText).join(", ") || "(none)"}`),
    );
    const addFresh = el("button", { class: "mini", type: "button" }, "+ fresh");
    addFresh.addEventListener("click", () => {
      const name = window.prompt(`fresh value for ${role.name}`);
      if (name) act({ type: "add-fresh", role: role.name, name });
    });
    const addLtk = el("button", { class: "mini", type: "button" }, "+ key");
    addLtk.addEventListener("click", () => {
      const name = window.prompt(`key name for ${role.name}`);
      if (!name) return;
      const kind = window.confirm("asymmetric key? (cancel = symmetric)")
        ? "asymmetric"
        : "symmetric";
      act({ type: "add-ltk", role: role.name, ltk: { name, kind } });
    });
    const remove = el("button", { class: "mini", type: "button" }, "remove");
    remove.addEventListener("click", () => act({ type: "remove-role", name: role.name }));
    detail.append(addFresh, addLtk, remove);
    block.appendChild(detail);
    sidebar.appendChild(block);
  }
  const addRole = el("button", { type: "button" }, "+ role");
  addRole.addEventListener("click", () => {
    const name = window.prompt("role name");
    if (name) act({ type: "add-role", name });
  });
  sidebar.appendChild(addRole);

  sidebar.appendChild(el("h3", {}, "goals"));
  model.goals.forEach((goal, i) => {
    const line =
      goal.kind === "secrecy"
        ? `secrecy of ${termText(goal.term)} for ${goal.role}`
        : `agreement ${goal.claimer}/${goal.peer} on ${goal.terms.map(termText).join(", ")}`;
    const row = el("div", { class: "goal-row" }, line, " ");
    const remove = el("button", { class: "mini", type: "button" }, "x");
    remove.addEventListener("click", () => act({ type: "remove-goal", index: i }));
    row.appendChild(remove);
    sidebar.appendChild(row);
  });
  const addSecrecy = el("button", { type: "button" }, "+ secrecy goal");
  addSecrecy.addEventListener("click", () => {
    const model = editor.model;
    if (!model.roles.length) return flash("add a role first");
    draftGoal(model.roles[0].name);
  });
  sidebar.appendChild(addSecrecy);
}

function draftGoal(initialRole: string): void {
  inspector.textContent = "";
  inspector.appendChild(el("h3", {}, "new secrecy goal"));
  let role = initialRole;
  let draft: Term = { kind: "var", name: "x", sort: "msg" };
  inspector.appendChild(
    select(editor.model.roles.map((r) => r.name), role, (value) => {
      role = value;
    }),
  );
  const host = el("div");
  const rerender = () => {
    host.textContent = "";
    host.appendChild(
      termEditor(draft, editor.model, (next) => {
        draft = next;
        rerender();
      }),
    );
  };
  rerender();
  inspector.appendChild(host);
  const commit = el("button", { type: "button" }, "add goal");
  commit.addEventListener("click", () => {
    if (act({ type: "add-goal", goal: { kind: "secrecy", role, term: draft } })) {
      refreshInspector();
    }
  });
  inspector.appendChild(commit);
}

// -- inspector: message editing ------------------------------------------------

function refreshInspector(): void {
  inspector.textContent = "";
  const model = editor.model;
  inspector.appendChild(el("h3", {}, "messages"));

  if (selectedMessage !== null && model.messages[selectedMessage]) {
    const index = selectedMessage;
    const message = model.messages[index];
    inspector.appendChild(
      el("div", { class: "selected-message" }, `editing message ${index + 1}`),
    );
    inspector.appendChild(
      select(["decompose", "atomic"], message.delivery, (delivery) =>
        act({ type: "set-delivery", index, delivery: delivery as "decompose" | "atomic" }),
      ),
    );
    let draft = message.payload;
    const host = el("div");
    const rerender = () => {
      host.textContent = "";
      host.appendChild(
        termEditor(draft, model, (next) => {
          draft = next;
          rerender();
        }),
      );
    };
    rerender();
    inspector.appendChild(host);
    const commit = el("button", { type: "button" }, "apply payload");
    commit.addEventListener("click", () =>
      act({ type: "edit-term", target: { at: "message", index }, term: draft }),
    );
    const up = el("button", { class: "mini", type: "button" }, "move up");
    up.addEventListener("click", () => {
      if (index > 0 && act({ type: "reorder-message", from: index, to: index - 1 })) {
        selectedMessage = index - 1;
        refreshInspector();
      }
    });
    const down = el("button", { class: "mini", type: "button" }, "move down");
    down.addEventListener("click", () => {
      if (
        index < model.messages.length - 1 &&
        act({ type: "reorder-message", from: index, to: index + 1 })
      ) {
        selectedMessage = index + 1;
        refreshInspector();
      }
    });
    const remove = el("button", { class: "mini", type: "button" }, "delete");
    remove.addEventListener("click", () => {
      if (act({ type: "remove-message", index })) {
        selectedMessage = null;
        refreshInspector();
      }
    });
    inspector.append(commit, el("div", {}, up, down, remove));
    return;
  }

  if (model.roles.length < 2) {
    inspector.appendChild(el("div", {}, "add two roles to draw a message"));
    return;
  }
  inspector.appendChild(el("h4", {}, "new message"));
  let from = model.roles[0].name;
  let to = model.roles[1].name;
  let draft: Term = { kind: "var", name: "x", sort: "msg" };
  inspector.appendChild(
    el(
      "div",
      {},
      "from ",
      select(model.roles.map((r) => r.name), from, (v) => (from = v)),
      " to ",
      select(model.roles.map((r) => r.name), to, (v) => (to = v)),
    ),
  );
  const host = el("div");
  const rerender = () => {
    host.textContent = "";
    host.appendChild(
      termEditor(draft, model, (next) => {
        draft = next;
        rerender();
      }),
    );
  };
  rerender();
  inspector.appendChild(host);
  const commit = el("button", { type: "button" }, "add message");
  commit.addEventListener("click", () =>
    act({
      type: "add-message",
      message: { from, to, payload: draft, delivery: "decompose" },
    }),
  );
  inspector.appendChild(commit);
}

// -- toolbar -------------------------------------------------------------------

function download(filename: string, content: string, mime: string): void {
  const blob = new Blob([content], { type: mime });
  const url = URL.createObjectURL(blob);
  const anchor = el("a", { href: url, download: filename });
  anchor.click();
  URL.revokeObjectURL(url);
}

async function exportPsv(): Promise<void> {
  // canonical bytes come from the service round trip (store canonicalizes)
  try {
    const canonical = await api.storeAndFetch(
      editor.model.name,
      serializePsv(editor.model),
    );
    download(`${editor.model.name}.psv.xml`, canonical, "application/xml");
    editor.dirty = false;
  } catch (err) {
    flash(err instanceof ApiError ? err.message : "export failed: service unreachable");
  }
}

async function exportTamarin(): Promise<void> {
  if (hasErrors(validator.state.diagnostics)) {
    flash("export blocked: fix the validation errors first");
    refreshDiagnostics();
    return;
  }
  try {
    const theory = await api.compile(serializePsv(editor.model));
    download(`${editor.model.name}.spthy`, theory, "text/plain");
  } catch (err) {
    if (err instanceof ApiError && err.diagnostics.length) {
      validator.state = {
        diagnostics: err.diagnostics,
        offline: false,
        pending: false,
      };
      refreshDiagnostics();
      refreshChart();
      flash("export blocked: the compiler reported errors");
    } else {
      flash("export failed: service unreachable");
    }
  }
}

async function loadExample(name: string): Promise<void> {
  try {
    const xml = await api.example(name);
    editor.load(parsePsv(xml));
    layout = (await api.layout(name).catch(() => null)) ?? {};
    selectedMessage = null;
    modelChanged();
  } catch (err) {
    flash(err instanceof ApiError ? err.message : "cannot load example");
  }
}

async function saveToStore(): Promise<void> {
  try {
    await api.storeAndFetch(editor.model.name, serializePsv(editor.model));
    await persistLayout();
    editor.dirty = false;
    flash(`saved '${editor.model.name}'`);
  } catch (err) {
    flash(err instanceof ApiError ? err.message : "save failed: service unreachable");
  }
}

function refreshToolbar(): void {
  toolbar.textContent = "";
  const undoBtn = el("button", { type: "button" }, "undo");
  undoBtn.addEventListener("click", () => {
    if (editor.undo()) modelChanged();
  });
  const redoBtn = el("button", { type: "button" }, "redo");
  redoBtn.addEventListener("click", () => {
    if (editor.redo()) modelChanged();
  });
  const saveBtn = el("button", { type: "button" }, "save");
  saveBtn.addEventListener("click", () => void saveToStore());
  const exportPsvBtn = el("button", { type: "button" }, "export PSV");
  exportPsvBtn.addEventListener("click", () => void exportPsv());
  const exportTamarinBtn = el("button", { type: "button" }, "export Tamarin");
  exportTamarinBtn.addEventListener("click", () => void exportTamarin());
  const newBtn = el("button", { type: "button" }, "new");
  newBtn.addEventListener("click", () => {
    editor.load(emptyModel());
    layout = {};
    selectedMessage = null;
    modelChanged();
  });
  toolbar.append(newBtn, undoBtn, redoBtn, saveBtn, exportPsvBtn, exportTamarinBtn);

  const examplePicker = el("select", { class: "example-picker" });
  examplePicker.appendChild(el("option", { value: "" }, "load example..."));
  void api
    .examples()
    .then((names) => {
      for (const name of names) {
        examplePicker.appendChild(el("option", { value: name }, name));
      }
    })
    .catch(() => undefined);
  examplePicker.addEventListener("change", () => {
    if (examplePicker.value) void loadExample(examplePicker.value);
  });
  toolbar.appendChild(examplePicker);
}

function refreshAll(): void {
  refreshToolbar();
  refreshSidebar();
  refreshChart();
  refreshInspector();
  refreshDiagnostics();
}

refreshAll();
validator.schedule(serializePsv(editor.model));
