/**
 * PSV XML, client side. The serializer mirrors the toolchain's canonical
 * form byte for byte (fixed section order, alphabetical attributes,
 * 2-space indent, defaults omitted, LF endings); the loader uses the
 * browser's XML parser and accepts any schema-valid ordering. The server
 * remains the authority: exports go through its canonicalizing store.
 */
import type {
  Bundle,
  EquationDecl,
  Goal,
  Message,
  ProtocolModel,
  RoleDecl,
  Term,
} from "./model";
import { BUNDLES } from "./model";

function escapeAttr(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function attrs(pairs: [string, string][]): string {
  return pairs
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => ` ${k}="${escapeAttr(v)}"`)
    .join("");
}

class Writer {
  lines: string[] = ['<?xml version="1.0" encoding="UTF-8"?>'];

  open(depth: number, tag: string, pairs: [string, string][] = []): void {
    this.lines.push(`${"  ".repeat(depth)}<${tag}${attrs(pairs)}>`);
  }

  close(depth: number, tag: string): void {
    this.lines.push(`${"  ".repeat(depth)}</${tag}>`);
  }

  leaf(depth: number, tag: string, pairs: [string, string][] = []): void {
    this.lines.push(`${"  ".repeat(depth)}<${tag}${attrs(pairs)}/>`);
  }

  term(depth: number, term: Term): void {
    switch (term.kind) {
      case "var": {
        const pairs: [string, string][] = [["name", term.name]];
        if (term.sort !== "msg") pairs.push(["sort", term.sort]);
        this.leaf(depth, "var", pairs);
        return;
      }
      case "const": {
        const pairs: [string, string][] = [["name", term.name]];
        if (term.sort !== "pub") pairs.push(["sort", term.sort]);
        this.leaf(depth, "const", pairs);
        return;
      }
      case "apply": {
        if (term.args.length === 0) {
          this.leaf(depth, "apply", [["fun", term.fun]]);
          return;
        }
        this.open(depth, "apply", [["fun", term.fun]]);
        for (const arg of term.args) this.term(depth + 1, arg);
        this.close(depth, "apply");
        return;
      }
      case "tuple": {
        this.open(depth, "tuple");
        for (const item of term.items) this.term(depth + 1, item);
        this.close(depth, "tuple");
        return;
      }
    }
  }

  text(): string {
    return this.lines.join("\n") + "\n";
  }
}

export function serializePsv(model: ProtocolModel): string {
  const w = new Writer();
  w.open(0, "protocol", [
    ["format", "1"],
    ["name", model.name],
  ]);

  if (model.bundles.length || model.functions.length || model.equations.length) {
    w.open(1, "declarations");
    for (const bundle of [...model.bundles].sort()) {
      w.leaf(2, "bundle", [["name", bundle]]);
    }
    for (const fn of model.functions) {
      w.leaf(2, "function", [
        ["arity", String(fn.arity)],
        ["name", fn.name],
        ["visibility", fn.visibility],
      ]);
    }
    for (const eq of model.equations) {
      w.open(2, "equation", [["orientation", eq.orientation]]);
      w.open(3, "lhs");
      w.term(4, eq.lhs);
      w.close(3, "lhs");
      w.open(3, "rhs");
      w.term(4, eq.rhs);
      w.close(3, "rhs");
      w.close(2, "equation");
    }
    w.close(1, "declarations");
  }

  w.open(1, "roles");
  for (const role of model.roles) {
    if (!role.knows.length && !role.fresh.length && !role.ltks.length) {
      w.leaf(2, "role", [["name", role.name]]);
      continue;
    }
    w.open(2, "role", [["name", role.name]]);
    for (const known of role.knows) {
      w.open(3, "knows");
      w.term(4, known);
      w.close(3, "knows");
    }
    for (const fresh of role.fresh) {
      w.leaf(3, "fresh", [["name", fresh]]);
    }
    for (const ltk of role.ltks) {
      w.leaf(3, "ltk", [
        ["kind", ltk.kind],
        ["name", ltk.name],
      ]);
    }
    w.close(2, "role");
  }
  w.close(1, "roles");

  if (model.messages.length) {
    w.open(1, "exchange");
    model.messages.forEach((message, i) => {
      const pairs: [string, string][] = [
        ["from", message.from],
        ["index", String(i + 1)],
        ["to", message.to],
      ];
      if (message.delivery !== "decompose") pairs.push(["delivery", message.delivery]);
      w.open(2, "message", pairs);
      w.term(3, message.payload);
      w.close(2, "message");
    });
    w.close(1, "exchange");
  }

  if (model.goals.length) {
    w.open(1, "goals");
    for (const goal of model.goals) {
      if (goal.kind === "secrecy") {
        w.open(2, "secrecy", [["role", goal.role]]);
        w.term(3, goal.term);
        w.close(2, "secrecy");
      } else {
        w.open(2, "agreement", [
          ["claimer", goal.claimer],
          ["peer", goal.peer],
        ]);
        for (const term of goal.terms) {
          w.open(3, "on");
          w.term(4, term);
          w.close(3, "on");
        }
        w.close(2, "agreement");
      }
    }
    w.close(1, "goals");
  }

  w.close(0, "protocol");
  return w.text();
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

export class PsvLoadError extends Error {}

function children(el: Element, tag?: string): Element[] {
  return Array.from(el.children).filter((c) => !tag || c.tagName === tag);
}

function need(el: Element, attr: string): string {
  const value = el.getAttribute(attr);
  if (value === null) {
    throw new PsvLoadError(`<${el.tagName}> is missing attribute '${attr}'`);
  }
  return value;
}

function loadTerm(el: Element): Term {
  switch (el.tagName) {
    case "var":
      return {
        kind: "var",
        name: need(el, "name"),
        sort: (el.getAttribute("sort") ?? "msg") as "msg" | "fresh" | "pub",
      };
    case "const":
      return {
        kind: "const",
        name: need(el, "name"),
        sort: (el.getAttribute("sort") ?? "pub") as "msg" | "pub",
      };
    case "apply":
      return { kind: "apply", fun: need(el, "fun"), args: children(el).map(loadTerm) };
    case "tuple":
      return { kind: "tuple", items: children(el).map(loadTerm) };
    default:
      throw new PsvLoadError(`<${el.tagName}> is not a term element`);
  }
}

function loadSingleTerm(el: Element, what: string): Term {
  const terms = children(el);
  if (terms.length !== 1) {
    throw new PsvLoadError(`${what} must contain exactly one term`);
  }
  return loadTerm(terms[0]);
}

export function parsePsv(text: string): ProtocolModel {
  const doc = new DOMParser().parseFromString(text, "application/xml");
  if (doc.querySelector("parsererror")) {
    throw new PsvLoadError("malformed XML");
  }
  const root = doc.documentElement;
  if (root.tagName !== "protocol") {
    throw new PsvLoadError(`root element must be <protocol>, found <${root.tagName}>`);
  }
  const model: ProtocolModel = {
    name: need(root, "name"),
    bundles: [],
    functions: [],
    equations: [],
    roles: [],
    messages: [],
    goals: [],
  };

  for (const decl of children(root, "declarations")) {
    for (const el of children(decl)) {
      if (el.tagName === "bundle") {
        const name = need(el, "name");
        if (!(BUNDLES as readonly string[]).includes(name)) {
          throw new PsvLoadError(`unknown bundle '${name}'`);
        }
        model.bundles.push(name as Bundle);
      } else if (el.tagName === "function") {
        model.functions.push({
          name: need(el, "name"),
          arity: Number(need(el, "arity")),
          visibility: need(el, "visibility") as "public" | "private",
        });
      } else if (el.tagName === "equation") {
        const lhs = children(el, "lhs")[0];
        const rhs = children(el, "rhs")[0];
        if (!lhs || !rhs) throw new PsvLoadError("<equation> needs <lhs> and <rhs>");
        const eq: EquationDecl = {
          orientation: need(el, "orientation") as "destructor" | "unoriented",
          lhs: loadSingleTerm(lhs, "<lhs>"),
          rhs: loadSingleTerm(rhs, "<rhs>"),
        };
        model.equations.push(eq);
      }
    }
  }
  model.bundles.sort();

  const rolesSections = children(root, "roles");
  for (const section of rolesSections) {
    for (const el of children(section, "role")) {
      const role: RoleDecl = { name: need(el, "name"), knows: [], fresh: [], ltks: [] };
      for (const child of children(el)) {
        if (child.tagName === "knows") role.knows.push(loadSingleTerm(child, "<knows>"));
        else if (child.tagName === "fresh") role.fresh.push(need(child, "name"));
        else if (child.tagName === "ltk") {
          role.ltks.push({
            name: need(child, "name"),
            kind: need(child, "kind") as "asymmetric" | "symmetric",
          });
        }
      }
      model.roles.push(role);
    }
  }

  for (const section of children(root, "exchange")) {
    for (const el of children(section, "message")) {
      const message: Message = {
        from: need(el, "from"),
        to: need(el, "to"),
        payload: loadSingleTerm(el, "<message>"),
        delivery: (el.getAttribute("delivery") ?? "decompose") as "decompose" | "atomic",
      };
      model.messages.push(message);
    }
  }

  for (const section of children(root, "goals")) {
    for (const el of children(section)) {
      if (el.tagName === "secrecy") {
        const goal: Goal = {
          kind: "secrecy",
          role: need(el, "role"),
          term: loadSingleTerm(el, "<secrecy>"),
        };
        model.goals.push(goal);
      } else if (el.tagName === "agreement") {
        model.goals.push({
          kind: "agreement",
          claimer: need(el, "claimer"),
          peer: need(el, "peer"),
          terms: children(el, "on").map((on) => loadSingleTerm(on, "<on>")),
        });
      }
    }
  }

  return model;
}
