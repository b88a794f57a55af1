/**
 * Structured editing forms. Terms are edited as trees (kind selector plus
 * per-kind fields), never parsed from free text, so the client cannot
 * drift from the toolchain's term grammar.
 */
import type { ProtocolModel, Term } from "./model";
import { BUNDLE_SYMBOLS, knownSymbols } from "./model";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function option(value: string, label = value, selected = false): HTMLOptionElement {
  const opt = el("option", { value }, label);
  opt.selected = selected;
  return opt;
}

export function select(
  values: string[],
  current: string,
  onChange: (value: string) => void,
  className = "",
): HTMLSelectElement {
  const node = el("select", className ? { class: className } : {});
  for (const value of values) {
    node.appendChild(option(value, value, value === current));
  }
  node.addEventListener("change", () => onChange(node.value));
  return node;
}

export function textInput(
  current: string,
  onChange: (value: string) => void,
  placeholder = "",
): HTMLInputElement {
  const node = el("input", { type: "text", placeholder }) as HTMLInputElement;
  node.value = current;
  node.addEventListener("change", () => onChange(node.value));
  return node;
}

function defaultTerm(kind: Term["kind"], model: ProtocolModel): Term {
  switch (kind) {
    case "var":
      return { kind: "var", name: "x", sort: "msg" };
    case "const":
      return { kind: "const", name: "c", sort: "pub" };
    case "apply": {
      const table = knownSymbols(model);
      const first = [...table.keys()].sort()[0];
      if (first === undefined) return { kind: "apply", fun: "f", args: [] };
      const arity = table.get(first) ?? 0;
      return {
        kind: "apply",
        fun: first,
        args: Array.from({ length: arity }, () => defaultTerm("var", model)),
      };
    }
    case "tuple":
      return {
        kind: "tuple",
        items: [defaultTerm("var", model), defaultTerm("var", model)],
      };
  }
}

/**
 * Recursive term editor. Mutations go through onChange with a fresh term
 * value; the caller owns committing it to the document via an action.
 */
export function termEditor(
  term: Term,
  model: ProtocolModel,
  onChange: (term: Term) => void,
): HTMLElement {
  const root = el("div", { class: "term-editor" });
  const kindSelect = select(
    ["var", "const", "apply", "tuple"],
    term.kind,
    (kind) => onChange(defaultTerm(kind as Term["kind"], model)),
    "term-kind",
  );
  root.appendChild(kindSelect);

  switch (term.kind) {
    case "var": {
      root.appendChild(
        textInput(term.name, (name) => onChange({ ...term, name }), "name"),
      );
      root.appendChild(
        select(["msg", "fresh", "pub"], term.sort, (sort) =>
          onChange({ ...term, sort: sort as "msg" | "fresh" | "pub" }),
        ),
      );
      break;
    }
    case "const": {
      root.appendChild(
        textInput(term.name, (name) => onChange({ ...term, name }), "name"),
      );
      root.appendChild(
        select(["pub", "msg"], term.sort, (sort) =>
          onChange({ ...term, sort: sort as "pub" | "msg" }),
        ),
      );
      break;
    }
    case "apply": {
      const table = knownSymbols(model);
      const names = [...table.keys()].sort();
      root.appendChild(
        select(names.length ? names : [term.fun], term.fun, (fun) => {
          const arity = table.get(fun) ?? 0;
          const args = Array.from(
            { length: arity },
            (_, i) => term.args[i] ?? defaultTerm("var", model),
          );
          onChange({ kind: "apply", fun, args });
        }),
      );
      const argList = el("div", { class: "term-args" });
      term.args.forEach((arg, i) => {
        argList.appendChild(
          termEditor(arg, model, (next) => {
            const args = term.args.slice();
            args[i] = next;
            onChange({ ...term, args });
          }),
        );
      });
      root.appendChild(argList);
      break;
    }
    case "tuple": {
      const itemList = el("div", { class: "term-args" });
      term.items.forEach((item, i) => {
        const row = el("div", { class: "tuple-item" });
        row.appendChild(
          termEditor(item, model, (next) => {
            const items = term.items.slice();
            items[i] = next;
            onChange({ ...term, items });
          }),
        );
        if (term.items.length > 2) {
          const remove = el("button", { class: "mini", type: "button" }, "x");
          remove.addEventListener("click", () =>
            onChange({ ...term, items: term.items.filter((_, j) => j !== i) }),
          );
          row.appendChild(remove);
        }
        itemList.appendChild(row);
      });
      const add = el("button", { class: "mini", type: "button" }, "+ item");
      add.addEventListener("click", () =>
        onChange({ ...term, items: [...term.items, defaultTerm("var", model)] }),
      );
      itemList.appendChild(add);
      root.appendChild(itemList);
      break;
    }
  }
  return root;
}

export function bundleNames(): string[] {
  return Object.keys(BUNDLE_SYMBOLS).sort();
}
