/**
 * Client-side mirror of the protocol document. It stores exactly what the
 * canonical serialization would, nothing more: all semantic checking lives
 * on the server, the editor only enforces what a form can (unique names,
 * arities, identifier syntax).
 */

export type VarSort = "msg" | "fresh" | "pub";
export type ConstSort = "msg" | "pub";

export type Term =
  | { kind: "var"; name: string; sort: VarSort }
  | { kind: "const"; name: string; sort: ConstSort }
  | { kind: "apply"; fun: string; args: Term[] }
  | { kind: "tuple"; items: Term[] };

export interface FunctionDecl {
  name: string;
  arity: number;
  visibility: "public" | "private";
}

export interface EquationDecl {
  orientation: "destructor" | "unoriented";
  lhs: Term;
  rhs: Term;
}

export interface LtkDecl {
  name: string;
  kind: "asymmetric" | "symmetric";
}

export interface RoleDecl {
  name: string;
  knows: Term[];
  fresh: string[];
  ltks: LtkDecl[];
}

export interface Message {
  from: string;
  to: string;
  payload: Term;
  delivery: "decompose" | "atomic";
}

export type Goal =
  | { kind: "secrecy"; role: string; term: Term }
  | { kind: "agreement"; claimer: string; peer: string; terms: Term[] };

export const BUNDLES = [
  "asymmetric-encryption",
  "diffie-hellman",
  "hashing",
  "pairing",
  "signing",
  "symmetric-encryption",
] as const;
export type Bundle = (typeof BUNDLES)[number];

export interface ProtocolModel {
  name: string;
  bundles: Bundle[];
  functions: FunctionDecl[];
  equations: EquationDecl[];
  roles: RoleDecl[];
  messages: Message[];
  goals: Goal[];
}

export interface Diagnostic {
  severity: "error" | "warning";
  code: string;
  message: string;
  line?: number;
  column?: number;
  stepIndex?: number;
}

export const IDENT = /^[A-Za-z][A-Za-z0-9_]*$/;

export function emptyModel(): ProtocolModel {
  return {
    name: "untitled",
    bundles: [],
    functions: [],
    equations: [],
    roles: [],
    messages: [],
    goals: [],
  };
}

export function cloneModel(model: ProtocolModel): ProtocolModel {
  return JSON.parse(JSON.stringify(model)) as ProtocolModel;
}

export function modelsEqual(a: ProtocolModel, b: ProtocolModel): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}

export function varTerm(name: string, sort: VarSort = "msg"): Term {
  return { kind: "var", name, sort };
}

export function constTerm(name: string, sort: ConstSort = "pub"): Term {
  return { kind: "const", name, sort };
}

export function apply(fun: string, ...args: Term[]): Term {
  return { kind: "apply", fun, args };
}

export function tuple(...items: Term[]): Term {
  return { kind: "tuple", items };
}

/** Human-readable term label: ~fresh, $public, 'const', f(..), <a, b>. */
export function termText(term: Term): string {
  switch (term.kind) {
    case "var": {
      const marker = term.sort === "fresh" ? "~" : term.sort === "pub" ? "$" : "";
      return marker + term.name;
    }
    case "const":
      return term.sort === "pub" ? `'${term.name}'` : `%${term.name}`;
    case "apply":
      return term.args.length
        ? `${term.fun}(${term.args.map(termText).join(", ")})`
        : term.fun;
    case "tuple":
      return `<${term.items.map(termText).join(", ")}>`;
  }
}

/** Bundle symbol table mirrored from the toolchain's fixed tables. */
export const BUNDLE_SYMBOLS: Record<Bundle, { name: string; arity: number }[]> = {
  "symmetric-encryption": [
    { name: "senc", arity: 2 },
    { name: "sdec", arity: 2 },
  ],
  "asymmetric-encryption": [
    { name: "aenc", arity: 2 },
    { name: "adec", arity: 2 },
    { name: "pk", arity: 1 },
  ],
  signing: [
    { name: "sign", arity: 2 },
    { name: "verify", arity: 3 },
    { name: "pk", arity: 1 },
    { name: "true", arity: 0 },
  ],
  hashing: [{ name: "h", arity: 1 }],
  "diffie-hellman": [{ name: "exp", arity: 2 }],
  pairing: [],
};

export function knownSymbols(model: ProtocolModel): Map<string, number> {
  const table = new Map<string, number>();
  for (const bundle of model.bundles) {
    for (const sym of BUNDLE_SYMBOLS[bundle]) {
      table.set(sym.name, sym.arity);
    }
  }
  for (const fn of model.functions) {
    table.set(fn.name, fn.arity);
  }
  return table;
}

/** Form-level term check: arity against the signature, identifier syntax,
 * tuple width. Anything deeper is the server's job. */
export function termIssue(term: Term, symbols: Map<string, number>): string | null {
  switch (term.kind) {
    case "var":
    case "const":
      return IDENT.test(term.name) ? null : `bad identifier '${term.name}'`;
    case "apply": {
      const arity = symbols.get(term.fun);
      if (arity === undefined) {
        return `unknown function '${term.fun}'`;
      }
      if (term.args.length !== arity) {
        return `${term.fun} expects ${arity} argument(s), got ${term.args.length}`;
      }
      for (const arg of term.args) {
        const issue = termIssue(arg, symbols);
        if (issue) return issue;
      }
      return null;
    }
    case "tuple": {
      if (term.items.length < 2) {
        return "tuples need at least two items";
      }
      for (const item of term.items) {
        const issue = termIssue(item, symbols);
        if (issue) return issue;
      }
      return null;
    }
  }
}
