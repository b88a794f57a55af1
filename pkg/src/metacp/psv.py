"""Reader and writer for the PSV XML document format (version 1).

The format is fixed and closed: unknown elements or attributes are
errors, DOCTYPEs are rejected outright, and the serializer emits one
canonical byte form (fixed element order, alphabetical attributes,
2-space indent, LF endings) so that documents diff cleanly and round-trip
bit-exactly. Parsing is total: any byte string yields either a document
or a list of located diagnostics, never an exception.
"""
from __future__ import annotations

import xml.parsers.expat
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, error, has_errors, warning
from .protocol import (
    AgreementGoal,
    Delivery,
    KeyKind,
    LongTermKey,
    MessageStep,
    ProtocolSpec,
    Role,
    SecrecyGoal,
    SecurityGoal,
)
from .terms import (
    IDENT_RE,
    Apply,
    Const,
    FunctionSymbol,
    ModelError,
    Sort,
    Term,
    TupleTerm,
    Var,
    Visibility,
    subterms,
    vars_of,
)
from .theories import (
    BundleName,
    Equation,
    Orientation,
    bundle_constants,
    bundle_symbols,
)

DEFAULT_SIZE_CAP = 4 * 1024 * 1024  # protocol documents are small

FORMAT_VERSION = "1"

TERM_TAGS = {"var", "const", "apply", "tuple"}


class PsvParseError(Exception):
    """Raised by parse_psv when the input is not a valid PSV document."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        first = next((d for d in diagnostics if d.is_error), None)
        super().__init__(first.message if first else "invalid PSV document")


@dataclass(frozen=True)
class PsvDocument:
    spec: ProtocolSpec
    xml_version: str = "1.0"
    format_version: str = FORMAT_VERSION


# ---------------------------------------------------------------------------
# low-level XML loading with source locations
# ---------------------------------------------------------------------------


@dataclass
class _Node:
    tag: str
    attrs: dict[str, str]
    line: int
    column: int
    children: list["_Node"] = field(default_factory=list)
    texts: list[tuple[str, int, int]] = field(default_factory=list)


class _Rejected(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def _load_tree(data: bytes, size_cap: int) -> tuple[_Node | None, list[Diagnostic]]:
    if len(data) > size_cap:
        return None, [error("PSV003", f"document is {len(data)} bytes, cap is {size_cap}")]

    parser = xml.parsers.expat.ParserCreate()
    root: list[_Node] = []
    stack: list[_Node] = []

    def position() -> tuple[int, int]:
        return parser.CurrentLineNumber, parser.CurrentColumnNumber + 1

    def start(tag: str, attrs: dict[str, str]) -> None:
        line, col = position()
        node = _Node(tag, attrs, line, col)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(_tag: str) -> None:
        stack.pop()

    def chars(text: str) -> None:
        if text.strip() and stack:
            line, col = position()
            stack[-1].texts.append((text.strip(), line, col))

    def doctype(*_args) -> None:
        line, col = position()
        raise _Rejected(error("PSV002", "DOCTYPE is not allowed", line=line, column=col))

    def entity(*_args) -> None:
        line, col = position()
        raise _Rejected(error("PSV002", "entity declarations are not allowed", line=line, column=col))

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    parser.StartDoctypeDeclHandler = doctype
    parser.EntityDeclHandler = entity
    parser.ExternalEntityRefHandler = lambda *a: 0

    try:
        parser.Parse(data, True)
    except _Rejected as rej:
        return None, [rej.diag]
    except xml.parsers.expat.ExpatError as exc:
        message = xml.parsers.expat.errors.messages[exc.code]
        return None, [error("PSV001", message, line=exc.lineno, column=exc.offset + 1)]
    except (LookupError, ValueError) as exc:
        # expat surfaces unknown encodings and similar header problems this way
        return None, [error("PSV001", str(exc))]

    if not root:
        return None, [error("PSV001", "document has no root element")]
    return root[0], []


# ---------------------------------------------------------------------------
# schema walk
# ---------------------------------------------------------------------------


@dataclass
class _TermUse:
    term: Term
    node: _Node
    context: str
    role: str | None = None
    step_index: int | None = None


class _Walker:
    """Checks the tree against the closed schema and collects model parts.

    The walk keeps going after most errors so that one pass reports as
    much as possible; the document is only constructed when no error was
    recorded.
    """

    def __init__(self, root: _Node):
        self.root = root
        self.symbol_table: dict[str, FunctionSymbol] = {}
        self.diags: list[Diagnostic] = []
        self.bundles: list[BundleName] = []
        self.signature: list[FunctionSymbol] = []
        self.equations: list[Equation] = []
        self.roles: list[Role] = []
        self.role_nodes: dict[str, _Node] = {}
        self.steps: list[MessageStep] = []
        self.goals: list[SecurityGoal] = []
        self.uses: list[_TermUse] = []
        self.name = ""

    # -- small helpers ----------------------------------------------------

    def err(self, code: str, message: str, node: _Node, step: int | None = None) -> None:
        self.diags.append(
            error(code, message, line=node.line, column=node.column, step_index=step)
        )

    def check_attrs(self, node: _Node, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> bool:
        ok = True
        for attr in node.attrs:
            if attr not in required and attr not in optional:
                self.err("PSV011", f"<{node.tag}> does not take attribute {attr!r}", node)
                ok = False
        for attr in required:
            if attr not in node.attrs:
                self.err("PSV012", f"<{node.tag}> requires attribute {attr!r}", node)
                ok = False
        return ok

    def check_no_text(self, node: _Node) -> None:
        for text, line, col in node.texts:
            self.diags.append(
                error("PSV016", f"unexpected text {text[:20]!r} in <{node.tag}>", line=line, column=col)
            )

    def identifier(self, value: str, what: str, node: _Node) -> bool:
        if not IDENT_RE.match(value):
            self.err("PSV026", f"{what} {value!r} is not a valid identifier", node)
            return False
        return True

    # -- term parsing ------------------------------------------------------

    def parse_term(self, node: _Node, step: int | None = None) -> Term | None:
        self.check_no_text(node)
        if node.tag == "var":
            if not self.check_attrs(node, ("name",), ("sort",)):
                return None
            token = node.attrs.get("sort", "msg")
            if token not in ("msg", "fresh", "pub"):
                self.err("PSV013", f"variable sort must be msg, fresh or pub, not {token!r}", node, step)
                return None
            if not self.identifier(node.attrs["name"], "variable name", node):
                return None
            return Var(node.attrs["name"], Sort.from_token(token))
        if node.tag == "const":
            if not self.check_attrs(node, ("name",), ("sort",)):
                return None
            token = node.attrs.get("sort", "pub")
            if token not in ("msg", "pub"):
                self.err("PSV013", f"constant sort must be msg or pub, not {token!r}", node, step)
                return None
            if not self.identifier(node.attrs["name"], "constant name", node):
                return None
            return Const(node.attrs["name"], Sort.from_token(token))
        if node.tag == "apply":
            if not self.check_attrs(node, ("fun",)):
                return None
            fun = node.attrs["fun"]
            symbol = self.symbol_table.get(fun)
            if symbol is None:
                self.err("PSV023", f"function {fun!r} is not declared", node, step)
                return None
            args = [self.parse_term(child, step) for child in node.children]
            if any(a is None for a in args):
                return None
            if len(args) != symbol.arity:
                self.err(
                    "PSV024",
                    f"{fun!r} expects {symbol.arity} argument(s), got {len(args)}",
                    node,
                    step,
                )
                return None
            return Apply(symbol, tuple(args))  # type: ignore[arg-type]
        if node.tag == "tuple":
            if not self.check_attrs(node, ()):
                return None
            items = [self.parse_term(child, step) for child in node.children]
            if any(i is None for i in items):
                return None
            if len(items) < 2:
                self.err("PSV014", "<tuple> needs at least two items", node, step)
                return None
            return TupleTerm(tuple(items))  # type: ignore[arg-type]
        self.err("PSV010", f"<{node.tag}> is not a term element", node, step)
        return None

    def single_term_child(self, node: _Node, what: str, step: int | None = None) -> Term | None:
        if len(node.children) != 1:
            self.err("PSV014", f"{what} must contain exactly one term", node, step)
            return None
        return self.parse_term(node.children[0], step)

    # -- sections ----------------------------------------------------------

    def walk(self) -> ProtocolSpec | None:
        node = self.root
        if node.tag != "protocol":
            self.err("PSV010", f"root element must be <protocol>, found <{node.tag}>", node)
            return None
        self.check_attrs(node, ("format", "name"))
        self.check_no_text(node)
        self.name = node.attrs.get("name", "")
        if "name" in node.attrs:
            self.identifier(self.name, "protocol name", node)
        if node.attrs.get("format") not in (None, FORMAT_VERSION):
            self.err(
                "PSV015",
                f"format version {node.attrs['format']!r} is not supported (expected \"1\")",
                node,
            )

        sections: dict[str, _Node] = {}
        for child in node.children:
            if child.tag not in ("declarations", "roles", "exchange", "goals"):
                self.err("PSV010", f"<{child.tag}> is not allowed under <protocol>", child)
                continue
            if child.tag in sections:
                self.err("PSV014", f"<{child.tag}> appears more than once", child)
                continue
            sections[child.tag] = child

        if "declarations" in sections:
            self.walk_declarations(sections["declarations"])
        # symbol table is needed before any term is parsed
        self.symbol_table = bundle_symbols(self.bundles)
        for sym in self.signature:
            self.symbol_table[sym.name] = sym

        if "roles" in sections:
            self.walk_roles(sections["roles"])
        else:
            self.err("PSV014", "<protocol> requires a <roles> section", node)
        if "exchange" in sections:
            self.walk_exchange(sections["exchange"])
        if "goals" in sections:
            self.walk_goals(sections["goals"])

        self.cross_checks()

        if has_errors(self.diags):
            return None
        try:
            return ProtocolSpec(
                name=self.name,
                bundles=frozenset(self.bundles),
                signature=tuple(self.signature),
                equations=tuple(self.equations),
                roles=tuple(self.roles),
                exchange=tuple(self.steps),
                goals=tuple(self.goals),
            )
        except ModelError as exc:
            self.err("PSV090", str(exc), node)
            return None

    def walk_declarations(self, node: _Node) -> None:
        self.check_attrs(node, ())
        self.check_no_text(node)
        for child in node.children:
            if child.tag == "bundle":
                if not self.check_attrs(child, ("name",)):
                    continue
                token = child.attrs["name"]
                try:
                    name = BundleName.from_token(token)
                except ModelError:
                    self.err("PSV033", f"unknown theory bundle {token!r}", child)
                    continue
                if name in self.bundles:
                    self.err("PSV014", f"bundle {token!r} declared twice", child)
                    continue
                self.bundles.append(name)
            elif child.tag not in ("function", "equation"):
                self.err("PSV010", f"<{child.tag}> is not allowed under <declarations>", child)

        table = bundle_symbols(self.bundles)
        for child in node.children:
            if child.tag != "function":
                continue
            if not self.check_attrs(child, ("arity", "name", "visibility")):
                continue
            name = child.attrs["name"]
            if not self.identifier(name, "function name", child):
                continue
            try:
                arity = int(child.attrs["arity"])
                if arity < 0:
                    raise ValueError
            except ValueError:
                self.err("PSV013", f"arity {child.attrs['arity']!r} must be a non-negative integer", child)
                continue
            token = child.attrs["visibility"]
            if token not in ("public", "private"):
                self.err("PSV013", f"visibility must be public or private, not {token!r}", child)
                continue
            if name in table:
                code = "PSV029" if name in bundle_symbols(self.bundles) else "PSV021"
                self.err(code, f"function {name!r} is already declared", child)
                continue
            sym = FunctionSymbol(name, arity, Visibility(token))
            table[name] = sym
            self.signature.append(sym)

        # equations go last: they may use any declared symbol
        self.symbol_table = table
        for child in node.children:
            if child.tag != "equation":
                continue
            self.walk_equation(child)

    def walk_equation(self, node: _Node) -> None:
        if not self.check_attrs(node, ("orientation",)):
            return
        token = node.attrs["orientation"]
        if token not in ("destructor", "unoriented"):
            self.err("PSV013", f"orientation must be destructor or unoriented, not {token!r}", node)
            return
        sides: dict[str, _Node] = {}
        for child in node.children:
            if child.tag not in ("lhs", "rhs"):
                self.err("PSV010", f"<{child.tag}> is not allowed under <equation>", child)
            elif child.tag in sides:
                self.err("PSV014", f"<{child.tag}> appears more than once", child)
            else:
                sides[child.tag] = child
        if set(sides) != {"lhs", "rhs"}:
            self.err("PSV014", "<equation> needs one <lhs> and one <rhs>", node)
            return
        lhs = self.single_term_child(sides["lhs"], "<lhs>")
        rhs = self.single_term_child(sides["rhs"], "<rhs>")
        if lhs is None or rhs is None:
            return
        if not vars_of(rhs) <= vars_of(lhs):
            self.err("PSV031", "equation right side uses variables absent from the left side", node)
            return
        try:
            self.equations.append(Equation(lhs, rhs, Orientation(token)))
        except ModelError as exc:
            self.err("PSV032", str(exc), node)

    def walk_roles(self, node: _Node) -> None:
        self.check_attrs(node, ())
        self.check_no_text(node)
        if not node.children:
            self.err("PSV014", "<roles> needs at least one <role>", node)
        fresh_owner: dict[str, str] = {}
        for child in node.children:
            if child.tag != "role":
                self.err("PSV010", f"<{child.tag}> is not allowed under <roles>", child)
                continue
            if not self.check_attrs(child, ("name",)):
                continue
            role_name = child.attrs["name"]
            if not self.identifier(role_name, "role name", child):
                continue
            if role_name in self.role_nodes:
                self.err("PSV020", f"role {role_name!r} is already declared", child)
                continue
            self.role_nodes[role_name] = child
            role = self.walk_role(child, role_name, fresh_owner)
            if role is not None:
                self.roles.append(role)

    def walk_role(self, node: _Node, role_name: str, fresh_owner: dict[str, str]) -> Role | None:
        self.check_no_text(node)
        knowledge: list[Term] = []
        fresh: list[Var] = []
        keys: list[LongTermKey] = []
        owned: set[str] = set()
        broken = False
        for child in node.children:
            if child.tag == "knows":
                if not self.check_attrs(child, ()):
                    broken = True
                    continue
                term = self.single_term_child(child, "<knows>")
                if term is None:
                    broken = True
                    continue
                knowledge.append(term)
                self.uses.append(_TermUse(term, child, f"knowledge of role {role_name}", role_name))
            elif child.tag == "fresh":
                if not self.check_attrs(child, ("name",)):
                    broken = True
                    continue
                name = child.attrs["name"]
                if not self.identifier(name, "fresh value name", child):
                    broken = True
                    continue
                if name in owned:
                    self.err("PSV030", f"role {role_name} declares {name!r} twice", child)
                    broken = True
                    continue
                if name in fresh_owner:
                    self.err(
                        "PSV030",
                        f"fresh value {name!r} is already declared by role {fresh_owner[name]}",
                        child,
                    )
                    broken = True
                    continue
                owned.add(name)
                fresh_owner[name] = role_name
                fresh.append(Var(name, Sort.FRESH))
            elif child.tag == "ltk":
                if not self.check_attrs(child, ("kind", "name")):
                    broken = True
                    continue
                name = child.attrs["name"]
                token = child.attrs["kind"]
                if token not in ("asymmetric", "symmetric"):
                    self.err("PSV013", f"key kind must be asymmetric or symmetric, not {token!r}", child)
                    broken = True
                    continue
                if not self.identifier(name, "key name", child):
                    broken = True
                    continue
                if name in owned or name in fresh_owner:
                    self.err("PSV030", f"key {name!r} is already declared", child)
                    broken = True
                    continue
                owned.add(name)
                fresh_owner[name] = role_name
                keys.append(LongTermKey(Var(name, Sort.FRESH), KeyKind(token)))
            else:
                self.err("PSV010", f"<{child.tag}> is not allowed under <role>", child)
                broken = True
        if broken:
            return None
        knows_vars = {v.name for t in knowledge for v in vars_of(t)}
        clash = knows_vars & owned
        if clash:
            self.err(
                "PSV030",
                f"role {role_name} lists its own fresh value {sorted(clash)[0]!r} as initial knowledge",
                node,
            )
            return None
        return Role(role_name, tuple(knowledge), tuple(fresh), tuple(keys))

    def walk_exchange(self, node: _Node) -> None:
        self.check_attrs(node, ())
        self.check_no_text(node)
        expected = 1
        for child in node.children:
            if child.tag != "message":
                self.err("PSV010", f"<{child.tag}> is not allowed under <exchange>", child)
                continue
            if not self.check_attrs(child, ("from", "index", "to"), ("delivery",)):
                continue
            try:
                index = int(child.attrs["index"])
            except ValueError:
                self.err("PSV013", f"index {child.attrs['index']!r} must be an integer", child)
                continue
            if index != expected:
                self.err(
                    "PSV027",
                    f"expected message index {expected}, found {index}",
                    child,
                    step=index,
                )
                continue
            expected += 1
            sender, receiver = child.attrs["from"], child.attrs["to"]
            ok = True
            for endpoint in (sender, receiver):
                if endpoint not in self.role_nodes:
                    self.err("PSV022", f"message references undeclared role {endpoint!r}", child, step=index)
                    ok = False
            if sender == receiver:
                self.err("PSV028", f"message {index} has identical sender and receiver", child, step=index)
                ok = False
            token = child.attrs.get("delivery", "decompose")
            if token not in ("decompose", "atomic"):
                self.err("PSV013", f"delivery must be decompose or atomic, not {token!r}", child, step=index)
                ok = False
            payload = self.single_term_child(child, "<message>", step=index)
            if payload is None or not ok:
                continue
            self.uses.append(_TermUse(payload, child, f"message {index}", sender, index))
            self.steps.append(MessageStep(index, sender, receiver, payload, Delivery(token)))

    def walk_goals(self, node: _Node) -> None:
        self.check_attrs(node, ())
        self.check_no_text(node)
        for child in node.children:
            if child.tag == "secrecy":
                if not self.check_attrs(child, ("role",)):
                    continue
                role = child.attrs["role"]
                if role not in self.role_nodes:
                    self.err("PSV022", f"secrecy goal references undeclared role {role!r}", child)
                    continue
                term = self.single_term_child(child, "<secrecy>")
                if term is None:
                    continue
                self.uses.append(_TermUse(term, child, f"secrecy goal of {role}", role))
                self.goals.append(SecrecyGoal(term, role))
            elif child.tag == "agreement":
                if not self.check_attrs(child, ("claimer", "peer")):
                    continue
                claimer, peer = child.attrs["claimer"], child.attrs["peer"]
                ok = True
                for endpoint in (claimer, peer):
                    if endpoint not in self.role_nodes:
                        self.err("PSV022", f"agreement goal references undeclared role {endpoint!r}", child)
                        ok = False
                if claimer == peer and ok:
                    self.err("PSV013", "agreement claimer and peer must differ", child)
                    ok = False
                terms: list[Term] = []
                for on in child.children:
                    if on.tag != "on":
                        self.err("PSV010", f"<{on.tag}> is not allowed under <agreement>", on)
                        ok = False
                        continue
                    term = self.single_term_child(on, "<on>")
                    if term is None:
                        ok = False
                        continue
                    terms.append(term)
                    self.uses.append(_TermUse(term, on, f"agreement goal of {claimer}", claimer))
                if not terms:
                    self.err("PSV014", "<agreement> needs at least one <on> term", child)
                    ok = False
                if ok:
                    self.goals.append(AgreementGoal(claimer, peer, tuple(terms)))
            else:
                self.err("PSV010", f"<{child.tag}> is not allowed under <goals>", child)

    # -- whole-document consistency -----------------------------------------

    def cross_checks(self) -> None:
        var_sorts: dict[str, tuple[Sort, _Node]] = {}
        const_sorts: dict[str, Sort] = {c.name: c.sort for c in bundle_constants(self.bundles)}
        owner: dict[str, str] = {}
        for role in self.roles:
            for name in role.owned_fresh_names:
                owner[name] = role.name
        role_names = {r.name for r in self.roles}

        for role in self.roles:
            node = self.role_nodes[role.name]
            for v in role.fresh_values:
                var_sorts.setdefault(v.name, (Sort.FRESH, node))
            for key in role.long_term_keys:
                var_sorts.setdefault(key.key_var.name, (Sort.FRESH, node))

        for use in self.uses:
            for sub in subterms(use.term):
                if isinstance(sub, Var):
                    prior = var_sorts.get(sub.name)
                    if prior is None:
                        var_sorts[sub.name] = (sub.sort, use.node)
                    elif prior[0] is not sub.sort:
                        self.err(
                            "PSV025",
                            f"variable {sub.name!r} was first used with sort "
                            f"{prior[0].value} and here with {sub.sort.value}",
                            use.node,
                            use.step_index,
                        )
                        continue
                    if sub.name in role_names and sub.sort is not Sort.PUBLIC:
                        self.err(
                            "PSV025",
                            f"variable {sub.name!r} names a role and must be pub-sorted",
                            use.node,
                            use.step_index,
                        )
                    if sub.sort is Sort.FRESH and sub.name not in owner:
                        self.err(
                            "PSV035",
                            f"fresh variable {sub.name!r} is not declared by any role",
                            use.node,
                            use.step_index,
                        )
                elif isinstance(sub, Const):
                    prior_sort = const_sorts.setdefault(sub.name, sub.sort)
                    if prior_sort is not sub.sort:
                        self.err(
                            "PSV025",
                            f"constant {sub.name!r} used with conflicting sorts",
                            use.node,
                            use.step_index,
                        )

        for use in self.uses:
            if not use.context.startswith("knowledge"):
                continue
            for v in vars_of(use.term):
                if v.sort is Sort.FRESH and owner.get(v.name) not in (None, use.role):
                    self.err(
                        "PSV034",
                        f"role {use.role} cannot start out knowing {v.name!r}, "
                        f"a fresh value of role {owner[v.name]}",
                        use.node,
                    )

        pki = {BundleName.ASYMMETRIC_ENCRYPTION, BundleName.SIGNING}
        if not (set(self.bundles) & pki):
            for role in self.roles:
                for key in role.long_term_keys:
                    if key.kind.value == "asymmetric":
                        self.err(
                            "PSV036",
                            f"role {role.name} declares asymmetric key "
                            f"{key.key_var.name!r} but no PKI bundle is active",
                            self.role_nodes[role.name],
                        )


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def try_parse_psv(
    data: bytes, *, size_cap: int = DEFAULT_SIZE_CAP
) -> tuple[PsvDocument | None, list[Diagnostic]]:
    """Parse PSV XML bytes; returns (document, diagnostics).

    The document is None exactly when the diagnostics contain an error.
    """
    try:
        tree, diags = _load_tree(data, size_cap)
        if tree is None:
            return None, diags
        walker = _Walker(tree)
        spec = walker.walk()
        diags = walker.diags
        if spec is None:
            return None, diags
        for eq in spec.equations:
            if eq.orientation is Orientation.UNORIENTED:
                diags.append(
                    warning(
                        "PSVW01",
                        "unoriented equation is ignored by the executability analysis",
                    )
                )
        return PsvDocument(spec), diags
    except Exception as exc:  # total parsing: never let an exception escape
        return None, [error("PSV099", f"internal parser failure: {exc}")]


def parse_psv(data: bytes, *, size_cap: int = DEFAULT_SIZE_CAP) -> PsvDocument:
    doc, diags = try_parse_psv(data, size_cap=size_cap)
    if doc is None:
        raise PsvParseError(diags)
    return doc


def validate_schema(data: bytes, *, size_cap: int = DEFAULT_SIZE_CAP) -> list[Diagnostic]:
    """Diagnostics of a parse, without the document."""
    _, diags = try_parse_psv(data, size_cap=size_cap)
    return diags


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _attr_str(attrs: dict[str, str]) -> str:
    return "".join(f' {k}="{_escape(v)}"' for k, v in sorted(attrs.items()))


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']

    def open(self, depth: int, tag: str, attrs: dict[str, str] | None = None) -> None:
        self.lines.append(f"{'  ' * depth}<{tag}{_attr_str(attrs or {})}>")

    def close(self, depth: int, tag: str) -> None:
        self.lines.append(f"{'  ' * depth}</{tag}>")

    def leaf(self, depth: int, tag: str, attrs: dict[str, str] | None = None) -> None:
        self.lines.append(f"{'  ' * depth}<{tag}{_attr_str(attrs or {})}/>")

    def term(self, depth: int, term: Term) -> None:
        if isinstance(term, Var):
            attrs = {"name": term.name}
            if term.sort is not Sort.MESSAGE:
                attrs["sort"] = term.sort.value
            self.leaf(depth, "var", attrs)
        elif isinstance(term, Const):
            attrs = {"name": term.name}
            if term.sort is not Sort.PUBLIC:
                attrs["sort"] = term.sort.value
            self.leaf(depth, "const", attrs)
        elif isinstance(term, Apply):
            if not term.args:
                self.leaf(depth, "apply", {"fun": term.symbol.name})
                return
            self.open(depth, "apply", {"fun": term.symbol.name})
            for arg in term.args:
                self.term(depth + 1, arg)
            self.close(depth, "apply")
        else:
            self.open(depth, "tuple")
            for item in term.items:
                self.term(depth + 1, item)
            self.close(depth, "tuple")

    def bytes(self) -> bytes:
        return ("\n".join(self.lines) + "\n").encode("utf-8")


def serialize_psv(doc: PsvDocument | ProtocolSpec) -> bytes:
    """Canonical UTF-8 bytes: fixed section order, alphabetical attributes,
    2-space indent, LF endings. Declaration order within sections is data
    and is preserved."""
    spec = doc.spec if isinstance(doc, PsvDocument) else doc
    w = _Writer()
    w.open(0, "protocol", {"format": FORMAT_VERSION, "name": spec.name})

    if spec.bundles or spec.signature or spec.equations:
        w.open(1, "declarations")
        for bundle in sorted(spec.bundles, key=lambda b: b.value):
            w.leaf(2, "bundle", {"name": bundle.value})
        for sym in spec.signature:
            w.leaf(
                2,
                "function",
                {"arity": str(sym.arity), "name": sym.name, "visibility": sym.visibility.value},
            )
        for eq in spec.equations:
            w.open(2, "equation", {"orientation": eq.orientation.value})
            w.open(3, "lhs")
            w.term(4, eq.lhs)
            w.close(3, "lhs")
            w.open(3, "rhs")
            w.term(4, eq.rhs)
            w.close(3, "rhs")
            w.close(2, "equation")
        w.close(1, "declarations")

    w.open(1, "roles")
    for role in spec.roles:
        if not role.initial_knowledge and not role.fresh_values and not role.long_term_keys:
            w.leaf(2, "role", {"name": role.name})
            continue
        w.open(2, "role", {"name": role.name})
        for term in role.initial_knowledge:
            w.open(3, "knows")
            w.term(4, term)
            w.close(3, "knows")
        for v in role.fresh_values:
            w.leaf(3, "fresh", {"name": v.name})
        for key in role.long_term_keys:
            w.leaf(3, "ltk", {"kind": key.kind.value, "name": key.key_var.name})
        w.close(2, "role")
    w.close(1, "roles")

    if spec.exchange:
        w.open(1, "exchange")
        for step in spec.exchange:
            attrs = {"from": step.sender, "index": str(step.index), "to": step.receiver}
            if step.delivery is not Delivery.DECOMPOSE:
                attrs["delivery"] = step.delivery.value
            w.open(2, "message", attrs)
            w.term(3, step.payload)
            w.close(2, "message")
        w.close(1, "exchange")

    if spec.goals:
        w.open(1, "goals")
        for goal in spec.goals:
            if isinstance(goal, SecrecyGoal):
                w.open(2, "secrecy", {"role": goal.viewpoint})
                w.term(3, goal.term)
                w.close(2, "secrecy")
            else:
                w.open(2, "agreement", {"claimer": goal.claimer, "peer": goal.peer})
                for term in goal.terms:
                    w.open(3, "on")
                    w.term(4, term)
                    w.close(3, "on")
                w.close(2, "agreement")
        w.close(1, "goals")

    w.close(0, "protocol")
    return w.bytes()
