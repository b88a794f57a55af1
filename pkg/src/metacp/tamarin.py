"""Compilation of protocol specifications into Tamarin multiset-rewriting
theories, rendered as deterministic ``.spthy`` text.

The translation template: a PKI registration rule per asymmetric-key
role, an init rule per role binding a thread id and long-term material
into a state fact, and one rule per (role, step) pair threading state
facts St_<Role>_0, St_<Role>_1, ... Sending rules produce Out(payload)
and introduce the sender's fresh values at first use; receiving rules
consume In(pattern) with unknown variables left as pattern variables
(decompose delivery) or a single opaque variable opened by explicit
destructor applications (atomic delivery). Security goals become action
labels plus lemmas; an exists-trace executability lemma conjoins every
role's Finish label.

Output is byte-stable across runs: every iteration is over ordered data
or sorted by the canonical term order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .diagnostics import Diagnostic, error
from .protocol import (
    AgreementGoal,
    Delivery,
    KeyKind,
    MessageStep,
    ProtocolSpec,
    Role,
    SecrecyGoal,
)
from .terms import (
    Apply,
    Const,
    Sort,
    Term,
    TupleTerm,
    Var,
    canon,
    match,
    subterms,
    substitute,
    text,
    vars_of,
)
from .theories import (
    PK,
    SIGN,
    VERIFY,
    BundleName,
    Orientation,
    is_exp,
    normalize,
    split_exp_chain,
)

BUILTIN_NAMES = {
    BundleName.SYMMETRIC_ENCRYPTION: "symmetric-encryption",
    BundleName.ASYMMETRIC_ENCRYPTION: "asymmetric-encryption",
    BundleName.SIGNING: "signing",
    BundleName.HASHING: "hashing",
    BundleName.DIFFIE_HELLMAN: "diffie-hellman",
    # pairing maps onto native tuple syntax, no builtin line
}

RESERVED_WORDS = {
    "theory", "begin", "end", "rule", "lemma", "axiom", "restriction",
    "builtins", "functions", "equations", "let", "in", "all", "exists",
    "All", "Ex", "not", "node", "Fr", "In", "Out", "K", "KU", "KD",
    "fst", "snd", "pair", "true", "fresh", "pub",
}


class UnsupportedConstruct(Exception):
    """The document is valid but uses something this target cannot express."""

    def __init__(self, message: str):
        super().__init__(message)
        self.diagnostic: Diagnostic = error("TAM001", message)


class LemmaKind(Enum):
    EXISTS_TRACE = "exists-trace"
    ALL_TRACES = "all-traces"


@dataclass(frozen=True)
class Fact:
    name: str
    args: tuple[str, ...] = ()
    persistent: bool = False

    def __post_init__(self) -> None:
        if not self.name[:1].isupper():
            raise ValueError(f"fact name {self.name!r} must start uppercase")

    def render(self) -> str:
        bang = "!" if self.persistent else ""
        return f"{bang}{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class TamarinRule:
    name: str
    premises: tuple[Fact, ...]
    actions: tuple[Fact, ...]
    conclusions: tuple[Fact, ...]


@dataclass(frozen=True)
class Lemma:
    name: str
    kind: LemmaKind
    formula: str


@dataclass(frozen=True)
class TamarinTheory:
    name: str
    builtins: tuple[str, ...]
    function_decls: tuple[str, ...]
    equation_decls: tuple[str, ...]
    rules: tuple[TamarinRule, ...]
    lemmas: tuple[Lemma, ...]
    restrictions: tuple[tuple[str, str], ...] = ()
    nullary_symbols: frozenset[str] = frozenset()


# ---------------------------------------------------------------------------
# identifier handling
# ---------------------------------------------------------------------------


class _Names:
    """Deterministic identifier pool: spec names pass through unchanged when
    they are lexically fine for the target, reserved or colliding names get
    a numeric suffix, first declared wins."""

    def __init__(self, taken: set[str]):
        self.taken = set(taken)
        self.mapping: dict[str, str] = {}

    def map(self, name: str) -> str:
        if name in self.mapping:
            return self.mapping[name]
        candidate = name
        if name in RESERVED_WORDS:
            n = 1
            while f"{name}_{n}" in self.taken or f"{name}_{n}" in RESERVED_WORDS:
                n += 1
            candidate = f"{name}_{n}"
        self.mapping[name] = candidate
        self.taken.add(candidate)
        return candidate

    def invent(self, base: str) -> str:
        if base not in self.taken and base not in RESERVED_WORDS:
            self.taken.add(base)
            return base
        n = 1
        while f"{base}{n}" in self.taken or f"{base}{n}" in RESERVED_WORDS:
            n += 1
        self.taken.add(f"{base}{n}")
        return f"{base}{n}"


def _spec_identifiers(spec: ProtocolSpec) -> set[str]:
    names: set[str] = {r.name for r in spec.roles}
    names.update(sym.name for sym in spec.symbol_table.values())
    for _, term in spec.document_terms():
        for sub in subterms(term):
            if isinstance(sub, (Var, Const)):
                names.add(sub.name)
    return names


# ---------------------------------------------------------------------------
# the compiler
# ---------------------------------------------------------------------------


@dataclass
class _RoleCtx:
    role: Role
    state_args: list[str] = field(default_factory=list)
    recipes: dict[Term, str] = field(default_factory=dict)
    introduced_fresh: set[str] = field(default_factory=set)
    state_idx: int = 0

    def state_fact(self) -> Fact:
        return Fact(f"St_{self.role.name}_{self.state_idx}", tuple(self.state_args))


class _Compiler:
    def __init__(self, spec: ProtocolSpec):
        self.spec = spec
        self.names = _Names(_spec_identifiers(spec))
        self.rules: list[TamarinRule] = []
        self.role_ctx: dict[str, _RoleCtx] = {}
        self.need_eq_restriction = False
        self.pending_premises: list[Fact] = []
        self.asym_owner: dict[str, str] = {}
        for role in spec.roles:
            for key in role.long_term_keys:
                if key.kind is KeyKind.ASYMMETRIC_PRIVATE:
                    self.asym_owner[key.key_var.name] = role.name

    def norm(self, term: Term) -> Term:
        return normalize(term, self.spec.bundles)

    # -- term rendering ------------------------------------------------------

    def render(self, rc: _RoleCtx, term: Term) -> str:
        """Rendering of a term the role can produce at this point."""
        t = self.norm(term)
        got = self._try_render(rc, t)
        if got is None:
            raise UnsupportedConstruct(
                f"role {rc.role.name} has no way to produce {text(t)} in the generated rule"
            )
        return got

    def _try_render(self, rc: _RoleCtx, t: Term) -> str | None:
        if t in rc.recipes:
            return rc.recipes[t]
        if isinstance(t, Var):
            if t.sort is Sort.PUBLIC:
                return f"${self.names.map(t.name)}"
            if (
                t.sort is Sort.FRESH
                and t.name in rc.role.owned_fresh_names
                and t.name not in rc.introduced_fresh
            ):
                return self._introduce_fresh(rc, t)
            return None  # foreign fresh and message variables need a recipe
        if isinstance(t, Const):
            if t.sort is Sort.PUBLIC:
                return f"'{t.name}'"
            return self.names.map(t.name)  # private nullary function
        if isinstance(t, TupleTerm):
            items = [self._try_render(rc, i) for i in t.items]
            if any(i is None for i in items):
                return None
            return f"<{', '.join(items)}>"  # type: ignore[arg-type]
        assert isinstance(t, Apply)
        if is_exp(t) and BundleName.DIFFIE_HELLMAN in self.spec.bundles:
            return self._render_exp(rc, t)
        pk_owner = self._foreign_pk_owner(rc, t)
        if pk_owner is not None:
            return self._peer_pk(rc, t.args[0], pk_owner)  # type: ignore[arg-type]
        rendered = [self._try_render(rc, a) for a in t.args]
        if any(r is None for r in rendered):
            return None
        if not rendered:
            return self.names.map(t.symbol.name)
        return f"{self.names.map(t.symbol.name)}({', '.join(rendered)})"  # type: ignore[arg-type]

    def _foreign_pk_owner(self, rc: _RoleCtx, t: Term) -> str | None:
        if (
            isinstance(t, Apply)
            and t.symbol == PK
            and t.args
            and isinstance(t.args[0], Var)
        ):
            owner = self.asym_owner.get(t.args[0].name)
            if owner is not None and owner != rc.role.name:
                return owner
        return None

    def _introduce_fresh(self, rc: _RoleCtx, v: Var) -> str:
        """First use of one of the role's own fresh values: Fr premise here."""
        rendered = f"~{self.names.map(v.name)}"
        self.pending_premises.append(Fact("Fr", (rendered,)))
        rc.recipes[v] = rendered
        rc.state_args.append(rendered)
        rc.introduced_fresh.add(v.name)
        return rendered

    def _peer_pk(self, rc: _RoleCtx, key_var: Var, owner: str) -> str:
        """Another role's public key: an opaque variable bound by a !Pk
        premise on first use, then threaded through the state."""
        pk_term = self.norm(Apply(PK, (key_var,)))
        if pk_term in rc.recipes:
            return rc.recipes[pk_term]
        var = self.names.invent(f"pk{owner}")
        rc.recipes[pk_term] = var
        rc.state_args.append(var)
        self.pending_premises.append(
            Fact("Pk", (f"${self.names.map(owner)}", var), persistent=True)
        )
        return var

    def _render_exp(self, rc: _RoleCtx, t: Term) -> str | None:
        base, exponents = split_exp_chain(t)
        want = sorted(exponents, key=canon)
        best: tuple[str, list[Term]] | None = None
        for known, expr in sorted(rc.recipes.items(), key=lambda kv: canon(kv[0])):
            if not is_exp(known):
                continue
            k_base, k_exps = split_exp_chain(known)
            if k_base != base:
                continue
            remaining = list(want)
            usable = True
            for e in k_exps:
                if e in remaining:
                    remaining.remove(e)
                else:
                    usable = False
                    break
            if usable and (best is None or len(remaining) < len(best[1])):
                best = (expr, remaining)
        if best is not None:
            expr, remaining = best
        else:
            base_r = self._try_render(rc, base)
            if base_r is None:
                return None
            expr, remaining = base_r, want
        for e in remaining:
            e_r = self._try_render(rc, e)
            if e_r is None:
                return None
            expr = f"{expr}^{self._paren_exponent(e_r)}"
        return expr

    @staticmethod
    def _paren_exponent(rendered: str) -> str:
        return f"({rendered})" if "^" in rendered else rendered

    # -- receive patterns ------------------------------------------------------

    def pattern(self, rc: _RoleCtx, term: Term, new_vars: dict[Var, str]) -> str:
        """Pattern form of a payload: known subterms render through recipes
        (enforcing equality), unknown variables become pattern variables."""
        t = self.norm(term)
        known = self._try_render(rc, t)
        if known is not None:
            return known
        if isinstance(t, Var):
            if t in new_vars:
                return new_vars[t]
            if t.sort is Sort.PUBLIC:
                rendered = f"${self.names.map(t.name)}"
            elif t.sort is Sort.FRESH and t.name in rc.role.owned_fresh_names:
                rendered = f"~{self.names.map(t.name)}"
            else:
                rendered = self.names.map(t.name)
            new_vars[t] = rendered
            return rendered
        if isinstance(t, TupleTerm):
            return f"<{', '.join(self.pattern(rc, i, new_vars) for i in t.items)}>"
        assert isinstance(t, Apply)  # consts always render above
        if is_exp(t) and BundleName.DIFFIE_HELLMAN in self.spec.bundles:
            base, exponents = split_exp_chain(t)
            expr = self.pattern(rc, base, new_vars)
            for e in exponents:
                expr = f"{expr}^{self._paren_exponent(self.pattern(rc, e, new_vars))}"
            return expr
        if not t.args:
            return self.names.map(t.symbol.name)
        inner = ", ".join(self.pattern(rc, a, new_vars) for a in t.args)
        return f"{self.names.map(t.symbol.name)}({inner})"

    # -- extraction recipes after an atomic receive -----------------------------

    def extend_recipes_by_extraction(self, rc: _RoleCtx) -> None:
        changed = True
        while changed:
            changed = False
            for known, expr in sorted(rc.recipes.items(), key=lambda kv: canon(kv[0])):
                if isinstance(known, TupleTerm):
                    for i, item in enumerate(known.items):
                        if item in rc.recipes:
                            continue
                        rc.recipes[item] = _projection(expr, i, len(known.items))
                        changed = True
                elif isinstance(known, Apply):
                    if self._extract_with_destructors(rc, known, expr):
                        changed = True

    def _extract_with_destructors(self, rc: _RoleCtx, known: Term, expr: str) -> bool:
        changed = False
        for eq in self.spec.destructors:
            assert isinstance(eq.lhs, Apply)
            for i, pat in enumerate(eq.lhs.args):
                if not isinstance(pat, (Apply, TupleTerm)):
                    continue
                sigma = match(pat, known)
                if sigma is None:
                    continue
                if not vars_of(eq.rhs) <= sigma.keys():
                    continue
                result = self.norm(substitute(eq.rhs, sigma))
                if result in rc.recipes:
                    continue
                pieces: list[str] = []
                ok = True
                for j, arg in enumerate(eq.lhs.args):
                    if j == i:
                        pieces.append(expr)
                        continue
                    if not vars_of(arg) <= sigma.keys():
                        ok = False
                        break
                    rendered = self._try_render(rc, self.norm(substitute(arg, sigma)))
                    if rendered is None:
                        ok = False
                        break
                    pieces.append(rendered)
                if not ok:
                    continue
                rc.recipes[result] = (
                    f"{self.names.map(eq.lhs.symbol.name)}({', '.join(pieces)})"
                )
                changed = True
        return changed

    def signature_check(self, rc: _RoleCtx, payload: Term, opaque: str) -> Fact | None:
        """Equality action for an atomically received signature the receiver
        can verify; pairs with the Eq restriction."""
        if BundleName.SIGNING not in self.spec.bundles:
            return None
        if not (isinstance(payload, Apply) and payload.symbol == SIGN):
            return None
        message, signer = payload.args
        message_r = self._try_render(rc, self.norm(message))
        if message_r is None:
            return None
        pk_r = self._try_render(rc, self.norm(Apply(PK, (signer,))))
        if pk_r is None:
            return None
        self.need_eq_restriction = True
        return Fact("Eq", (f"verify({opaque}, {message_r}, {pk_r})", "true"))


def _projection(expr: str, index: int, width: int) -> str:
    # native tuples are right-nested pairs: <a, b, c> == <a, <b, c>>
    out = expr
    for _ in range(index):
        out = f"snd({out})"
    if index < width - 1:
        out = f"fst({out})"
    return out


def _secrecy_goals(spec: ProtocolSpec) -> list[SecrecyGoal]:
    return [g for g in spec.goals if isinstance(g, SecrecyGoal)]


def _agreement_goals(spec: ProtocolSpec) -> list[AgreementGoal]:
    return [g for g in spec.goals if isinstance(g, AgreementGoal)]


def _participations(spec: ProtocolSpec) -> dict[str, list[tuple[MessageStep, str]]]:
    parts: dict[str, list[tuple[MessageStep, str]]] = {r.name: [] for r in spec.roles}
    for step in spec.exchange:
        parts[step.sender].append((step, "send"))
        parts[step.receiver].append((step, "recv"))
    return parts


def _slug(term: Term) -> str:
    return "_".join(re.findall(r"[A-Za-z0-9]+", text(term)))


def gen_lemmas(spec: ProtocolSpec) -> tuple[Lemma, ...]:
    """Lemmas for a theory: one executability lemma conjoining every role's
    Finish label, one secrecy lemma per secrecy goal, one injective
    agreement lemma per agreement goal. Empty when the exchange is empty."""
    if not spec.exchange:
        return ()
    lemmas: list[Lemma] = []
    quantifiers = " ".join(f"#i{n}" for n in range(1, len(spec.roles) + 1))
    finishes = " & ".join(
        f"Finish_{role.name}() @ #i{n}" for n, role in enumerate(spec.roles, start=1)
    )
    lemmas.append(Lemma("executable", LemmaKind.EXISTS_TRACE, f"Ex {quantifiers}. {finishes}"))

    seen: set[str] = {"executable"}

    def unique(name: str) -> str:
        if name not in seen:
            seen.add(name)
            return name
        n = 2
        while f"{name}_{n}" in seen:
            n += 1
        seen.add(f"{name}_{n}")
        return f"{name}_{n}"

    for n, goal in enumerate(_secrecy_goals(spec), start=1):
        name = unique(f"secrecy_{_slug(normalize(goal.term, spec.bundles))}_{goal.viewpoint}")
        lemmas.append(
            Lemma(
                name,
                LemmaKind.ALL_TRACES,
                f"All x #i. Secret_{n}(x) @ #i ==> not (Ex #j. K(x) @ #j)",
            )
        )
    for goal in _agreement_goals(spec):
        commit = f"Commit_{goal.claimer}_{goal.peer}"
        running = f"Running_{goal.peer}_{goal.claimer}"
        name = unique(f"injective_agreement_{goal.claimer}_{goal.peer}")
        formula = (
            f"All t #i.\n"
            f"     {commit}(t) @ #i\n"
            f"     ==> (Ex #j. {running}(t) @ #j & #j < #i\n"
            f"          & not (Ex #i2. {commit}(t) @ #i2 & not (#i2 = #i)))"
        )
        lemmas.append(Lemma(name, LemmaKind.ALL_TRACES, formula))
    return tuple(lemmas)


def compile_tamarin(spec: ProtocolSpec) -> TamarinTheory:
    """Compile a schema-valid, executable spec into a theory.

    Raises UnsupportedConstruct for valid documents this target cannot
    express (unoriented custom equations, ungrounded initial knowledge);
    the plugin wrapper turns that into a diagnostic.
    """
    comp = _Compiler(spec)
    names = comp.names

    for eq in spec.equations:
        if eq.orientation is Orientation.UNORIENTED:
            raise UnsupportedConstruct(
                f"unoriented equation on {text(eq.lhs)} cannot be expressed in the "
                f"target; only destructor equations and built-in theories are supported"
            )

    # private nullary functions stand in for message-sorted constants
    msg_consts: list[str] = []
    for _, term in spec.document_terms():
        for sub in subterms(term):
            if isinstance(sub, Const) and sub.sort is Sort.MESSAGE and sub.name not in msg_consts:
                msg_consts.append(sub.name)

    function_decls: list[str] = []
    nullary: set[str] = set()
    for sym in spec.signature:
        decl = f"{names.map(sym.name)}/{sym.arity}"
        if not sym.is_public:
            decl += " [private]"
        function_decls.append(decl)
        if sym.arity == 0:
            nullary.add(names.map(sym.name))
    for const_name in msg_consts:
        function_decls.append(f"{names.map(const_name)}/0 [private]")
        nullary.add(names.map(const_name))
    if BundleName.SIGNING in spec.bundles:
        nullary.add("true")

    dh_active = BundleName.DIFFIE_HELLMAN in spec.bundles
    equation_decls = tuple(
        f"{_render_schematic(eq.lhs, names, dh_active)} = "
        f"{_render_schematic(eq.rhs, names, dh_active)}"
        for eq in spec.equations
    )
    builtins = tuple(sorted(BUILTIN_NAMES[b] for b in spec.bundles if b in BUILTIN_NAMES))

    # -- label placement -------------------------------------------------------
    parts = _participations(spec)
    last_part: dict[str, tuple[MessageStep, str] | None] = {
        r.name: (parts[r.name][-1] if parts[r.name] else None) for r in spec.roles
    }
    labels: dict[tuple[str, int, str], list] = {}

    def schedule(role: str, spot: tuple[MessageStep, str] | None, builder) -> None:
        key = (role, spot[0].index, spot[1]) if spot else (role, 0, "init")
        labels.setdefault(key, []).append(builder)

    for n, goal in enumerate(_secrecy_goals(spec), start=1):
        schedule(
            goal.viewpoint,
            last_part[goal.viewpoint],
            lambda rc, n=n, g=goal: Fact(f"Secret_{n}", (comp.render(rc, g.term),)),
        )
    for goal in _agreement_goals(spec):
        commit_spot = last_part[goal.claimer]
        commit_index = commit_spot[0].index if commit_spot else len(spec.exchange)
        running_spot = None
        for step, kind in parts[goal.peer]:
            if kind == "send" and step.index <= commit_index:
                running_spot = (step, kind)
        if running_spot is None:
            for step, kind in parts[goal.peer]:
                if step.index <= commit_index:
                    running_spot = (step, kind)
        vector = goal.terms[0] if len(goal.terms) == 1 else TupleTerm(tuple(goal.terms))
        schedule(
            goal.peer,
            running_spot,
            lambda rc, g=goal, v=vector: Fact(
                f"Running_{g.peer}_{g.claimer}", (comp.render(rc, v),)
            ),
        )
        schedule(
            goal.claimer,
            commit_spot,
            lambda rc, g=goal, v=vector: Fact(
                f"Commit_{g.claimer}_{g.peer}", (comp.render(rc, v),)
            ),
        )
    for role in spec.roles:
        schedule(role.name, last_part[role.name], lambda rc, r=role: Fact(f"Finish_{r.name}"))

    def actions_for(rc: _RoleCtx, key: tuple[str, int, str]) -> tuple[Fact, ...]:
        return tuple(builder(rc) for builder in labels.get(key, []))

    # -- PKI registration rules ------------------------------------------------
    for role in spec.roles:
        asym = [k for k in role.long_term_keys if k.kind is KeyKind.ASYMMETRIC_PRIVATE]
        if not asym:
            continue
        premises = [Fact("Fr", (f"~{names.map(k.key_var.name)}",)) for k in asym]
        conclusions: list[Fact] = []
        identity = f"${names.map(role.name)}"
        for k in asym:
            kv = f"~{names.map(k.key_var.name)}"
            conclusions.append(Fact("Ltk", (identity, kv), persistent=True))
            conclusions.append(Fact("Pk", (identity, f"pk({kv})"), persistent=True))
            conclusions.append(Fact("Out", (f"pk({kv})",)))
        comp.rules.append(
            TamarinRule(f"Register_pk_{role.name}", tuple(premises), (), tuple(conclusions))
        )

    # -- init rules --------------------------------------------------------------
    for role in spec.roles:
        comp.pending_premises = []
        rc = _RoleCtx(role)
        comp.role_ctx[role.name] = rc
        identity = f"${names.map(role.name)}"
        rc.state_args.append(identity)
        rc.recipes[Var(role.name, Sort.PUBLIC)] = identity
        tid = f"~{names.invent(f'tid_{role.name}')}"
        rc.state_args.append(tid)
        premises = [Fact("Fr", (tid,))]
        for key in role.long_term_keys:
            kv = f"~{names.map(key.key_var.name)}"
            if key.kind is KeyKind.ASYMMETRIC_PRIVATE:
                premises.append(Fact("Ltk", (identity, kv), persistent=True))
                rc.recipes[comp.norm(Apply(PK, (key.key_var,)))] = f"pk({kv})"
            else:
                premises.append(Fact("Fr", (kv,)))
            rc.state_args.append(kv)
            rc.recipes[key.key_var] = kv
            rc.introduced_fresh.add(key.key_var.name)
        for known in role.initial_knowledge:
            for v in sorted(vars_of(known), key=canon):
                if v.sort is Sort.MESSAGE:
                    raise UnsupportedConstruct(
                        f"initial knowledge of role {role.name} uses message variable "
                        f"{v.name!r}, which has no origin in the generated theory"
                    )
                if v.sort is Sort.PUBLIC and v not in rc.recipes:
                    rendered = f"${names.map(v.name)}"
                    rc.recipes[v] = rendered
                    rc.state_args.append(rendered)
            if comp._try_render(rc, comp.norm(known)) is None:
                raise UnsupportedConstruct(
                    f"initial knowledge {text(known)} of role {role.name} is not "
                    f"expressible in the generated theory"
                )
        actions = actions_for(rc, (role.name, 0, "init"))
        premises.extend(comp.pending_premises)
        comp.rules.append(
            TamarinRule(f"Init_{role.name}", tuple(premises), actions, (rc.state_fact(),))
        )

    # -- step rules -----------------------------------------------------------------
    for step in spec.exchange:
        # sender side: fresh values are introduced at first rendered use
        comp.pending_premises = []
        rc = comp.role_ctx[step.sender]
        prev_state = rc.state_fact()
        payload_out = comp.render(rc, step.payload)
        actions = actions_for(rc, (step.sender, step.index, "send"))
        rc.state_idx += 1
        comp.rules.append(
            TamarinRule(
                f"{step.sender}_{step.index}_send",
                (prev_state, *comp.pending_premises),
                actions,
                (rc.state_fact(), Fact("Out", (payload_out,))),
            )
        )

        # receiver side
        comp.pending_premises = []
        rc = comp.role_ctx[step.receiver]
        prev_state = rc.state_fact()
        payload_n = comp.norm(step.payload)
        extra_actions: list[Fact] = []
        if step.delivery is Delivery.DECOMPOSE:
            new_vars: dict[Var, str] = {}
            pattern = comp.pattern(rc, step.payload, new_vars)
            for v, rendered in sorted(new_vars.items(), key=lambda kv: canon(kv[0])):
                rc.recipes[v] = rendered
                rc.state_args.append(rendered)
                if v.sort is Sort.FRESH and v.name in rc.role.owned_fresh_names:
                    rc.introduced_fresh.add(v.name)
        else:
            pattern = names.invent(f"blob{step.index}")
            rc.recipes.setdefault(payload_n, pattern)
            rc.state_args.append(pattern)
            comp.extend_recipes_by_extraction(rc)
            check = comp.signature_check(rc, payload_n, pattern)
            if check is not None:
                extra_actions.append(check)
        actions = list(actions_for(rc, (step.receiver, step.index, "recv")))
        rc.state_idx += 1
        comp.rules.append(
            TamarinRule(
                f"{step.receiver}_{step.index}_recv",
                (prev_state, Fact("In", (pattern,)), *comp.pending_premises),
                tuple(extra_actions + actions),
                (rc.state_fact(),),
            )
        )

    restrictions: tuple[tuple[str, str], ...] = ()
    if comp.need_eq_restriction:
        restrictions = (("Eq", "All x y #i. Eq(x, y) @ #i ==> x = y"),)

    theory = TamarinTheory(
        name=names.map(spec.name),
        builtins=builtins,
        function_decls=tuple(function_decls),
        equation_decls=equation_decls,
        rules=tuple(comp.rules),
        lemmas=gen_lemmas(spec),
        restrictions=restrictions,
        nullary_symbols=frozenset(nullary),
    )
    issues = well_formedness_issues(theory)
    if issues:
        raise UnsupportedConstruct(f"generated theory is not well-formed: {issues[0]}")
    return theory


def _render_schematic(term: Term, names: _Names, dh_active: bool = False) -> str:
    """Equation sides: all variables are schematic, rendered bare."""
    if isinstance(term, Var):
        return names.map(term.name)
    if isinstance(term, Const):
        return f"'{term.name}'" if term.sort is Sort.PUBLIC else names.map(term.name)
    if isinstance(term, TupleTerm):
        return f"<{', '.join(_render_schematic(i, names, dh_active) for i in term.items)}>"
    assert isinstance(term, Apply)
    if dh_active and is_exp(term):
        lhs, rhs = term.args
        rhs_r = _render_schematic(rhs, names, dh_active)
        if "^" in rhs_r:
            rhs_r = f"({rhs_r})"
        return f"{_render_schematic(lhs, names, dh_active)}^{rhs_r}"
    if not term.args:
        return names.map(term.symbol.name)
    inner = ", ".join(_render_schematic(a, names, dh_active) for a in term.args)
    return f"{names.map(term.symbol.name)}({inner})"


# ---------------------------------------------------------------------------
# rendering and well-formedness scanning
# ---------------------------------------------------------------------------


def _fact_block(facts: tuple[Fact, ...], opener: str, closer: str) -> list[str]:
    if not facts:
        return [f"  {opener}{closer}"]
    if len(facts) == 1:
        return [f"  {opener} {facts[0].render()} {closer}"]
    lines = [f"  {opener} {facts[0].render()},"]
    for fact in facts[1:-1]:
        lines.append(f"    {fact.render()},")
    lines.append(f"    {facts[-1].render()}")
    lines.append(f"  {closer}")
    return lines


def render_rule(rule: TamarinRule) -> list[str]:
    lines = [f"rule {rule.name}:"]
    lines.extend(_fact_block(rule.premises, "[", "]"))
    if rule.actions:
        if len(rule.actions) == 1:
            lines.append(f"  --[ {rule.actions[0].render()} ]->")
        else:
            lines.append(f"  --[ {rule.actions[0].render()},")
            for fact in rule.actions[1:-1]:
                lines.append(f"      {fact.render()},")
            lines.append(f"      {rule.actions[-1].render()}")
            lines.append("  ]->")
    else:
        lines.append("  -->")
    lines.extend(_fact_block(rule.conclusions, "[", "]"))
    return lines


def render_theory(theory: TamarinTheory) -> str:
    """Deterministic .spthy text; LF endings, byte-stable across runs."""
    out: list[str] = [f"theory {theory.name}", "begin", ""]
    if theory.builtins:
        out.append(f"builtins: {', '.join(theory.builtins)}")
        out.append("")
    if theory.function_decls:
        out.append(f"functions: {', '.join(theory.function_decls)}")
        out.append("")
    if theory.equation_decls:
        out.append(f"equations: {', '.join(theory.equation_decls)}")
        out.append("")
    for rule in theory.rules:
        out.extend(render_rule(rule))
        out.append("")
    for name, formula in theory.restrictions:
        out.append(f"restriction {name}:")
        out.append(f'  "{formula}"')
        out.append("")
    for lemma in theory.lemmas:
        out.append(f"lemma {lemma.name}:")
        out.append(f"  {lemma.kind.value}")
        out.append(f'  "{lemma.formula}"')
        out.append("")
    out.append("end")
    return "\n".join(out) + "\n"


_QUOTED = re.compile(r"'[^']*'")
_TOKEN = re.compile(r"([~$]?)([A-Za-z][A-Za-z0-9_]*)(\s*\()?")


def fact_variables(fact: Fact, nullary: frozenset[str]) -> set[str]:
    """Variable tokens of a rendered fact: ~fresh and bare message variables.

    Public ($) variables are exempt from binding requirements, mirroring
    the target language; function applications, quoted constants and
    declared nullary symbols are not variables.
    """
    found: set[str] = set()
    for arg in fact.args:
        cleaned = _QUOTED.sub("", arg)
        for marker, name, paren in _TOKEN.findall(cleaned):
            if paren or marker == "$":
                continue
            if marker == "~":
                found.add(f"~{name}")
            elif name not in nullary:
                found.add(name)
    return found


def well_formedness_issues(theory: TamarinTheory) -> list[str]:
    """Unbound conclusion/action variables, per rule. Empty means the
    generator upheld the target's well-formedness condition."""
    issues: list[str] = []
    names_seen: set[str] = set()
    for rule in theory.rules:
        if rule.name in names_seen:
            issues.append(f"rule name {rule.name} is not unique")
        names_seen.add(rule.name)
        bound: set[str] = set()
        for fact in rule.premises:
            bound |= fact_variables(fact, theory.nullary_symbols)
        for where, facts in (("action", rule.actions), ("conclusion", rule.conclusions)):
            for fact in facts:
                unbound = fact_variables(fact, theory.nullary_symbols) - bound
                if unbound:
                    issues.append(
                        f"rule {rule.name}: {where} {fact.render()} uses unbound "
                        f"{', '.join(sorted(unbound))}"
                    )
    return issues
