"""Executability analysis: symbolic knowledge flow over the exchange.

The protocol database itself is nearly semanticless; this module gives it
an operational reading. Each role's knowledge is a set of normalized
terms, closed in two phases: saturation (tuple projection plus destructor
equations whose side arguments the owner can compose) and top-down
composition with public symbols. A protocol is executable when every
sender can compose what it sends, given what it knew beforehand.

This is a well-formedness analysis, not an attack search: whether a goal
actually holds against an adversary is decided by the verification
backend, not here.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .diagnostics import Diagnostic, error, warning
from .protocol import (
    AgreementGoal,
    Delivery,
    KeyKind,
    ProtocolSpec,
    SecrecyGoal,
)
from .terms import (
    Apply,
    Const,
    Term,
    TupleTerm,
    Var,
    canon,
    children,
    match,
    substitute,
    text,
    vars_of,
)
from .theories import (
    PK,
    BundleName,
    Equation,
    Orientation,
    is_exp,
    normalize,
    split_exp_chain,
)

_PKI_BUNDLES = {BundleName.ASYMMETRIC_ENCRYPTION, BundleName.SIGNING}


@dataclass(frozen=True)
class KnowledgeState:
    role: str
    known: frozenset[Term]
    at_step: int

    def sorted_terms(self) -> list[Term]:
        return sorted(self.known, key=canon)


@dataclass(frozen=True)
class Violation:
    step_index: int
    role: str
    missing_term: Term
    explanation: str
    code: str = "EXE001"

    def to_dict(self) -> dict:
        return {
            "stepIndex": self.step_index,
            "role": self.role,
            "missingTerm": text(self.missing_term),
            "explanation": self.explanation,
            "code": self.code,
        }


@dataclass(frozen=True)
class ExecutabilityReport:
    ok: bool
    violations: tuple[Violation, ...]
    final_knowledge: dict[str, KnowledgeState]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [v.to_dict() for v in self.violations],
            "finalKnowledge": {
                role: [text(t) for t in state.sorted_terms()]
                for role, state in sorted(self.final_knowledge.items())
            },
        }


class _Context:
    """Signature, destructors and bundles of one spec, prepared for matching."""

    def __init__(self, spec: ProtocolSpec):
        self.spec = spec
        self.bundles = spec.bundles
        self.dh = BundleName.DIFFIE_HELLMAN in spec.bundles
        self.destructor_plans = [_plan(eq) for eq in spec.destructors]

    def normalize(self, term: Term) -> Term:
        return normalize(term, self.bundles)


def _plan(eq: Equation) -> tuple[Equation, tuple[int, ...]]:
    assert isinstance(eq.lhs, Apply)
    structured = tuple(
        i for i, arg in enumerate(eq.lhs.args) if isinstance(arg, (Apply, TupleTerm))
    )
    return eq, structured


def _compose(known: frozenset[Term], goal: Term, ctx: _Context) -> bool:
    """Top-down composition check; ``known`` and ``goal`` must be normalized."""
    if goal in known:
        return True
    if isinstance(goal, TupleTerm):
        return all(_compose(known, i, ctx) for i in goal.items)
    if isinstance(goal, Apply):
        if ctx.dh and is_exp(goal):
            return _compose_exp(known, goal, ctx)
        if goal.symbol.is_public:
            return all(_compose(known, a, ctx) for a in goal.args)
    return False


def _compose_exp(known: frozenset[Term], goal: Term, ctx: _Context) -> bool:
    # An exponentiation chain can be finished from any known chain over the
    # same base whose exponent multiset is included in the goal's, or built
    # from scratch when the base itself is composable.
    base, exponents = split_exp_chain(goal)
    want = Counter(canon(e) for e in exponents)
    by_canon = {canon(e): e for e in exponents}

    def rest_composable(missing: Counter) -> bool:
        return all(
            _compose(known, by_canon[c], ctx) for c in sorted(missing.elements())
        )

    if _compose(known, base, ctx) and rest_composable(want):
        return True
    for k in known:
        if not is_exp(k):
            continue
        k_base, k_exponents = split_exp_chain(k)
        if k_base != base:
            continue
        have = Counter(canon(e) for e in k_exponents)
        if not have - want and rest_composable(want - have):
            return True
    return False


def saturate(known: Iterable[Term], spec: ProtocolSpec) -> frozenset[Term]:
    """Least superset closed under tuple projection and destructor application.

    Terminates: every added term is a subterm of a known term or a
    constant from an equation's right side.
    """
    ctx = _Context(spec)
    return _saturate(frozenset(ctx.normalize(t) for t in known), ctx)


def _saturate(known: frozenset[Term], ctx: _Context) -> frozenset[Term]:
    current = set(known)
    changed = True
    while changed:
        changed = False
        snapshot = frozenset(current)
        for term in sorted(snapshot, key=canon):
            if isinstance(term, TupleTerm):
                for item in term.items:
                    if item not in current:
                        current.add(item)
                        changed = True
        for eq, structured in ctx.destructor_plans:
            assert isinstance(eq.lhs, Apply)
            if structured:
                for i in structured:
                    pattern = eq.lhs.args[i]
                    for term in sorted(snapshot, key=canon):
                        sigma = match(pattern, term)
                        if sigma is None:
                            continue
                        if _fire(eq, i, sigma, frozenset(current), ctx, current):
                            changed = True
            else:
                for term in sorted(snapshot, key=canon):
                    sigma = match(eq.lhs, term)
                    if sigma is not None and _fire(eq, None, sigma, frozenset(current), ctx, current):
                        changed = True
    return frozenset(current)


def _fire(
    eq: Equation,
    principal: int | None,
    sigma: dict[Var, Term],
    known: frozenset[Term],
    ctx: _Context,
    out: set[Term],
) -> bool:
    assert isinstance(eq.lhs, Apply)
    for j, arg in enumerate(eq.lhs.args):
        if j == principal:
            continue
        if not vars_of(arg) <= sigma.keys():
            return False  # side argument not determined by the principal match
        if not _compose(known, ctx.normalize(substitute(arg, sigma)), ctx):
            return False
    if not vars_of(eq.rhs) <= sigma.keys():
        return False
    result = ctx.normalize(substitute(eq.rhs, sigma))
    if result not in out:
        out.add(result)
        return True
    return False


def derivable(known: Iterable[Term], goal: Term, spec: ProtocolSpec) -> bool:
    """True when the goal can be composed from a saturated knowledge set."""
    ctx = _Context(spec)
    base = frozenset(ctx.normalize(t) for t in known)
    return _compose(_saturate(base, ctx), ctx.normalize(goal), ctx)


# ---------------------------------------------------------------------------
# executability
# ---------------------------------------------------------------------------


def _explain_missing(known: frozenset[Term], term: Term, ctx: _Context) -> Term:
    """Pick the reported subterm for a violation.

    Pre-order, first failing minimal subterm wins, with one refinement:
    a public-key application over an underivable key is reported whole,
    because the actionable gap is the public key, never the private one.
    """
    if isinstance(term, (Var, Const)):
        return term
    if isinstance(term, Apply) and term.symbol == PK:
        return term
    for child in children(term):
        if not _compose(known, ctx.normalize(child), ctx):
            return _explain_missing(known, ctx.normalize(child), ctx)
    return term


def _atomic_block(known: frozenset[Term], payload: Term, ctx: _Context) -> Term | None:
    """Why an atomic receive cannot be taken apart, or None when it can.

    Atomic delivery promises the receiver will open the message with
    destructors. When the payload's outermost layer matches a destructor
    but no instance can fire (a side argument such as the decryption key
    is underivable), the receive is undecomposable and the first missing
    side argument is reported. Payloads with no matching destructor at
    all (hashes, exponentiations, plain values) are meant to be used
    opaquely and pass.
    """
    if not isinstance(payload, Apply):
        return None
    for eq, structured in ctx.destructor_plans:
        assert isinstance(eq.lhs, Apply)
        for i in structured:
            sigma = match(eq.lhs.args[i], payload)
            if sigma is None:
                continue
            missing: Term | None = None
            for j, arg in enumerate(eq.lhs.args):
                if j == i:
                    continue
                if not vars_of(arg) <= sigma.keys():
                    missing = None  # side argument not determined; not decidable here
                    break
                instance = ctx.normalize(substitute(arg, sigma))
                if not _compose(known, instance, ctx):
                    missing = instance
                    break
            if missing is not None:
                return missing
            return None  # a destructor instance fires (or is undecidable): not blocked
    return None


def knowledge_trace(
    spec: ProtocolSpec,
) -> tuple[dict[str, list[KnowledgeState]], list[Violation]]:
    """Simulate the exchange in index order; the full per-step history.

    Senders must be able to compose each payload from their current
    knowledge; failures are recorded and the simulation continues, so one
    run reports every violation. Receivers absorb the payload and
    re-saturate; an atomic delivery additionally requires the receiver to
    be able to open the outermost layer (see _atomic_block). Knowledge
    only ever grows: states[role][i] describes the role after message i,
    index 0 being the pre-exchange state.
    """
    ctx = _Context(spec)
    pki = bool(_PKI_BUNDLES & spec.bundles)

    knowledge: dict[str, frozenset[Term]] = {}
    states: dict[str, list[KnowledgeState]] = {}
    for role in spec.roles:
        base: list[Term] = []
        base.extend(ctx.normalize(t) for t in role.initial_knowledge)
        base.extend(role.fresh_values)
        base.extend(key.key_var for key in role.long_term_keys)
        base.extend(spec.public_constants)
        if pki:
            for other in spec.roles:
                for key in other.long_term_keys:
                    if key.kind is KeyKind.ASYMMETRIC_PRIVATE:
                        base.append(Apply(PK, (key.key_var,)))
        knowledge[role.name] = _saturate(frozenset(ctx.normalize(t) for t in base), ctx)
        states[role.name] = [KnowledgeState(role.name, knowledge[role.name], 0)]

    violations: list[Violation] = []
    for step in spec.exchange:
        payload = ctx.normalize(step.payload)
        sender_known = knowledge[step.sender]
        if not _compose(sender_known, payload, ctx):
            missing = _explain_missing(sender_known, payload, ctx)
            violations.append(
                Violation(
                    step.index,
                    step.sender,
                    missing,
                    f"role {step.sender} cannot derive {text(missing)} "
                    f"needed to send message {step.index}",
                )
            )
        knowledge[step.receiver] = _saturate(knowledge[step.receiver] | {payload}, ctx)
        if step.delivery is Delivery.ATOMIC:
            blocked = _atomic_block(knowledge[step.receiver], payload, ctx)
            if blocked is not None:
                violations.append(
                    Violation(
                        step.index,
                        step.receiver,
                        blocked,
                        f"role {step.receiver} receives message {step.index} atomically "
                        f"but cannot open it: {text(blocked)} is not derivable",
                        code="EXE002",
                    )
                )
        for role in spec.roles:
            states[role.name].append(
                KnowledgeState(role.name, knowledge[role.name], step.index)
            )

    return states, violations


def check_executability(spec: ProtocolSpec) -> ExecutabilityReport:
    """Executability report: violations plus each role's final knowledge."""
    states, violations = knowledge_trace(spec)
    final = {role.name: states[role.name][-1] for role in spec.roles}
    return ExecutabilityReport(
        ok=not violations, violations=tuple(violations), final_knowledge=final
    )


def check_goals(spec: ProtocolSpec, report: ExecutabilityReport) -> list[Diagnostic]:
    """Well-formedness of goals: their terms must be known to the roles
    that state them by the end of the run. Not a security proof."""
    if not report.ok:
        raise ValueError("goal checks require an executable protocol")
    ctx = _Context(spec)
    diags: list[Diagnostic] = []
    for goal in spec.goals:
        if isinstance(goal, SecrecyGoal):
            holders = [(goal.viewpoint, goal.term)]
        else:
            holders = [(r, t) for t in goal.terms for r in (goal.claimer, goal.peer)]
        for role_name, term in holders:
            known = report.final_knowledge[role_name].known
            if not _compose(known, ctx.normalize(term), ctx):
                diags.append(
                    error(
                        "GOAL001",
                        f"goal term {text(term)} is not known to role {role_name} "
                        f"at the end of the exchange",
                    )
                )
    return diags


def violations_to_diagnostics(report: ExecutabilityReport) -> list[Diagnostic]:
    return [
        error(v.code, v.explanation, step_index=v.step_index) for v in report.violations
    ]


def analysis_warnings(spec: ProtocolSpec) -> list[Diagnostic]:
    """Non-fatal findings: user equations the analysis will not interpret."""
    out: list[Diagnostic] = []
    for eq in spec.equations:
        if eq.orientation is Orientation.UNORIENTED:
            out.append(
                warning(
                    "PSVW01",
                    f"unoriented equation on {text(eq.lhs)} is ignored by the "
                    f"executability analysis",
                )
            )
    return out
