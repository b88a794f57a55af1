"""The in-memory protocol database: signature, roles, exchange, goals.

A ProtocolSpec is deliberately light on semantics; it records what the
designer wrote and enforces only the structural invariants that every
consumer relies on (declared references, sort consistency, unique fresh
ownership, contiguous step indices). Construction fails loudly: no
partially-valid document is ever observable.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator

from .terms import (
    Apply,
    Const,
    FunctionSymbol,
    ModelError,
    Sort,
    Term,
    Var,
    check_identifier,
    subterms,
    vars_of,
)
from .theories import (
    BundleName,
    Equation,
    Orientation,
    bundle_constants,
    bundle_equations,
    bundle_symbols,
    normalize,
)


class KeyKind(Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC_PRIVATE = "asymmetric"


class Delivery(Enum):
    DECOMPOSE = "decompose"
    ATOMIC = "atomic"


@dataclass(frozen=True)
class LongTermKey:
    key_var: Var
    kind: KeyKind

    def __post_init__(self) -> None:
        if self.key_var.sort is not Sort.FRESH:
            raise ModelError(f"long-term key {self.key_var.name!r} must be fresh-sorted")


@dataclass(frozen=True)
class Role:
    name: str
    initial_knowledge: tuple[Term, ...] = ()
    fresh_values: tuple[Var, ...] = ()
    long_term_keys: tuple[LongTermKey, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.name, "role name")
        object.__setattr__(self, "initial_knowledge", tuple(self.initial_knowledge))
        object.__setattr__(self, "fresh_values", tuple(self.fresh_values))
        object.__setattr__(self, "long_term_keys", tuple(self.long_term_keys))
        for v in self.fresh_values:
            if v.sort is not Sort.FRESH:
                raise ModelError(f"fresh value {v.name!r} of role {self.name} must be fresh-sorted")
        owned = [v.name for v in self.fresh_values] + [k.key_var.name for k in self.long_term_keys]
        if len(owned) != len(set(owned)):
            raise ModelError(f"role {self.name} declares a fresh value or key twice")
        known_vars = {v.name for t in self.initial_knowledge for v in vars_of(t)}
        clash = known_vars & set(owned)
        if clash:
            raise ModelError(
                f"role {self.name} lists its own fresh value {sorted(clash)[0]!r} as initial knowledge"
            )

    @property
    def owned_fresh_names(self) -> frozenset[str]:
        return frozenset(
            [v.name for v in self.fresh_values] + [k.key_var.name for k in self.long_term_keys]
        )


@dataclass(frozen=True)
class MessageStep:
    index: int
    sender: str
    receiver: str
    payload: Term
    delivery: Delivery = Delivery.DECOMPOSE

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ModelError("message indices are 1-based")
        if self.sender == self.receiver:
            raise ModelError(f"message {self.index} has identical sender and receiver")


@dataclass(frozen=True)
class SecrecyGoal:
    term: Term
    viewpoint: str


@dataclass(frozen=True)
class AgreementGoal:
    claimer: str
    peer: str
    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ModelError("agreement goals need at least one term")
        if self.claimer == self.peer:
            raise ModelError("agreement claimer and peer must differ")


SecurityGoal = SecrecyGoal | AgreementGoal


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    bundles: frozenset[BundleName] = frozenset()
    signature: tuple[FunctionSymbol, ...] = ()
    equations: tuple[Equation, ...] = ()
    roles: tuple[Role, ...] = ()
    exchange: tuple[MessageStep, ...] = ()
    goals: tuple[SecurityGoal, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundles", frozenset(self.bundles))
        object.__setattr__(self, "signature", tuple(self.signature))
        object.__setattr__(self, "equations", tuple(self.equations))
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(self, "exchange", tuple(self.exchange))
        object.__setattr__(self, "goals", tuple(self.goals))
        self._validate()

    # -- derived tables -------------------------------------------------

    @cached_property
    def role_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.roles)

    @cached_property
    def symbol_table(self) -> dict[str, FunctionSymbol]:
        table = bundle_symbols(self.bundles)
        for sym in self.signature:
            table[sym.name] = sym
        return table

    @cached_property
    def all_equations(self) -> tuple[Equation, ...]:
        return bundle_equations(self.bundles) + self.equations

    @cached_property
    def destructors(self) -> tuple[Equation, ...]:
        return tuple(e for e in self.all_equations if e.orientation is Orientation.DESTRUCTOR)

    @cached_property
    def fresh_owner(self) -> dict[str, str]:
        """Name of every fresh value / long-term key -> declaring role."""
        owner: dict[str, str] = {}
        for role in self.roles:
            for name in role.owned_fresh_names:
                owner[name] = role.name
        return owner

    @cached_property
    def public_constants(self) -> tuple[Const, ...]:
        """Public constants mentioned anywhere, plus bundle constants."""
        seen: dict[Const, None] = {c: None for c in bundle_constants(self.bundles)}
        for _, term in self.document_terms():
            for sub in subterms(term):
                if isinstance(sub, Const) and sub.sort is Sort.PUBLIC:
                    seen[sub] = None
        return tuple(seen)

    def role(self, name: str) -> Role:
        for r in self.roles:
            if r.name == name:
                return r
        raise KeyError(name)

    def normalize_term(self, term: Term) -> Term:
        return normalize(term, self.bundles)

    def document_terms(self) -> Iterator[tuple[str, Term]]:
        """Every term of the document body with a short context label.

        Equation sides are schematic patterns, not protocol data, and are
        deliberately not included.
        """
        for role in self.roles:
            for t in role.initial_knowledge:
                yield f"knowledge of role {role.name}", t
        for step in self.exchange:
            yield f"message {step.index}", step.payload
        for goal in self.goals:
            if isinstance(goal, SecrecyGoal):
                yield f"secrecy goal of {goal.viewpoint}", goal.term
            else:
                for t in goal.terms:
                    yield f"agreement goal of {goal.claimer}", t

    # -- validation ------------------------------------------------------

    def _validate(self) -> None:
        check_identifier(self.name, "protocol name")
        names = [r.name for r in self.roles]
        if len(names) != len(set(names)):
            raise ModelError("role names must be unique")
        if not self.roles:
            raise ModelError("a protocol needs at least one role")

        bundle_table = bundle_symbols(self.bundles)
        sig_names = [s.name for s in self.signature]
        if len(sig_names) != len(set(sig_names)):
            raise ModelError("signature declares a function twice")
        for sym in self.signature:
            if sym.name in bundle_table:
                raise ModelError(f"signature redeclares bundle symbol {sym.name!r}")

        claimed: dict[str, str] = {}
        for role in self.roles:
            for fresh_name in sorted(role.owned_fresh_names):
                if fresh_name in claimed:
                    raise ModelError(
                        f"fresh value {fresh_name!r} is declared by both "
                        f"{claimed[fresh_name]} and {role.name}"
                    )
                claimed[fresh_name] = role.name

        pki_bundles = {BundleName.ASYMMETRIC_ENCRYPTION, BundleName.SIGNING}
        if not (self.bundles & pki_bundles):
            for role in self.roles:
                for key in role.long_term_keys:
                    if key.kind is KeyKind.ASYMMETRIC_PRIVATE:
                        raise ModelError(
                            f"role {role.name} declares asymmetric key "
                            f"{key.key_var.name!r} but neither the "
                            f"asymmetric-encryption nor the signing bundle is active"
                        )

        for i, step in enumerate(self.exchange, start=1):
            if step.index != i:
                raise ModelError(f"message indices must run 1..n, found {step.index} at position {i}")
            for endpoint in (step.sender, step.receiver):
                if endpoint not in names:
                    raise ModelError(f"message {step.index} references undeclared role {endpoint!r}")

        for goal in self.goals:
            goal_roles = (
                (goal.viewpoint,) if isinstance(goal, SecrecyGoal) else (goal.claimer, goal.peer)
            )
            for rn in goal_roles:
                if rn not in names:
                    raise ModelError(f"goal references undeclared role {rn!r}")

        self._check_terms()
        self._check_equation_symbols()

    def _check_terms(self) -> None:
        table = self.symbol_table
        var_sorts: dict[str, Sort] = {}
        const_sorts: dict[str, Sort] = {c.name: c.sort for c in bundle_constants(self.bundles)}
        owner = self.fresh_owner

        for context, term in self.document_terms():
            for sub in subterms(term):
                if isinstance(sub, Apply):
                    declared = table.get(sub.symbol.name)
                    if declared is None:
                        raise ModelError(
                            f"{context} uses undeclared function {sub.symbol.name!r}"
                        )
                    if declared != sub.symbol:
                        raise ModelError(
                            f"{context} uses {sub.symbol.name!r} with a mismatched declaration"
                        )
                elif isinstance(sub, Var):
                    prior = var_sorts.setdefault(sub.name, sub.sort)
                    if prior is not sub.sort:
                        raise ModelError(
                            f"variable {sub.name!r} used with conflicting sorts "
                            f"{prior.value} and {sub.sort.value}"
                        )
                    if sub.name in self.role_names and sub.sort is not Sort.PUBLIC:
                        raise ModelError(
                            f"variable {sub.name!r} names a role and must be pub-sorted"
                        )
                    if sub.sort is Sort.FRESH and sub.name not in owner:
                        raise ModelError(
                            f"fresh variable {sub.name!r} is not declared by any role"
                        )
                elif isinstance(sub, Const):
                    prior = const_sorts.setdefault(sub.name, sub.sort)
                    if prior is not sub.sort:
                        raise ModelError(
                            f"constant {sub.name!r} used with conflicting sorts"
                        )

        for role in self.roles:
            foreign = {
                name for name, owning in owner.items() if owning != role.name
            }
            for t in role.initial_knowledge:
                for v in vars_of(t):
                    if v.sort is Sort.FRESH and v.name in foreign:
                        raise ModelError(
                            f"role {role.name} cannot start out knowing {v.name!r}, "
                            f"a fresh value of role {owner[v.name]}"
                        )
            for v in role.fresh_values:
                prior = var_sorts.setdefault(v.name, Sort.FRESH)
                if prior is not Sort.FRESH:
                    raise ModelError(
                        f"fresh value {v.name!r} of role {role.name} is used "
                        f"elsewhere with sort {prior.value}"
                    )
            for key in role.long_term_keys:
                prior = var_sorts.setdefault(key.key_var.name, Sort.FRESH)
                if prior is not Sort.FRESH:
                    raise ModelError(
                        f"long-term key {key.key_var.name!r} of role {role.name} is used "
                        f"elsewhere with sort {prior.value}"
                    )

    def _check_equation_symbols(self) -> None:
        table = self.symbol_table
        for eq in self.equations:
            for side in (eq.lhs, eq.rhs):
                for sub in subterms(side):
                    if isinstance(sub, Apply) and sub.symbol.name not in table:
                        raise ModelError(
                            f"equation uses undeclared function {sub.symbol.name!r}"
                        )
