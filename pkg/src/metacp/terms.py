"""Sorted symbolic message terms.

Terms are the universal currency of the toolchain: protocol payloads,
role knowledge, equation sides and security goals are all terms. A term
is a variable, a constant, a function application or an n-ary tuple
(n >= 2). Variables and constants carry one of three sorts; ``fresh``
and ``pub`` are subsorts of ``msg``, so a fresh or public term is
accepted anywhere a plain message is expected.

All term values are immutable and hashable; structural equality is the
only equality.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterator, Mapping, Union

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class ModelError(ValueError):
    """A protocol model value violates one of its invariants."""


class SortMismatch(ModelError):
    """A term was used where its sort is not acceptable."""


class Sort(Enum):
    MESSAGE = "msg"
    FRESH = "fresh"
    PUBLIC = "pub"

    @classmethod
    def from_token(cls, token: str) -> "Sort":
        for sort in cls:
            if sort.value == token:
                return sort
        raise ModelError(f"unknown sort token {token!r}")


class Visibility(Enum):
    PUBLIC = "public"
    PRIVATE = "private"


def check_identifier(name: str, what: str = "identifier") -> str:
    if not IDENT_RE.match(name):
        raise ModelError(f"{what} {name!r} must match [A-Za-z][A-Za-z0-9_]*")
    return name


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    visibility: Visibility = Visibility.PUBLIC

    def __post_init__(self) -> None:
        check_identifier(self.name, "function name")
        if self.arity < 0:
            raise ModelError(f"function {self.name!r} has negative arity")

    @property
    def is_public(self) -> bool:
        return self.visibility is Visibility.PUBLIC


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort = Sort.MESSAGE

    def __post_init__(self) -> None:
        check_identifier(self.name, "variable name")


@dataclass(frozen=True)
class Const:
    name: str
    sort: Sort = Sort.PUBLIC

    def __post_init__(self) -> None:
        check_identifier(self.name, "constant name")
        if self.sort is Sort.FRESH:
            raise ModelError(f"constant {self.name!r} cannot be fresh-sorted")


@dataclass(frozen=True)
class Apply:
    symbol: FunctionSymbol
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.symbol.arity:
            raise ModelError(
                f"{self.symbol.name} expects {self.symbol.arity} argument(s), "
                f"got {len(self.args)}"
            )


@dataclass(frozen=True)
class TupleTerm:
    items: tuple["Term", ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) < 2:
            raise ModelError("tuples need at least two items")


Term = Union[Var, Const, Apply, TupleTerm]


def sort_of(term: Term) -> Sort:
    """Sort of a term; applications and tuples are plain messages."""
    if isinstance(term, (Var, Const)):
        return term.sort
    return Sort.MESSAGE


def sort_accepts(expected: Sort, actual: Sort) -> bool:
    """True if a term of sort ``actual`` can stand where ``expected`` is required."""
    return expected is Sort.MESSAGE or expected is actual


def children(term: Term) -> tuple[Term, ...]:
    if isinstance(term, Apply):
        return term.args
    if isinstance(term, TupleTerm):
        return term.items
    return ()


def subterms(term: Term) -> tuple[Term, ...]:
    """The term and all its transitive subterms, pre-order, without duplicates."""
    seen: dict[Term, None] = {}

    def walk(t: Term) -> None:
        if t not in seen:
            seen[t] = None
            for child in children(t):
                walk(child)

    walk(term)
    return tuple(seen)


def iter_vars(term: Term) -> Iterator[Var]:
    for sub in subterms(term):
        if isinstance(sub, Var):
            yield sub


def vars_of(term: Term) -> frozenset[Var]:
    return frozenset(iter_vars(term))


def substitute(term: Term, binding: Mapping[Var, Term]) -> Term:
    """Simultaneous replacement of variables; unmapped variables stay put.

    Raises SortMismatch when a bound term's sort is not acceptable for
    the variable it replaces.
    """
    for var, value in binding.items():
        if not sort_accepts(var.sort, sort_of(value)):
            raise SortMismatch(
                f"cannot bind {var.sort.value}-sorted variable {var.name!r} "
                f"to a {sort_of(value).value}-sorted term"
            )

    def walk(t: Term) -> Term:
        if isinstance(t, Var):
            return binding.get(t, t)
        if isinstance(t, Apply):
            return Apply(t.symbol, tuple(walk(a) for a in t.args))
        if isinstance(t, TupleTerm):
            return TupleTerm(tuple(walk(i) for i in t.items))
        return t

    return walk(term)


def match(pattern: Term, term: Term, binding: dict[Var, Term] | None = None) -> dict[Var, Term] | None:
    """First-order syntactic matching: find sigma with sigma(pattern) == term.

    Repeated pattern variables must match equal terms. Returns the
    binding, or None when the terms do not match.
    """
    binding = dict(binding) if binding else {}

    def walk(p: Term, t: Term) -> bool:
        if isinstance(p, Var):
            if not sort_accepts(p.sort, sort_of(t)):
                return False
            bound = binding.get(p)
            if bound is None:
                binding[p] = t
                return True
            return bound == t
        if isinstance(p, Const):
            return p == t
        if isinstance(p, Apply):
            return (
                isinstance(t, Apply)
                and p.symbol == t.symbol
                and all(walk(pa, ta) for pa, ta in zip(p.args, t.args))
            )
        if isinstance(p, TupleTerm):
            return (
                isinstance(t, TupleTerm)
                and len(p.items) == len(t.items)
                and all(walk(pi, ti) for pi, ti in zip(p.items, t.items))
            )
        return False

    return binding if walk(pattern, term) else None


@lru_cache(maxsize=None)
def canon(term: Term) -> str:
    """Canonical printed form; lexicographic order on it is the total term order."""
    if isinstance(term, Var):
        return f"(v {term.name} {term.sort.value})"
    if isinstance(term, Const):
        return f"(c {term.name} {term.sort.value})"
    if isinstance(term, Apply):
        inner = " ".join(canon(a) for a in term.args)
        return f"(f {term.symbol.name} {inner})" if inner else f"(f {term.symbol.name})"
    inner = " ".join(canon(i) for i in term.items)
    return f"(t {inner})"


def term_key(term: Term) -> str:
    """Stable sort key for deterministic iteration over term collections."""
    return canon(term)


def text(term: Term) -> str:
    """Human-readable rendering: ~fresh, $public, 'const', f(..), <a,b>."""
    if isinstance(term, Var):
        marker = {Sort.FRESH: "~", Sort.PUBLIC: "$", Sort.MESSAGE: ""}[term.sort]
        return marker + term.name
    if isinstance(term, Const):
        return f"'{term.name}'" if term.sort is Sort.PUBLIC else f"%{term.name}"
    if isinstance(term, Apply):
        if not term.args:
            return term.symbol.name
        return f"{term.symbol.name}({', '.join(text(a) for a in term.args)})"
    return f"<{', '.join(text(i) for i in term.items)}>"
