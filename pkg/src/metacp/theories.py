"""Equational theories: user equations, the fixed theory bundles and
Diffie-Hellman normalization.

The six bundles are closed tables; a protocol opts into them by name and
user signatures may not redeclare their symbols. Destructor equations
drive knowledge saturation; the one unoriented equation the toolchain
interprets itself is the exponentiation swap, handled by canonical
normalization (base plus sorted multiset of exponents) rather than by
general AC reasoning.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .terms import (
    Apply,
    Const,
    FunctionSymbol,
    ModelError,
    Sort,
    Term,
    TupleTerm,
    Var,
    canon,
    subterms,
    vars_of,
)


class Orientation(Enum):
    DESTRUCTOR = "destructor"
    UNORIENTED = "unoriented"


def _is_constantlike(term: Term) -> bool:
    # nullary applications count as constants (e.g. the signing check result)
    return isinstance(term, Const) or (isinstance(term, Apply) and not term.args)


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    orientation: Orientation = Orientation.DESTRUCTOR

    def __post_init__(self) -> None:
        if not vars_of(self.rhs) <= vars_of(self.lhs):
            raise ModelError("equation right side uses variables absent from the left side")
        if self.orientation is Orientation.DESTRUCTOR:
            if not isinstance(self.lhs, Apply):
                raise ModelError("destructor left side must be a function application")
            root = self.lhs.symbol
            if any(
                isinstance(s, Apply) and s.symbol == root for s in subterms(self.rhs)
            ):
                raise ModelError(
                    f"destructor symbol {root.name!r} may not occur on the right side"
                )
            if not (self.rhs in subterms(self.lhs) and isinstance(self.rhs, Var)) and not _is_constantlike(self.rhs):
                raise ModelError(
                    "destructor right side must be a variable of the left side or a constant"
                )


class BundleName(Enum):
    SYMMETRIC_ENCRYPTION = "symmetric-encryption"
    ASYMMETRIC_ENCRYPTION = "asymmetric-encryption"
    SIGNING = "signing"
    HASHING = "hashing"
    DIFFIE_HELLMAN = "diffie-hellman"
    PAIRING = "pairing"

    @classmethod
    def from_token(cls, token: str) -> "BundleName":
        for name in cls:
            if name.value == token:
                return name
        raise ModelError(f"unknown theory bundle {token!r}")


@dataclass(frozen=True)
class TheoryBundle:
    name: BundleName
    symbols: tuple[FunctionSymbol, ...]
    constants: tuple[Const, ...]
    equations: tuple[Equation, ...]


SENC = FunctionSymbol("senc", 2)
SDEC = FunctionSymbol("sdec", 2)
AENC = FunctionSymbol("aenc", 2)
ADEC = FunctionSymbol("adec", 2)
PK = FunctionSymbol("pk", 1)
SIGN = FunctionSymbol("sign", 2)
VERIFY = FunctionSymbol("verify", 3)
TRUE = FunctionSymbol("true", 0)
HASH = FunctionSymbol("h", 1)
EXP = FunctionSymbol("exp", 2)
G = Const("g", Sort.PUBLIC)

_m = Var("m")
_k = Var("k")
_sk = Var("sk")
_b = Var("b")
_x = Var("x")
_y = Var("y")

BUNDLES: dict[BundleName, TheoryBundle] = {
    BundleName.SYMMETRIC_ENCRYPTION: TheoryBundle(
        BundleName.SYMMETRIC_ENCRYPTION,
        symbols=(SENC, SDEC),
        constants=(),
        equations=(
            Equation(Apply(SDEC, (Apply(SENC, (_m, _k)), _k)), _m, Orientation.DESTRUCTOR),
        ),
    ),
    BundleName.ASYMMETRIC_ENCRYPTION: TheoryBundle(
        BundleName.ASYMMETRIC_ENCRYPTION,
        symbols=(AENC, ADEC, PK),
        constants=(),
        equations=(
            Equation(
                Apply(ADEC, (Apply(AENC, (_m, Apply(PK, (_sk,)))), _sk)),
                _m,
                Orientation.DESTRUCTOR,
            ),
        ),
    ),
    BundleName.SIGNING: TheoryBundle(
        BundleName.SIGNING,
        symbols=(SIGN, VERIFY, PK, TRUE),
        constants=(),
        equations=(
            Equation(
                Apply(VERIFY, (Apply(SIGN, (_m, _sk)), _m, Apply(PK, (_sk,)))),
                Apply(TRUE, ()),
                Orientation.DESTRUCTOR,
            ),
        ),
    ),
    BundleName.HASHING: TheoryBundle(
        BundleName.HASHING, symbols=(HASH,), constants=(), equations=()
    ),
    BundleName.DIFFIE_HELLMAN: TheoryBundle(
        BundleName.DIFFIE_HELLMAN,
        symbols=(EXP,),
        constants=(G,),
        equations=(
            Equation(
                Apply(EXP, (Apply(EXP, (_b, _x)), _y)),
                Apply(EXP, (Apply(EXP, (_b, _y)), _x)),
                Orientation.UNORIENTED,
            ),
        ),
    ),
    BundleName.PAIRING: TheoryBundle(
        BundleName.PAIRING, symbols=(), constants=(), equations=()
    ),
}


def bundle_symbols(names: Iterable[BundleName]) -> dict[str, FunctionSymbol]:
    """Merged symbol table of the given bundles (pk/1 may come from two)."""
    table: dict[str, FunctionSymbol] = {}
    for name in names:
        for sym in BUNDLES[name].symbols:
            table[sym.name] = sym
    return table


def bundle_equations(names: Iterable[BundleName]) -> tuple[Equation, ...]:
    eqs: list[Equation] = []
    for name in names:
        eqs.extend(BUNDLES[name].equations)
    return tuple(eqs)


def bundle_constants(names: Iterable[BundleName]) -> tuple[Const, ...]:
    consts: list[Const] = []
    for name in names:
        consts.extend(BUNDLES[name].constants)
    return tuple(consts)


def _dh_active(bundles: Iterable[BundleName]) -> bool:
    return BundleName.DIFFIE_HELLMAN in set(bundles)


def is_exp(term: Term) -> bool:
    return isinstance(term, Apply) and term.symbol == EXP


def split_exp_chain(term: Term) -> tuple[Term, list[Term]]:
    """Decompose nested exponentiations into (base, exponents in order)."""
    exponents: list[Term] = []
    while is_exp(term):
        assert isinstance(term, Apply)
        exponents.append(term.args[1])
        term = term.args[0]
    exponents.reverse()
    return term, exponents


def build_exp_chain(base: Term, exponents: Iterable[Term]) -> Term:
    out = base
    for e in exponents:
        out = Apply(EXP, (out, e))
    return out


def normalize(term: Term, bundles: Iterable[BundleName] = ()) -> Term:
    """Canonical form of a term.

    With the Diffie-Hellman bundle active, exponentiation chains are
    flattened to their base plus the multiset of exponents sorted by the
    total term order; everything else is returned unchanged apart from
    recursive normalization of arguments.
    """
    bundle_set = frozenset(bundles)

    def walk(t: Term) -> Term:
        if isinstance(t, (Var, Const)):
            return t
        if isinstance(t, TupleTerm):
            return TupleTerm(tuple(walk(i) for i in t.items))
        assert isinstance(t, Apply)
        if _dh_active(bundle_set) and is_exp(t):
            base, exponents = split_exp_chain(t)
            base = walk(base)
            exponents = sorted((walk(e) for e in exponents), key=canon)
            return build_exp_chain(base, exponents)
        return Apply(t.symbol, tuple(walk(a) for a in t.args))

    return walk(term)
