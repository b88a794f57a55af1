"""Seeded generator of valid, executable protocol specs.

Payloads are built constructively from material each sender provably has
(identities, its own fresh values, whole terms it received, public
constants, peer public keys), so every generated spec passes the
executability analysis by construction. Shapes stay within the bounds
the acceptance suite states: up to 6 roles, 12 messages, term depth 4.
"""
from __future__ import annotations

import random

from metacp.protocol import (
    AgreementGoal,
    Delivery,
    KeyKind,
    LongTermKey,
    MessageStep,
    ProtocolSpec,
    Role,
    SecrecyGoal,
)
from metacp.terms import Apply, Const, FunctionSymbol, Sort, Term, TupleTerm, Var, subterms
from metacp.theories import (
    AENC,
    EXP,
    G,
    HASH,
    PK,
    SENC,
    SIGN,
    BundleName,
)

_BUNDLE_CHOICES = [
    BundleName.SYMMETRIC_ENCRYPTION,
    BundleName.ASYMMETRIC_ENCRYPTION,
    BundleName.SIGNING,
    BundleName.HASHING,
    BundleName.DIFFIE_HELLMAN,
    BundleName.PAIRING,
]


def random_spec(rng: random.Random) -> ProtocolSpec:
    n_roles = rng.randint(1, 6)
    role_names = [f"R{i}" for i in range(1, n_roles + 1)]
    bundles = frozenset(b for b in _BUNDLE_CHOICES if rng.random() < 0.45)
    pki = bool(bundles & {BundleName.ASYMMETRIC_ENCRYPTION, BundleName.SIGNING})

    signature = []
    if rng.random() < 0.3:
        signature.append(FunctionSymbol(f"u{rng.randint(1, 3)}", rng.randint(1, 2)))

    fresh: dict[str, list[Var]] = {}
    ltks: dict[str, list[LongTermKey]] = {}
    for name in role_names:
        fresh[name] = [Var(f"n{name}{i}", Sort.FRESH) for i in range(rng.randint(0, 2))]
        ltks[name] = []
        if pki and rng.random() < 0.5:
            ltks[name].append(LongTermKey(Var(f"sk{name}", Sort.FRESH), KeyKind.ASYMMETRIC_PRIVATE))
        elif rng.random() < 0.15:
            ltks[name].append(LongTermKey(Var(f"lk{name}", Sort.FRESH), KeyKind.SYMMETRIC))

    identities = [Var(n, Sort.PUBLIC) for n in role_names]
    roles = tuple(
        Role(
            name,
            initial_knowledge=tuple(identities),
            fresh_values=tuple(fresh[name]),
            long_term_keys=tuple(ltks[name]),
        )
        for name in role_names
    )

    consts = [Const(f"c{i}") for i in range(2)]
    all_asym = [k.key_var for r in role_names for k in ltks[r] if k.kind is KeyKind.ASYMMETRIC_PRIVATE]

    # terms each role can certainly produce when sending
    available: dict[str, list[Term]] = {
        name: [*identities, *fresh[name], *consts] for name in role_names
    }
    if BundleName.DIFFIE_HELLMAN in bundles:
        for name in role_names:
            available[name].append(G)

    def build_payload(sender: str, depth: int) -> Term:
        pool = available[sender]
        if depth <= 0 or rng.random() < 0.35:
            return rng.choice(pool)
        ops = ["tuple"]
        if BundleName.SYMMETRIC_ENCRYPTION in bundles:
            ops.append("senc")
        if BundleName.ASYMMETRIC_ENCRYPTION in bundles and all_asym:
            ops.append("aenc")
        if BundleName.SIGNING in bundles and any(
            k.kind is KeyKind.ASYMMETRIC_PRIVATE for k in ltks[sender]
        ):
            ops.append("sign")
        if BundleName.HASHING in bundles:
            ops.append("h")
        if BundleName.DIFFIE_HELLMAN in bundles:
            ops.append("exp")
        if signature:
            ops.append("custom")
        op = rng.choice(ops)
        if op == "tuple":
            return TupleTerm(tuple(build_payload(sender, depth - 1) for _ in range(rng.randint(2, 3))))
        if op == "senc":
            return Apply(SENC, (build_payload(sender, depth - 1), build_payload(sender, 0)))
        if op == "aenc":
            key = Apply(PK, (rng.choice(all_asym),))
            return Apply(AENC, (build_payload(sender, depth - 1), key))
        if op == "sign":
            own = next(k.key_var for k in ltks[sender] if k.kind is KeyKind.ASYMMETRIC_PRIVATE)
            return Apply(SIGN, (build_payload(sender, depth - 1), own))
        if op == "h":
            return Apply(HASH, (build_payload(sender, depth - 1),))
        if op == "exp":
            return Apply(EXP, (build_payload(sender, 0), build_payload(sender, 0)))
        sym = signature[0]
        return Apply(sym, tuple(build_payload(sender, depth - 1) for _ in range(sym.arity)))

    steps: list[MessageStep] = []
    if n_roles >= 2:
        for index in range(1, rng.randint(0, 12) + 1):
            sender, receiver = rng.sample(role_names, 2)
            payload = build_payload(sender, 3)
            delivery = Delivery.DECOMPOSE
            if rng.random() < 0.15 and not (
                isinstance(payload, Apply) and payload.symbol in (SENC, AENC, SIGN)
            ):
                delivery = Delivery.ATOMIC
            steps.append(MessageStep(index, sender, receiver, payload, delivery))
            available[receiver].append(payload)

    goals: list = []
    for name in role_names:
        sent_fresh = [
            v
            for v in fresh[name]
            for s in steps
            if s.sender == name and v in set(subterms(s.payload))
        ]
        if sent_fresh and rng.random() < 0.4:
            goals.append(SecrecyGoal(sent_fresh[0], name))
    if n_roles >= 2 and steps and rng.random() < 0.3:
        claimer, peer = rng.sample(role_names, 2)
        goals.append(
            AgreementGoal(claimer, peer, (Var(claimer, Sort.PUBLIC), Var(peer, Sort.PUBLIC)))
        )

    return ProtocolSpec(
        name=f"gen{rng.randint(0, 10**6)}",
        bundles=bundles,
        signature=tuple(signature),
        equations=(),
        roles=roles,
        exchange=tuple(steps),
        goals=tuple(goals),
    )
