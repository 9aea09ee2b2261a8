"""Concrete adversaries and adapters from "decryptors" to each notion's outcome type.

A decryptor is an attack whose outcome is a plaintext guess for the
challenge. ``for_notion`` turns it into what a given game scores: the guess
itself (OW, SEM-C), a bit (IND), a basis state (SEM-Q) or a fresh ciphertext
of the guess (NM).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis, qsim
from .core import Adversary, AdversaryView, AttackModel, Ciphertext, Scheme
from .errors import DomainError
from .games import constant_transform, index_function
from .qsim import MixedState, PureState
from .schemes.toy_gm import ToyGMScheme, factor, gm_decrypt_value, GMKey, smallest_y


@dataclass(frozen=True)
class AdversaryContext:
    """What a registry factory may know when it builds an adversary."""

    scheme: Scheme
    n: int
    notion: str
    attack: AttackModel
    copies: int
    x: str
    y: str


def fresh_ciphertext(view: AdversaryView, plaintext) -> Ciphertext:
    """Encrypt ``plaintext`` and, where the scheme allows public
    re-randomization, make sure the result differs from the challenge."""
    ct = view.encrypt(plaintext)
    rerand = getattr(view.scheme, "rerandomize", None)
    if rerand is not None and view.challenge is not None and view.challenge.classical_part is not None:
        avoid = int(view.challenge.classical_part)
        if ct.classical_part is not None and int(ct.classical_part) == avoid:
            ct = rerand(ct, view.rng, avoid)
    return ct


def for_notion(name: str, decrypt_attack, ctx: AdversaryContext, sees_challenge: bool = True) -> Adversary:
    space = ctx.scheme.plaintext_space(ctx.n).elements
    target = index_function(space)
    if ctx.notion in ("ow", "sem-c"):
        attack = decrypt_attack
    elif ctx.notion == "ind":
        def attack(view):
            return int(decrypt_attack(view) == ctx.x)
    elif ctx.notion == "sem-q":
        def attack(view):
            return target(decrypt_attack(view))
    elif ctx.notion == "nm":
        def attack(view):
            guess = decrypt_attack(view)
            return fresh_ciphertext(view, guess) if sees_challenge else view.encrypt(guess)
    else:
        raise DomainError(f"unknown notion {ctx.notion!r}")
    return Adversary(attack, name=name)


# -- input-ignoring adversaries ---------------------------------------------


def constant_adversary(ctx: AdversaryContext) -> Adversary:
    first = ctx.scheme.plaintext_space(ctx.n).elements[0]
    if ctx.notion == "ind":
        return Adversary(lambda view: 0, name="constant")
    return for_notion("constant", lambda view: first, ctx, sees_challenge=False)


def coin_adversary(ctx: AdversaryContext) -> Adversary:
    space = ctx.scheme.plaintext_space(ctx.n).elements
    if ctx.notion == "ind":
        return Adversary(lambda view: int(view.rng.integers(2)), name="coin")
    return for_notion("coin", lambda view: space[int(view.rng.integers(len(space)))], ctx, sees_challenge=False)


# -- key-recovering adversaries ----------------------------------------------


def residuosity_decryptor(view: AdversaryView):
    """Factor N by trial division and decide quadratic residuosity mod p."""
    N = view.challenge.state.dim
    p, q = factor(N)
    c, _ = qsim.measure_computational(view.challenge.state, view.rng)
    return gm_decrypt_value(GMKey(p, q, smallest_y(p, q)), c)


def key_recovery_decryptor(ctx: AdversaryContext):
    if isinstance(ctx.scheme, ToyGMScheme):
        def attack(view):
            if view.challenge is None:
                return ctx.scheme.plaintext_space(ctx.n).elements[0]
            return residuosity_decryptor(view)
        return attack
    reserve = 1 if ctx.notion == "nm" and ctx.attack is AttackModel.COA else 0
    return analysis.brute_force_key_adversary(ctx.scheme, reserve=reserve).attack


def brute_force_adversary(ctx: AdversaryContext) -> Adversary:
    return for_notion("brute-force", key_recovery_decryptor(ctx), ctx)


def helstrom_distinguisher(ctx: AdversaryContext) -> Adversary:
    """Optimal joint measurement on (copies, challenge) for the pair ``(x, y)``.

    Uses the exact key-averaged ensembles, compressed when the scheme offers
    it, so the advantage equals the information-theoretic ceiling. Outputs 1
    on the ``x``-favouring outcome.
    """
    scheme, n = ctx.scheme, ctx.n

    def attack(view: AdversaryView):
        t = len(view.pubkeys)
        a, b = analysis.exact_ind_ensembles(scheme, n, ctx.x, ctx.y, t, compressed=True)
        _, meas = _helstrom_cached(scheme, n, ctx.x, ctx.y, t, a, b)
        comp = scheme.compression(n)
        regs = [view.take_copy() for _ in range(t)] + [view.challenge.state]
        joint = np.ones((1, 1), dtype=complex)
        for r in regs:
            d = r.density if comp is None else comp.apply(r.density)
            joint = np.kron(joint, d)
        label, _ = qsim.sample_outcome(meas, MixedState(joint), view.rng)
        return int(label == "+")

    return Adversary(attack, name="helstrom")


_helstrom_memo: dict = {}


def _helstrom_cached(scheme, n, x, y, t, a, b):
    key = (analysis._scheme_key(scheme), n, x, y, t)
    if key not in _helstrom_memo:
        _helstrom_memo[key] = qsim.helstrom_advantage(a, b)
    return _helstrom_memo[key]


def swap_probe(ctx: AdversaryContext) -> Adversary:
    """SWAP-test the challenge against a fresh encryption of ``x``; 1 on the symmetric outcome."""

    def attack(view: AdversaryView):
        ref = view.encrypt(ctx.x).state
        ch = view.challenge.state
        overlap = float(np.real(np.sum(ref.density * ch.density.T)))
        p_sym = min(1.0, max(0.0, (1 + overlap) / 2))
        return int(view.rng.random() < p_sym)

    return Adversary(attack, name="swap-probe")


def oracle_query_adversary(ctx: AdversaryContext) -> Adversary:
    """Asks the decryption oracle about the challenge itself."""

    def attack(view: AdversaryView):
        answer = view.oracles.decrypt(view.challenge)
        return for_notion("oracle-query", lambda v: answer, ctx).attack(view)

    return Adversary(attack, name="oracle-query")


def rerandomize_query_adversary(ctx: AdversaryContext) -> Adversary:
    """CCA2 attack on toy-GM: decrypt a re-randomized copy of the challenge.

    The query is a different basis state, so it has zero overlap with the
    challenge and the oracle must answer it.
    """
    if not isinstance(ctx.scheme, ToyGMScheme):
        raise DomainError("rerandomize-query needs a scheme with public re-randomization")

    def decryptor(view: AdversaryView):
        c = view.challenge
        avoid = int(c.classical_part) if c.classical_part is not None else None
        return view.oracles.decrypt(ctx.scheme.rerandomize(c, view.rng, avoid))

    return for_notion("rerandomize-query", decryptor, ctx)


# -- ciphertext-blind simulators for SEM-Q ------------------------------------


def _blind(state_fn, name):
    return constant_transform(state_fn, name)


_PLUS = PureState(np.array([1, 1]) / math.sqrt(2))

BLIND_SIMULATORS = {
    "blind-zero": lambda: _blind(lambda view: qsim.basis_state(0, 2), "blind-zero"),
    "blind-one": lambda: _blind(lambda view: qsim.basis_state(1, 2), "blind-one"),
    "blind-plus": lambda: _blind(lambda view: _PLUS, "blind-plus"),
    "blind-coin": lambda: _blind(lambda view: qsim.basis_state(int(view.rng.integers(2)), 2), "blind-coin"),
}
