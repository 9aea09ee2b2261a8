"""Confidence intervals and exact information-theoretic oracles."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import qsim, symmetric
from .core import Adversary, AdversaryView, Scheme
from .errors import CapacityError, DomainError
from .qsim import MixedState, POVM

CONFIDENCE = 0.95
_LOG_TERM = math.log(2 / (1 - CONFIDENCE))  # ln 40


@dataclass(frozen=True)
class Estimate:
    value: float
    trials: int
    ci95_halfwidth: float
    method: str = "hoeffding"

    @property
    def reported_halfwidth(self) -> float:
        """Halfwidth clamped to the range of a probability."""
        return min(1.0, self.ci95_halfwidth)


def hoeffding_halfwidth(trials: int) -> float:
    if trials < 1:
        raise DomainError("at least one trial is required")
    return math.sqrt(_LOG_TERM / (2 * trials))


def hoeffding_ci(successes: float, trials: int) -> Estimate:
    """Two-sided 95% Hoeffding interval for a mean of [0, 1] variables.

    ``successes`` may be fractional (a sum of per-trial scores in [0, 1]).
    """
    if trials < 1:
        raise DomainError("at least one trial is required")
    if not 0 <= successes <= trials:
        raise DomainError(f"successes={successes} outside [0, {trials}]")
    return Estimate(successes / trials, trials, hoeffding_halfwidth(trials))


def combined_ci(*halfwidths: float) -> float:
    """Root-sum-square combination used when comparing independent estimates."""
    return math.sqrt(sum(h * h for h in halfwidths))


def consistent_with_zero(value: float, halfwidth: float, k: float = 3.0) -> bool:
    """Reporting convention: ``|value| <= k * halfwidth`` ("negligible at this n")."""
    return abs(value) <= k * halfwidth


# -- exact ensembles -------------------------------------------------------

_cache: dict = {}
_cache_lock = threading.Lock()


def _scheme_key(scheme: Scheme):
    return (type(scheme).__name__, tuple(sorted(getattr(scheme, "params", {}).items())))


def _register(scheme: Scheme, n: int, density: np.ndarray, compressed: bool) -> np.ndarray:
    if not compressed:
        return density
    comp = scheme.compression(n)
    return density if comp is None else comp.apply(density)


def exact_ind_ensembles(scheme: Scheme, n: int, x, y, copies: int, compressed: bool = False):
    """``rho_m = E_d[pub(d)^(x)t (x) ct(d, m)]`` for ``m`` in ``(x, y)``.

    With ``compressed=True`` every register first goes through the scheme's
    compression channel (if it has one). That channel is lossless on the
    operators these ensembles are built from, so trace distances agree with
    the uncompressed route while the matrices shrink.
    """
    x = scheme.check_plaintext(x, n)
    y = scheme.check_plaintext(y, n)
    if copies < 0:
        raise DomainError("copies must be non-negative")
    cache_key = (_scheme_key(scheme), n, x, y, copies, compressed)
    with _cache_lock:
        hit = _cache.get(cache_key)
    if hit is not None:
        return hit
    keys = scheme.key_distribution(n)
    first = _register(scheme, n, scheme.pubkey_density(keys[0][0]).density, compressed)
    dim = first.shape[0] ** (copies + 1)
    if dim * dim > qsim.max_entries():
        raise CapacityError(f"ensemble of dimension {dim} exceeds the entry cap")
    out = []
    for m in (x, y):
        rho = np.zeros((dim, dim), dtype=complex)
        for key, w in keys:
            pub = _register(scheme, n, scheme.pubkey_density(key).density, compressed)
            joint = np.ones((1, 1), dtype=complex)
            for _ in range(copies):
                joint = np.kron(joint, pub)
            ct = _register(scheme, n, scheme.ciphertext_density(key, m).density, compressed)
            rho += w * np.kron(joint, ct)
        out.append(MixedState((rho + rho.conj().T) / 2, (first.shape[0],) * (copies + 1)))
    result = (out[0], out[1])
    with _cache_lock:
        _cache.setdefault(cache_key, result)
    return result


def ind_ceiling(scheme: Scheme, n: int, x, y, copies: int, compressed: bool = True) -> float:
    """Information-theoretic IND advantage bound (Helstrom on the exact ensembles)."""
    a, b = exact_ind_ensembles(scheme, n, x, y, copies, compressed)
    return qsim.trace_distance(a, b)


# -- brute-force key adversary ------------------------------------------------


def _inv_sqrt_psd(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    inv = np.array([1 / math.sqrt(x) if x > tol else 0.0 for x in w])
    return (v * inv) @ v.conj().T


@lru_cache(maxsize=None)
def key_identification_povm(k: int, copies: int) -> tuple[POVM, tuple]:
    """Pretty-good measurement over the odd involutions of S_k on ``copies`` compressed copies.

    The effects are padded on the kernel of the averaged state so they sum to
    the identity.
    """
    comp = symmetric.isotypic_compression(k)
    keys = symmetric.odd_involutions(k)
    dim = comp.dim**copies
    if dim * dim * (len(keys) + 1) > qsim.max_entries() * 4:
        raise CapacityError(f"key identification on {copies} copies of S_{k} is over the cap")
    states = []
    for pi in keys:
        u = symmetric.right_regular(pi)
        one = comp.apply((np.eye(u.shape[0]) + u) / u.shape[0])
        joint = np.ones((1, 1), dtype=complex)
        for _ in range(copies):
            joint = np.kron(joint, one)
        states.append(joint)
    avg = sum(states)
    root = _inv_sqrt_psd(avg)
    effects = [root @ s @ root for s in states]
    effects = [(e + e.conj().T) / 2 for e in effects]
    residue = np.eye(dim) - sum(effects)
    effects[0] = effects[0] + (residue + residue.conj().T) / 2
    return POVM(tuple(effects), tuple(symmetric.one_line(p) for p in keys)), keys


def identify_key(view: AdversaryView, copies: list) -> tuple[int, ...]:
    """Guess the odd involution from public-key copies (consumed)."""
    k = view.n
    keys = symmetric.odd_involutions(k)
    if not copies:
        return keys[0]
    povm, keys = key_identification_povm(k, len(copies))
    comp = symmetric.isotypic_compression(k)
    joint = np.ones((1, 1), dtype=complex)
    for c in copies:
        joint = np.kron(joint, comp.apply(c.density))
    label, _ = qsim.sample_outcome(povm, MixedState(joint), view.rng)
    return keys[povm.outcome_labels.index(label)]


def brute_force_key_adversary(scheme: Scheme, copies: int | None = None, reserve: int = 0) -> Adversary:
    """Unbounded adversary against the permutation scheme.

    It spends its public-key copies on a joint pretty-good measurement over
    all odd involutions, then decrypts the challenge with the guessed key.
    The outcome is the decrypted plaintext. ``copies`` caps how many copies
    the identification uses; ``reserve`` keeps some back (for re-encryption
    without an oracle).
    """
    if scheme.name != "perm":
        raise DomainError("the brute-force key adversary targets the permutation scheme")
    from .schemes.perm import PermSecretKey

    def attack(view: AdversaryView):
        usable = max(0, len(view.pubkeys) - reserve)
        if copies is not None:
            usable = min(usable, copies)
        spent = [view.take_copy() for _ in range(usable)]
        guess = PermSecretKey(view.n, identify_key(view, spent))
        if view.challenge is None:
            return view.scheme.plaintext_space(view.n).elements[0]
        return view.scheme.decrypt(guess, view.challenge, view.rng)

    return Adversary(attack, name="brute-force")
