"""Permutation-phase bit encryption over the regular representation of S_k.

The secret key is an odd involution ``pi``. A public-key copy is the coset
superposition ``(|s> + |s pi>)/sqrt 2`` for a uniformly random ``s``; bit 1 is
encrypted by the sign phase ``|s> -> sgn(s)|s>``, which flips the coset state
into the -1 eigenspace of ``U_pi``. Decryption measures those eigenspaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import qsim, symmetric
from ..core import Ciphertext, PlaintextSpace, Scheme
from ..errors import DomainError, ShapeError
from ..qsim import MixedState, ProjectiveMeasurement, UnitaryOp

K_MIN, K_MAX = 2, 5
BITS = ("0", "1")


@dataclass(frozen=True)
class PermSecretKey:
    k: int
    pi: tuple[int, ...]

    def __post_init__(self):
        pi = tuple(int(i) for i in self.pi)
        if len(pi) != self.k or sorted(pi) != list(range(self.k)):
            raise DomainError(f"{pi} is not a permutation of {self.k} points")
        if not symmetric.is_involution(pi) or symmetric.sign(pi) != -1:
            raise DomainError(f"{symmetric.cycle_notation(pi)} is not an odd involution")
        object.__setattr__(self, "pi", pi)

    def __str__(self):
        return symmetric.cycle_notation(self.pi)


def _check_k(k: int) -> int:
    if not K_MIN <= int(k) <= K_MAX:
        raise DomainError(f"k must lie in [{K_MIN}, {K_MAX}], got {k}")
    return int(k)


@lru_cache(maxsize=None)
def sign_unitary(k: int) -> UnitaryOp:
    """``S|s> = sgn(s)|s>``."""
    return UnitaryOp(np.diag(symmetric.sign_vector(k)).astype(complex))


@lru_cache(maxsize=None)
def _eigen_measurement(k: int, pi: tuple[int, ...]) -> ProjectiveMeasurement:
    u = symmetric.right_regular(pi)
    eye = np.eye(u.shape[0])
    return ProjectiveMeasurement(((eye + u) / 2, (eye - u) / 2), BITS)


def coset_state(k: int, sigma, pi) -> np.ndarray:
    idx = symmetric.index_of(k)
    v = np.zeros(math.factorial(k), dtype=complex)
    v[idx[tuple(sigma)]] += 1 / math.sqrt(2)
    v[idx[symmetric.compose(tuple(sigma), tuple(pi))]] += 1 / math.sqrt(2)
    return v


class PermScheme(Scheme):
    name = "perm"

    def __init__(self, k: int = 3):
        self.k = _check_k(k)

    @property
    def default_n(self) -> int:
        return self.k

    @property
    def params(self) -> dict:
        return {"k": self.k}

    def keygen(self, n: int, rng: np.random.Generator) -> PermSecretKey:
        k = _check_k(n)
        keys = symmetric.odd_involutions(k)
        return PermSecretKey(k, keys[int(rng.integers(len(keys)))])

    def derive_pub(self, key: PermSecretKey, rng: np.random.Generator) -> MixedState:
        group = symmetric.elements(key.k)
        sigma = group[int(rng.integers(len(group)))]
        v = coset_state(key.k, sigma, key.pi)
        return MixedState(np.outer(v, v.conj()), labels=symmetric.basis_labels(key.k))

    def plaintext_space(self, n: int) -> PlaintextSpace:
        _check_k(n)
        return PlaintextSpace(n, BITS, "single bit")

    def encrypt(self, pubkey_copy, plaintext, rng=None) -> Ciphertext:
        k = symmetric.degree_for_dim(pubkey_copy.dim)
        bit = self.check_plaintext(plaintext, _check_k(k))
        if bit == "0":
            return Ciphertext(pubkey_copy)
        return Ciphertext(qsim.apply_unitary(sign_unitary(k), pubkey_copy))

    def decryption_measurement(self, key: PermSecretKey) -> ProjectiveMeasurement:
        return _eigen_measurement(key.k, key.pi)

    def security_parameter(self, key: PermSecretKey) -> int:
        return key.k

    def key_distribution(self, n: int):
        keys = symmetric.odd_involutions(_check_k(n))
        return [(PermSecretKey(n, pi), 1.0 / len(keys)) for pi in keys]

    def pubkey_density(self, key: PermSecretKey) -> MixedState:
        u = symmetric.right_regular(key.pi)
        return MixedState((np.eye(u.shape[0]) + u) / u.shape[0], labels=symmetric.basis_labels(key.k))

    def ciphertext_density(self, key: PermSecretKey, plaintext) -> MixedState:
        bit = self.check_plaintext(plaintext, key.k)
        u = symmetric.right_regular(key.pi)
        s = 1.0 if bit == "0" else -1.0
        return MixedState((np.eye(u.shape[0]) + s * u) / u.shape[0], labels=symmetric.basis_labels(key.k))

    def compression(self, n: int):
        return symmetric.isotypic_compression(_check_k(n))

    def check_dim(self, state, n: int):
        if state.dim != math.factorial(n):
            raise ShapeError(f"expected dimension {math.factorial(n)}, got {state.dim}")

    def __repr__(self):
        return f"PermScheme(k={self.k})"
