"""Goldwasser-Micali bit encryption at toy size, run as a degenerate quantum scheme.

Ciphertexts ``c = r^2 y^b mod N`` are computational-basis states of dimension
``N``; the public key ``(N, y)`` is the basis state ``|y>``. Everything here is
breakable by trial division, which is the point: it is the negative control.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import qsim
from ..core import Ciphertext, PlaintextSpace, Scheme
from ..errors import DomainError, ShapeError
from ..qsim import MixedState, ProjectiveMeasurement

BITS = ("0", "1")
MAX_MODULUS = 10**4


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def factor(n: int) -> tuple[int, int]:
    """Split ``n = p q`` with distinct primes ``p < q`` by trial division."""
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            q = n // p
            if p != q and is_prime(p) and is_prime(q):
                return p, q
            break
    raise DomainError(f"{n} is not a product of two distinct primes")


@lru_cache(maxsize=None)
def squares_mod(m: int) -> frozenset[int]:
    """Quadratic residues mod ``m``, including 0."""
    return frozenset(x * x % m for x in range(m))


def is_residue(c: int, p: int) -> bool:
    return c % p in squares_mod(p)


def valid_y(y: int, p: int, q: int) -> bool:
    # non-residue mod both primes, so Jacobi(y/N) = 1
    return math.gcd(y, p * q) == 1 and not is_residue(y, p) and not is_residue(y, q)


def smallest_y(p: int, q: int) -> int:
    return next(y for y in range(2, p * q) if valid_y(y, p, q))


@dataclass(frozen=True)
class GMKey:
    p: int
    q: int
    y: int

    def __post_init__(self):
        if self.p == self.q or not is_prime(self.p) or not is_prime(self.q):
            raise DomainError(f"({self.p}, {self.q}) must be distinct primes")
        if self.p * self.q > MAX_MODULUS:
            raise DomainError(f"modulus {self.p * self.q} exceeds {MAX_MODULUS}")
        if not valid_y(self.y, self.p, self.q):
            raise DomainError(f"y={self.y} is not a non-residue mod {self.p} and mod {self.q}")

    @property
    def N(self) -> int:
        return self.p * self.q

    def __str__(self):
        return f"(p={self.p}, q={self.q}, y={self.y})"


def gm_ciphertext(N: int, y: int, bit, r: int) -> int:
    return r * r * pow(y, int(bit), N) % N


def gm_decrypt_value(key: GMKey, c: int) -> str:
    return "0" if is_residue(c, key.p) else "1"


@lru_cache(maxsize=None)
def units(N: int) -> tuple[int, ...]:
    return tuple(r for r in range(1, N) if math.gcd(r, N) == 1)


@lru_cache(maxsize=None)
def _qr_measurement(N: int, p: int) -> ProjectiveMeasurement:
    mask = np.array([is_residue(c, p) for c in range(N)], dtype=float)
    return ProjectiveMeasurement((np.diag(mask).astype(complex), np.diag(1 - mask).astype(complex)), BITS)


@lru_cache(maxsize=None)
def _pub_state(N: int, y: int) -> MixedState:
    return qsim.basis_state(y, N).to_mixed()


class ToyGMScheme(Scheme):
    name = "toy-gm"

    def __init__(self, N: int = 77, y: int | None = None):
        p, q = factor(int(N))
        self.N = int(N)
        self.y = smallest_y(p, q) if y is None else int(y)
        self._key = GMKey(p, q, self.y)

    @property
    def default_n(self) -> int:
        return self.N

    @property
    def params(self) -> dict:
        return {"N": self.N, "y": self.y}

    def _check_n(self, n: int):
        if int(n) != self.N:
            raise DomainError(f"this instance is fixed at N={self.N}, got n={n}")

    def keygen(self, n: int, rng=None) -> GMKey:
        self._check_n(n)
        return self._key

    def derive_pub(self, key: GMKey, rng=None) -> MixedState:
        # the copy is a fixed basis state, so one immutable object serves every call
        return _pub_state(key.N, key.y)

    def plaintext_space(self, n: int) -> PlaintextSpace:
        self._check_n(n)
        return PlaintextSpace(n, BITS, "single bit")

    def encrypt(self, pubkey_copy, plaintext, rng: np.random.Generator, avoid: int | None = None) -> Ciphertext:
        """Measure the public key for ``y`` and emit ``|r^2 y^b mod N>``.

        ``avoid`` resamples ``r`` until the ciphertext value differs from it.
        """
        N = pubkey_copy.dim
        bit = self.check_plaintext(plaintext, N)
        y, _ = qsim.measure_computational(pubkey_copy, rng)
        rs = units(N)
        while True:
            c = gm_ciphertext(N, y, bit, rs[int(rng.integers(len(rs)))])
            if c != avoid:
                break
        return Ciphertext(qsim.basis_state(c, N), classical_part=str(c))

    def rerandomize(self, ciphertext: Ciphertext, rng: np.random.Generator, avoid: int | None = None) -> Ciphertext:
        """Public re-randomization ``c -> c s^2 mod N``; needs only ``N``."""
        N = ciphertext.state.dim
        c, _ = qsim.measure_computational(ciphertext.state, rng)
        rs = units(N)
        while True:
            out = c * rs[int(rng.integers(len(rs)))] ** 2 % N
            if out != avoid:
                break
        return Ciphertext(qsim.basis_state(out, N), classical_part=str(out))

    def decryption_measurement(self, key: GMKey) -> ProjectiveMeasurement:
        return _qr_measurement(key.N, key.p)

    def security_parameter(self, key: GMKey) -> int:
        return key.N

    def key_distribution(self, n: int):
        self._check_n(n)
        return [(self._key, 1.0)]

    def pubkey_density(self, key: GMKey) -> MixedState:
        return self.derive_pub(key)

    def ciphertext_density(self, key: GMKey, plaintext) -> MixedState:
        bit = self.check_plaintext(plaintext, key.N)
        diag = np.zeros(key.N)
        for r in units(key.N):
            diag[gm_ciphertext(key.N, key.y, bit, r)] += 1
        return MixedState(np.diag(diag / diag.sum()).astype(complex))

    def check_dim(self, state, n: int):
        if state.dim != self.N:
            raise ShapeError(f"expected dimension {self.N}, got {state.dim}")

    def __repr__(self):
        return f"ToyGMScheme(N={self.N}, y={self.y})"


class BrokenScheme(ToyGMScheme):
    """Negative control: encryption ignores the plaintext, decryption always says 0."""

    name = "broken"

    def encrypt(self, pubkey_copy, plaintext, rng, avoid=None) -> Ciphertext:
        self.check_plaintext(plaintext, pubkey_copy.dim)
        return super().encrypt(pubkey_copy, "0", rng, avoid)

    def decryption_measurement(self, key: GMKey) -> ProjectiveMeasurement:
        eye = np.eye(key.N, dtype=complex)
        return ProjectiveMeasurement((eye, np.zeros_like(eye)), BITS)

    def ciphertext_density(self, key, plaintext) -> MixedState:
        self.check_plaintext(plaintext, key.N)
        return super().ciphertext_density(key, "0")

    def __repr__(self):
        return f"BrokenScheme(N={self.N}, y={self.y})"
