"""Scheme, adversary and oracle abstractions shared by every game.

A scheme is the quadruple (G, M, E, D) with key generation split into a
classical decryption-key sampler (``keygen``) and a public-key copy factory
(``derive_pub``). Encryption consumes one public-key copy. Adversaries are
callbacks that see public-key copies, the challenge and oracle handles, never
the decryption key.
"""
from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from . import qsim
from .errors import CapacityError, DomainError, OverlapViolation, PolicyViolation, ShapeError
from .qsim import MixedState, ProjectiveMeasurement, PureState, QuantumState

Plaintext = str

#: decryption counts as deterministic when one outcome has at least this Born probability
DETERMINISTIC_ATOL = 1e-9
#: maximal amplitude a CCA2 phase-2 query may have on the challenge support
OVERLAP_ATOL = 1e-9


@dataclass(frozen=True)
class PlaintextSpace:
    n: int
    elements: tuple[Plaintext, ...]
    description: str = ""

    def __post_init__(self):
        elems = tuple(str(e) for e in self.elements)
        if not elems or len(set(elems)) != len(elems):
            raise DomainError("plaintext space must be a non-empty set")
        object.__setattr__(self, "elements", elems)

    def __contains__(self, item) -> bool:
        return str(item) in self.elements

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index(self, item) -> int:
        return self.elements.index(str(item))


@dataclass(frozen=True, eq=False)
class Ciphertext:
    state: QuantumState
    classical_part: str | None = None


class Scheme(ABC):
    """A quantum public-key cryptosystem with classical decryption keys."""

    name: str = "scheme"

    @abstractmethod
    def keygen(self, n: int, rng: np.random.Generator) -> Any:
        """Sample a classical decryption key."""

    @abstractmethod
    def derive_pub(self, key, rng: np.random.Generator) -> MixedState:
        """One public-key copy, sampled independently of every other copy."""

    @abstractmethod
    def plaintext_space(self, n: int) -> PlaintextSpace: ...

    @abstractmethod
    def encrypt(self, pubkey_copy: QuantumState, plaintext, rng: np.random.Generator) -> Ciphertext: ...

    @abstractmethod
    def decryption_measurement(self, key) -> ProjectiveMeasurement:
        """The measurement D_d; outcome labels are plaintexts."""

    def security_parameter(self, key) -> int:
        raise NotImplementedError

    def check_plaintext(self, plaintext, n: int) -> Plaintext:
        space = self.plaintext_space(n)
        if isinstance(plaintext, bool) or not isinstance(plaintext, (str, int, np.integer)):
            raise DomainError(f"plaintext {plaintext!r} is not in M_{n}")
        if str(plaintext) not in space:
            raise DomainError(f"plaintext {plaintext!r} is not in M_{n} = {space.elements}")
        return str(plaintext)

    def decrypt_distribution(self, key, ciphertext: Ciphertext) -> dict[Plaintext, float]:
        """Exact Born probabilities of every decryption outcome."""
        m = self.decryption_measurement(key)
        state = ciphertext.state if isinstance(ciphertext, Ciphertext) else ciphertext
        if state.dim != m.dim:
            raise ShapeError(f"ciphertext of dimension {state.dim}, decryption expects {m.dim}")
        probs = qsim.born_probabilities(m, state)
        return dict(zip(m.outcome_labels, (float(p) for p in probs)))

    def decrypt(self, key, ciphertext: Ciphertext, rng: np.random.Generator | None = None) -> Plaintext:
        """Run D_d. Honest ciphertexts decrypt deterministically; other states
        return a sampled outcome of the decryption measurement and need ``rng``."""
        dist = self.decrypt_distribution(key, ciphertext)
        best = max(dist, key=dist.get)
        if dist[best] >= 1.0 - DETERMINISTIC_ATOL:
            return best
        if rng is None:
            raise DomainError("ciphertext does not decrypt deterministically; pass rng to sample")
        labels = list(dist)
        probs = np.array([dist[x] for x in labels])
        return labels[int(rng.choice(len(labels), p=probs / probs.sum()))]

    # exact-ensemble hooks; schemes with enumerable key spaces override these
    def key_distribution(self, n: int) -> list[tuple[Any, float]]:
        raise CapacityError(f"{self.name} does not enumerate its key space")

    def pubkey_density(self, key) -> MixedState:
        raise CapacityError(f"{self.name} does not expose exact public-key densities")

    def ciphertext_density(self, key, plaintext) -> MixedState:
        raise CapacityError(f"{self.name} does not expose exact ciphertext densities")

    def compression(self, n: int):
        """Optional lossless channel applied per register; ``None`` if absent."""
        return None

    def __repr__(self):
        return f"{type(self).__name__}()"


def make_key_pair(scheme: Scheme, n: int, copies: int, rng: np.random.Generator):
    """Sample ``d`` first, then ``copies`` independent public-key copies from G'(d)."""
    if copies < 1:
        raise DomainError("at least one public-key copy is required")
    d = scheme.keygen(n, rng)
    first = scheme.derive_pub(d, rng)
    if copies * first.dim * first.dim > qsim.max_entries():
        raise CapacityError(f"{copies} copies of dimension {first.dim} exceed the entry cap")
    return d, [first] + [scheme.derive_pub(d, rng) for _ in range(copies - 1)]


def encrypt_with_copy(scheme: Scheme, pubkey_copy: QuantumState, plaintext, rng) -> Ciphertext:
    return scheme.encrypt(pubkey_copy, plaintext, rng)


def decrypt(scheme: Scheme, key, ciphertext: Ciphertext, rng=None) -> Plaintext:
    return scheme.decrypt(key, ciphertext, rng)


# -- attack models and oracles ---------------------------------------------


class AttackModel(str, enum.Enum):
    COA = "coa"
    CPA = "cpa"
    CCA1 = "cca1"
    CCA2 = "cca2"

    @classmethod
    def parse(cls, value) -> "AttackModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown attack model {value!r}") from None


@dataclass(frozen=True, eq=False)
class AttackModelPolicy:
    model: AttackModel
    phase: int = 1
    challenge_support_projector: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", AttackModel.parse(self.model))
        if self.phase not in (1, 2):
            raise DomainError(f"phase must be 1 or 2, got {self.phase}")

    @property
    def decryption_allowed(self) -> bool:
        return (self.model is AttackModel.CCA1 and self.phase == 1) or self.model is AttackModel.CCA2

    @property
    def encryption_oracle_allowed(self) -> bool:
        # COA exposes no oracle; copies of the public key still let the
        # adversary encrypt on its own
        return self.model is not AttackModel.COA


@dataclass(frozen=True)
class QueryRecord:
    kind: str  # "decrypt", "decrypt-superposition" or "encrypt"
    phase: int
    overlap: float = 0.0
    reason: str = ""


class OracleHandles:
    """Per-trial oracle access under an attack-model policy.

    Every answered query is appended to ``log``; refused ones go to
    ``rejected`` before the exception is raised.
    """

    def __init__(self, scheme: Scheme, key, policy: AttackModelPolicy, challenge: Ciphertext | None = None,
                 rng: np.random.Generator | None = None):
        self._scheme = scheme
        self._key = key
        self._rng = rng if rng is not None else np.random.default_rng(0)
        self.log: list[QueryRecord] = []
        self.rejected: list[QueryRecord] = []
        self.policy = policy
        self._challenge_state: QuantumState | None = None
        if policy.phase == 2:
            if challenge is None and policy.model is AttackModel.CCA2:
                raise DomainError("a CCA2 phase-2 policy needs the challenge ciphertext")
            if challenge is not None:
                self._set_challenge(challenge)

    def _set_challenge(self, challenge: Ciphertext):
        # the support projector is only built once a query needs it
        self._challenge_state = challenge.state
        self.policy = replace(self.policy, phase=2, challenge_support_projector=None)

    @property
    def challenge_support_projector(self) -> np.ndarray | None:
        if self._challenge_state is None:
            return None
        if self.policy.challenge_support_projector is None:
            self.policy = replace(self.policy,
                                  challenge_support_projector=qsim.support_projector(self._challenge_state))
        return self.policy.challenge_support_projector

    def begin_challenge_phase(self, challenge: Ciphertext):
        self._set_challenge(challenge)

    @property
    def phase(self) -> int:
        return self.policy.phase

    def _refuse(self, kind: str, reason: str, overlap: float = 0.0, exc=PolicyViolation):
        self.rejected.append(QueryRecord(kind, self.phase, overlap, reason))
        raise exc(reason)

    def _check_decryption(self, kind: str, cipher_state: QuantumState) -> float:
        if not self.policy.decryption_allowed:
            self._refuse(kind, f"decryption oracle unavailable under {self.policy.model.value.upper()} "
                               f"in phase {self.phase}")
        overlap = 0.0
        if self.policy.model is AttackModel.CCA2 and self.phase == 2:
            proj = self.challenge_support_projector
            overlap = math.sqrt(max(0.0, float(np.real(np.sum(proj * cipher_state.density.T)))))
            if overlap > OVERLAP_ATOL:
                self._refuse(kind, f"query has amplitude {overlap:.3g} on the challenge ciphertext",
                             overlap, OverlapViolation)
        return overlap

    def decrypt(self, ciphertext: Ciphertext) -> Plaintext:
        """Classical decryption query: the decryption measurement's outcome."""
        state = ciphertext.state if isinstance(ciphertext, Ciphertext) else ciphertext
        overlap = self._check_decryption("decrypt", state)
        out = self._scheme.decrypt(self._key, Ciphertext(state), self._rng)
        self.log.append(QueryRecord("decrypt", self.phase, overlap))
        return out

    def decrypt_superposition(self, query: QuantumState) -> QuantumState:
        """Apply ``|c>|z> -> |c>|z + D_d(c)>`` (addition mod |M_n|).

        ``query`` lives on (ciphertext register, answer register); the answer
        register has one level per plaintext in enumeration order. The map is
        built from the decryption projectors, so it is the coherent version of
        the decryption measurement.
        """
        m = self._scheme.decryption_measurement(self._key)
        cdim, adim = m.dim, len(m.projectors)
        if query.dim != cdim * adim:
            raise ShapeError(f"superposition query needs dimension {cdim}x{adim}, got {query.dim}")
        if query.dims != (cdim, adim):
            query = (PureState(query.amplitudes, (cdim, adim)) if isinstance(query, PureState)
                     else MixedState(query.density, (cdim, adim)))
        overlap = self._check_decryption("decrypt-superposition", qsim.partial_trace(query, [0]))
        u = np.zeros((cdim * adim, cdim * adim), dtype=complex)
        for shift, proj in enumerate(m.projectors):
            u += np.kron(proj, np.roll(np.eye(adim), shift, axis=0))
        out = qsim.apply_unitary(qsim.UnitaryOp(u), query)
        self.log.append(QueryRecord("decrypt-superposition", self.phase, overlap))
        return out

    def encrypt(self, plaintext) -> Ciphertext:
        """Encryption oracle (CPA and stronger); uses a fresh copy from G'(d)."""
        if not self.policy.encryption_oracle_allowed:
            self._refuse("encrypt", "no oracle is available under COA")
        copy = self._scheme.derive_pub(self._key, self._rng)
        out = self._scheme.encrypt(copy, plaintext, self._rng)
        self.log.append(QueryRecord("encrypt", self.phase))
        return out

    def counts(self) -> dict[str, int]:
        out = {"dec_phase1": 0, "dec_phase2": 0, "enc_phase1": 0, "enc_phase2": 0}
        for rec in self.log:
            prefix = "enc" if rec.kind == "encrypt" else "dec"
            out[f"{prefix}_phase{rec.phase}"] += 1
        return out


def make_oracles(scheme: Scheme, key, policy: AttackModelPolicy, challenge: Ciphertext | None = None,
                 rng: np.random.Generator | None = None) -> OracleHandles:
    return OracleHandles(scheme, key, policy, challenge, rng)


# -- adversaries -----------------------------------------------------------


@dataclass
class AdversaryView:
    """Everything an adversary may look at during one trial."""

    scheme: Scheme
    n: int
    pubkeys: list[MixedState]
    oracles: OracleHandles
    rng: np.random.Generator
    challenge: Ciphertext | None = None
    leakage: Any = None
    advice: PureState | None = None
    memo: Any = None

    def take_copy(self) -> MixedState:
        """Remove and return one public-key copy."""
        if not self.pubkeys:
            raise DomainError("no public-key copies left")
        return self.pubkeys.pop()

    def encrypt(self, plaintext) -> Ciphertext:
        """Encrypt with whatever the attack model offers: the encryption
        oracle when present, otherwise one of the adversary's own copies."""
        if self.oracles.policy.encryption_oracle_allowed:
            return self.oracles.encrypt(plaintext)
        return self.scheme.encrypt(self.take_copy(), plaintext, self.rng)

    def with_(self, **changes) -> "AdversaryView":
        out = replace(self, **changes)
        out.pubkeys = list(out.pubkeys)
        return out


@dataclass(frozen=True)
class Adversary:
    """An attack procedure plus optional quantum advice.

    ``prepare`` (if given) runs in phase 1 without the challenge; its return
    value is handed to ``attack`` as ``view.memo``.
    """

    attack: Callable[[AdversaryView], Any]
    advice: PureState | None = None
    prepare: Callable[[AdversaryView], Any] | None = None
    name: str = "adversary"


# -- correctness -------------------------------------------------------------


@dataclass(frozen=True)
class CorrectnessReport:
    scheme: str
    n: int
    min_success: float
    checks: int
    keys_checked: int
    worst_case: tuple[str, Plaintext] | None


def correctness_sweep(scheme: Scheme, n: int, key_samples: int | None = None, encryption_samples: int = 16,
                      seed: int = 0) -> CorrectnessReport:
    """Minimum exact decryption-success probability over keys and plaintexts.

    With ``key_samples=None`` the key space is enumerated when the scheme
    supports it. Each (key, plaintext) pair is checked on
    ``encryption_samples`` sampled ciphertexts and, where available, on the
    exact ciphertext density averaged over encryption randomness.
    """
    rng = np.random.default_rng(seed)
    if key_samples is None:
        try:
            keys = [k for k, _ in scheme.key_distribution(n)]
        except CapacityError:
            keys = [scheme.keygen(n, rng)]
    else:
        keys = [scheme.keygen(n, rng) for _ in range(key_samples)]
    space = scheme.plaintext_space(n)
    worst, worst_at, checks = math.inf, None, 0
    for key in keys:
        for alpha in space:
            cts = [scheme.encrypt(scheme.derive_pub(key, rng), alpha, rng) for _ in range(encryption_samples)]
            try:
                cts.append(Ciphertext(scheme.ciphertext_density(key, alpha)))
            except CapacityError:
                pass
            for ct in cts:
                p = scheme.decrypt_distribution(key, ct).get(alpha, 0.0)
                checks += 1
                if p < worst:
                    worst, worst_at = p, (repr(key), alpha)
    return CorrectnessReport(scheme.name, n, float(worst), checks, len(keys), worst_at)
