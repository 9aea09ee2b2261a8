"""Monte-Carlo security experiments: OW, IND, SEM-C, SEM-Q and NM.

Every trial draws its own random streams from ``(seed, branch, index)``, so
reports do not depend on execution order or on the number of workers.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import analysis, qsim
from .core import (
    AttackModel,
    AttackModelPolicy,
    Adversary,
    AdversaryView,
    Ciphertext,
    OracleHandles,
    Scheme,
    OVERLAP_ATOL,
)
from .errors import CapacityError, DomainError, ShapeError, TransformError
from .qsim import MixedState, PureState

DEFAULT_COPIES = 4
#: an NM output counts as a valid ciphertext of a' when it decrypts to a' with this probability
VALIDITY_ATOL = 1e-6

BRANCH_ADVERSARY, BRANCH_SIMULATOR = 0, 1


# -- domain types ----------------------------------------------------------


@dataclass(frozen=True)
class MessageDistribution:
    support: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        support = tuple(str(s) for s in self.support)
        weights = tuple(float(w) for w in self.weights)
        if not support or len(support) != len(weights):
            raise DomainError("support and weights must be non-empty and of equal length")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError(f"weights {weights} do not form a probability vector")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, support: Sequence) -> "MessageDistribution":
        support = tuple(support)
        return cls(support, tuple(1.0 / len(support) for _ in support))

    @classmethod
    def point(cls, x) -> "MessageDistribution":
        return cls((x,), (1.0,))

    def sample(self, rng: np.random.Generator) -> str:
        if len(self.support) == 1:
            return self.support[0]
        u = rng.random()
        acc = 0.0
        for s, w in zip(self.support, self.weights):
            acc += w
            if u < acc:
                return s
        return next(s for s, w in zip(reversed(self.support), reversed(self.weights)) if w > 0)

    def check_within(self, scheme: Scheme, n: int):
        for s in self.support:
            scheme.check_plaintext(s, n)


@dataclass(frozen=True)
class LabelFunction:
    """A target or leakage function. Quantum ones return a ``PureState``."""

    kind: str
    eval: Callable[[str], Any]
    name: str = "f"

    def __post_init__(self):
        if self.kind not in ("classical", "quantum"):
            raise DomainError(f"kind must be 'classical' or 'quantum', got {self.kind!r}")

    def __call__(self, alpha):
        out = self.eval(str(alpha))
        if self.kind == "quantum" and not isinstance(out, PureState):
            raise ShapeError(f"quantum label function {self.name} returned {type(out).__name__}")
        if self.kind == "classical" and isinstance(out, (PureState, MixedState)):
            raise ShapeError(f"classical label function {self.name} returned a quantum state")
        return out


def classical_function(fn: Callable[[str], str], name: str = "f") -> LabelFunction:
    return LabelFunction("classical", lambda a: str(fn(a)), name)


def basis_function(mapping: dict, dim: int | None = None, name: str = "f") -> LabelFunction:
    """Quantum label function ``alpha -> |mapping[alpha]>``."""
    mapping = {str(k): int(v) for k, v in mapping.items()}
    dim = dim or max(2, max(mapping.values()) + 1)
    states = {k: qsim.basis_state(v, dim) for k, v in mapping.items()}
    return LabelFunction("quantum", lambda a: states[a], name)


def index_function(elements: Sequence[str], name: str = "f") -> LabelFunction:
    """``alpha -> |index of alpha>`` over an enumerated plaintext space."""
    return basis_function({e: i for i, e in enumerate(elements)}, max(2, len(elements)), name)


IDENTITY_LEAKAGE = classical_function(lambda a: a, "identity")
EMPTY_LEAKAGE = classical_function(lambda a: "", "empty")


@dataclass(frozen=True)
class RelationSpec:
    eval: Callable[[str, str], bool]
    name: str = "R"

    def __call__(self, a, b) -> bool:
        return bool(self.eval(str(a), str(b)))


IDENTITY_RELATION = RelationSpec(lambda a, b: a == b, "identity")
FALSE_RELATION = RelationSpec(lambda a, b: False, "always-false")


@dataclass(frozen=True)
class DecryptionCheck:
    """Outcome asking the IND harness to decrypt ``ciphertext`` with the real key.

    The harness outputs 1 iff it decrypts to ``target`` as a valid ciphertext
    that does not overlap the challenge. Used by harness-scored reductions.
    """

    ciphertext: Any
    target: str


@dataclass(frozen=True)
class Flagged:
    """Outcome wrapper marking a trial the adversary itself had to abort."""

    outcome: Any
    reason: str = ""


Transform = Callable[[Adversary, np.random.Generator], Adversary]


REPORT_FIELDS = (
    "advantage_or_gap",
    "adversary_score",
    "attack_model",
    "ci95_halfwidth",
    "notion",
    "oracle_query_counts",
    "pubkey_copies",
    "seed",
    "simulator_score",
    "trials",
)


@dataclass
class GameReport:
    notion: str
    attack_model: str
    trials: int
    adversary_score: float
    simulator_score: float | None
    advantage_or_gap: float
    ci95_halfwidth: float
    seed: int
    oracle_query_counts: dict
    pubkey_copies: int
    flagged_trials: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in REPORT_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def reported_halfwidth(self) -> float:
        return min(1.0, self.ci95_halfwidth)


# -- outcome conversion ------------------------------------------------------


def as_bit(outcome) -> int:
    if isinstance(outcome, (bool, np.bool_)):
        return int(outcome)
    if isinstance(outcome, (int, np.integer)) and int(outcome) in (0, 1):
        return int(outcome)
    if isinstance(outcome, str) and outcome in ("0", "1"):
        return int(outcome)
    raise DomainError(f"distinguisher output {outcome!r} is not a bit")


def as_plaintext(outcome) -> str | None:
    if isinstance(outcome, (str, int, np.integer)) and not isinstance(outcome, bool):
        return str(outcome)
    return None


def as_quantum(outcome, dim: int):
    if isinstance(outcome, Ciphertext):
        outcome = outcome.state
    if isinstance(outcome, (PureState, MixedState)):
        return outcome
    if isinstance(outcome, (int, np.integer, str)) and not isinstance(outcome, bool):
        try:
            return qsim.basis_state(int(outcome), dim)
        except ValueError:
            raise ShapeError(f"classical outcome {outcome!r} cannot be read as a basis state of dim {dim}")
    raise ShapeError(f"outcome of type {type(outcome).__name__} is not a quantum state")


# -- transforms ------------------------------------------------------------


def substitution_transform(alpha_prime) -> Transform:
    """C' runs C on a fresh encryption of ``alpha_prime`` made from one of its copies."""

    def transform(adv: Adversary, rng=None) -> Adversary:
        def attack(view: AdversaryView):
            if not view.pubkeys:
                raise TransformError("substitution needs a public-key copy to encrypt with")
            fake = view.scheme.encrypt(view.take_copy(), alpha_prime, view.rng)
            return adv.attack(view.with_(challenge=fake))

        return Adversary(attack, adv.advice, adv.prepare, f"subst[{alpha_prime}]({adv.name})")

    transform.alpha_prime = alpha_prime
    transform.extra_copies = 1
    return transform


def constant_transform(outcome_fn: Callable[[AdversaryView], Any], name: str = "blind") -> Transform:
    """Simulator that ignores C and computes its answer from what it sees."""

    def transform(adv: Adversary, rng=None) -> Adversary:
        return Adversary(outcome_fn, adv.advice, None, name)

    transform.extra_copies = 0
    return transform


def default_transform(scheme: Scheme, n: int) -> Transform:
    return substitution_transform(scheme.plaintext_space(n).elements[0])


# -- trial machinery ---------------------------------------------------------


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def trial_streams(seed: int, branch: int, index: int):
    """(harness, adversary, oracle) generators for one trial."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence([seed, branch, index]).spawn(3))


@dataclass
class TrialResult:
    score: float
    counts: dict
    flagged: bool = False


def _check_copies(copies: int):
    if copies < 0:
        raise DomainError("copies must be non-negative")


def _run_trials(fn: Callable[[int], TrialResult], trials: int, workers: int | None) -> list[TrialResult]:
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(trials)))
    return [fn(i) for i in range(trials)]


def _aggregate(results: Sequence[TrialResult]):
    total = 0.0
    counts = {"dec_phase1": 0, "dec_phase2": 0, "enc_phase1": 0, "enc_phase2": 0}
    flagged = 0
    for r in results:
        total += r.score
        for k, v in r.counts.items():
            counts[k] += v
        flagged += r.flagged
    return total, counts, flagged


def play(scheme: Scheme, adversary: Adversary, policy: AttackModelPolicy, n: int, copies: int, alpha,
         streams, *, show_challenge: bool = True, leakage=None):
    """Run one experiment trial and return ``(outcome, key, challenge, oracles)``.

    The key and a challenge encryption of ``alpha`` are always drawn so that
    both sides of a simulation game see the same harness randomness layout;
    the challenge is withheld from the adversary unless ``show_challenge``.
    """
    h_rng, a_rng, o_rng = streams
    key = scheme.keygen(n, h_rng)
    pubkeys = [scheme.derive_pub(key, h_rng) for _ in range(copies)]
    if pubkeys and copies * pubkeys[0].dim ** 2 > qsim.max_entries():
        raise CapacityError(f"{copies} public-key copies exceed the entry cap")
    challenge = scheme.encrypt(scheme.derive_pub(key, h_rng), alpha, h_rng)
    oracles = OracleHandles(scheme, key, AttackModelPolicy(policy.model, 1), rng=o_rng)
    view = AdversaryView(scheme, n, pubkeys, oracles, a_rng, leakage=leakage, advice=adversary.advice)
    if adversary.prepare is not None:
        view.memo = adversary.prepare(view)
    oracles.begin_challenge_phase(challenge)
    if show_challenge:
        view.challenge = challenge
    return adversary.attack(view), key, challenge, oracles


def _unwrap(outcome):
    if isinstance(outcome, Flagged):
        return outcome.outcome, True
    return outcome, False


def _report(notion, policy, trials, adv_score, sim_score, gap, seed, counts, copies, flagged):
    return GameReport(
        notion=notion,
        attack_model=policy.model.value,
        trials=trials,
        adversary_score=float(adv_score),
        simulator_score=None if sim_score is None else float(sim_score),
        advantage_or_gap=float(gap),
        ci95_halfwidth=analysis.hoeffding_halfwidth(trials),
        seed=seed,
        oracle_query_counts=counts,
        pubkey_copies=copies,
        flagged_trials=flagged,
    )


def _as_policy(policy) -> AttackModelPolicy:
    if isinstance(policy, AttackModelPolicy):
        return policy
    return AttackModelPolicy(AttackModel.parse(policy))


# -- games -----------------------------------------------------------------


def run_ow(scheme: Scheme, adversary: Adversary, policy, n: int, trials: int, copies: int = DEFAULT_COPIES,
           seed: int = 0, workers: int | None = None) -> GameReport:
    """One-wayness: recover a uniformly random plaintext from its encryption."""
    policy, seed = _as_policy(policy), _check_seed(seed)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    _check_copies(copies)
    space = scheme.plaintext_space(n)
    dist = MessageDistribution.uniform(space.elements)

    def trial(i):
        streams = trial_streams(seed, BRANCH_ADVERSARY, i)
        alpha = dist.sample(streams[0])
        outcome, _, _, oracles = play(scheme, adversary, policy, n, copies, alpha, streams)
        outcome, flagged = _unwrap(outcome)
        return TrialResult(float(as_plaintext(outcome) == alpha), oracles.counts(), flagged)

    total, counts, flagged = _aggregate(_run_trials(trial, trials, workers))
    score = total / trials
    return _report("ow", policy, trials, score, None, score - 1.0 / len(space), seed, counts, copies, flagged)


def _ind_outcome_bit(scheme, key, challenge, outcome) -> int:
    if isinstance(outcome, DecryptionCheck):
        return int(_nm_success(scheme, key, challenge, outcome.ciphertext, outcome.target, IDENTITY_RELATION)[0])
    return as_bit(outcome)


def run_ind(scheme: Scheme, distinguisher: Adversary, policy, n: int, x, y, trials: int,
            copies: int = DEFAULT_COPIES, seed: int = 0, workers: int | None = None) -> GameReport:
    """Indistinguishability on the pair ``(x, y)``.

    The first ``ceil(trials/2)`` trials encrypt ``x`` and the rest ``y``, each
    half with its own seed branch. ``adversary_score`` and ``simulator_score``
    hold ``Pr[D=1|x]`` and ``Pr[D=1|y]``.
    """
    policy, seed = _as_policy(policy), _check_seed(seed)
    x, y = scheme.check_plaintext(x, n), scheme.check_plaintext(y, n)
    if x == y:
        raise DomainError("distinct pair required: x and y must differ")
    if trials < 2:
        raise DomainError("trials must be at least 2 (one per branch)")
    _check_copies(copies)
    tx = (trials + 1) // 2
    ty = trials - tx

    def make(branch, alpha):
        def trial(i):
            streams = trial_streams(seed, branch, i)
            outcome, key, challenge, oracles = play(scheme, distinguisher, policy, n, copies, alpha, streams)
            outcome, flagged = _unwrap(outcome)
            return TrialResult(float(_ind_outcome_bit(scheme, key, challenge, outcome)), oracles.counts(), flagged)

        return trial

    sx, cx, fx = _aggregate(_run_trials(make(BRANCH_ADVERSARY, x), tx, workers))
    sy, cy, fy = _aggregate(_run_trials(make(BRANCH_SIMULATOR, y), ty, workers))
    px, py = sx / tx, sy / ty
    counts = {k: cx[k] + cy[k] for k in cx}
    return _report("ind", policy, trials, px, py, abs(px - py), seed, counts, copies, fx + fy)


def _simulation_game(notion, scheme, adversary, transform, policy, n, dist, leak, score_fn, trials, copies, seed,
                     workers):
    policy, seed = _as_policy(policy), _check_seed(seed)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    _check_copies(copies)
    dist.check_within(scheme, n)
    transform = transform or default_transform(scheme, n)
    extra = getattr(transform, "extra_copies", 1)

    def make(branch):
        def trial(i):
            streams = trial_streams(seed, branch, i)
            alpha = dist.sample(streams[0])
            leakage = leak(alpha) if leak is not None else None
            if branch == BRANCH_ADVERSARY:
                adv, show, t = adversary, True, copies
            else:
                try:
                    adv = transform(adversary, streams[1])
                except Exception as exc:
                    if isinstance(exc, TransformError):
                        raise
                    raise TransformError(f"transform failed: {exc}") from exc
                show, t = False, copies + extra
            outcome, key, challenge, oracles = play(scheme, adv, policy, n, t, alpha, streams,
                                                    show_challenge=show, leakage=leakage)
            outcome, flagged = _unwrap(outcome)
            score, bad = score_fn(alpha, outcome, key, challenge)
            return TrialResult(score, oracles.counts(), flagged or bad)

        return trial

    sa, ca, fa = _aggregate(_run_trials(make(BRANCH_ADVERSARY), trials, workers))
    ss, cs, fs = _aggregate(_run_trials(make(BRANCH_SIMULATOR), trials, workers))
    counts = {k: ca[k] + cs[k] for k in ca}
    pa, ps = sa / trials, ss / trials
    return _report(notion, policy, trials, pa, ps, pa - ps, seed, counts, copies, fa + fs)


def run_sem_c(scheme: Scheme, adversary: Adversary, transform: Transform | None, policy, n: int,
              X_n: MessageDistribution, f: LabelFunction, h: LabelFunction | None, trials: int,
              copies: int = DEFAULT_COPIES, seed: int = 0, workers: int | None = None) -> GameReport:
    """Semantic c-security: predict the classical ``f(alpha)``."""
    if f.kind != "classical":
        raise DomainError("SEM-C needs a classical target function")

    def score(alpha, outcome, key, challenge):
        return float(as_plaintext(outcome) == f(alpha)), False

    return _simulation_game("sem-c", scheme, adversary, transform, policy, n, X_n, h, score, trials, copies, seed,
                            workers)


def run_sem_q(scheme: Scheme, adversary: Adversary, transform: Transform | None, policy, n: int,
              X_n: MessageDistribution, f: LabelFunction, h: LabelFunction | None, trials: int,
              copies: int = DEFAULT_COPIES, seed: int = 0, workers: int | None = None) -> GameReport:
    """Semantic q-security: the score is the overlap ``<f(alpha)|rho_out|f(alpha)>``."""
    if f.kind != "quantum":
        raise DomainError("SEM-Q needs a quantum target function")

    def score(alpha, outcome, key, challenge):
        target = f(alpha)
        out = as_quantum(outcome, target.dim)
        if out.dim != target.dim:
            raise ShapeError(f"adversary output has dimension {out.dim}, f(alpha) has {target.dim}")
        return min(1.0, max(0.0, qsim.fidelity_with_pure(target, out))), False

    return _simulation_game("sem-q", scheme, adversary, transform, policy, n, X_n, h, score, trials, copies, seed,
                            workers)


def _nm_success(scheme, key, challenge, output, alpha, relation) -> tuple[bool, bool]:
    """``(success, flagged)`` for one NM output against the challenge of ``alpha``."""
    if isinstance(output, Ciphertext):
        state = output.state
    elif isinstance(output, (PureState, MixedState)):
        state = output
    else:
        return False, True
    m = scheme.decryption_measurement(key)
    if state.dim != m.dim:
        return False, True
    if qsim.overlap_with_support(challenge.state, state) > OVERLAP_ATOL:
        return False, True
    dist = scheme.decrypt_distribution(key, Ciphertext(state))
    best = max(dist, key=dist.get)
    if dist[best] < 1.0 - VALIDITY_ATOL:
        return False, False
    return relation(alpha, best), False


def run_nm(scheme: Scheme, adversary: Adversary, transform: Transform | None, policy, n: int,
           X_n: MessageDistribution, h: LabelFunction | None, R: RelationSpec, trials: int,
           copies: int = DEFAULT_COPIES, seed: int = 0, workers: int | None = None) -> GameReport:
    """Non-malleability: output a valid ciphertext of some ``a'`` with ``R(alpha, a')``.

    Outputs overlapping the challenge support, and outputs that are not
    ciphertexts, fail and are flagged. The simulator side is judged against
    a challenge it never sees.
    """

    def score(alpha, outcome, key, challenge):
        ok, flagged = _nm_success(scheme, key, challenge, outcome, alpha, R)
        return float(ok), flagged

    return _simulation_game("nm", scheme, adversary, transform, policy, n, X_n, h, score, trials, copies, seed,
                            workers)


NOTIONS = ("ow", "ind", "sem-c", "sem-q", "nm")
