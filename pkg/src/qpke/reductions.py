"""Executable builders for the IND <-> SEM-Q and IND <-> NM equivalence proofs.

Each builder takes a breaker for one notion and returns a ``ReductionOutput``
holding a breaker for the other notion plus the auxiliary objects (message
distribution, target function, chosen messages, measurement, relation) the
construction needs. ``run_*`` pipelines measure the source breaker, build,
measure the result and check the promised inequality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import analysis, games, qsim
from .core import Adversary, AdversaryView, AttackModel, AttackModelPolicy, Ciphertext, Scheme
from .errors import CapacityError, DomainError, PolicyViolation
from .games import (
    DecryptionCheck,
    Flagged,
    IDENTITY_RELATION,
    LabelFunction,
    MessageDistribution,
    RelationSpec,
    as_bit,
)
from .qsim import ProjectiveMeasurement

DEFAULT_PROBE_TRIALS = 2000
#: |M_n| above which probing every message is refused
MAX_PROBED_MESSAGES = 256
TOLERANCE_SIGMAS = 3.0


@dataclass
class ReductionOutput:
    built_adversary: Adversary
    auxiliary: dict
    provenance: str

    def summary(self) -> dict:
        """JSON-friendly view of the auxiliary record."""
        out = {}
        for k, v in self.auxiliary.items():
            if isinstance(v, (str, int, float, bool)) or v is None:
                out[k] = v
            elif isinstance(v, MessageDistribution):
                out[k] = {"support": list(v.support), "weights": list(v.weights)}
            elif isinstance(v, (LabelFunction, RelationSpec)):
                out[k] = v.name
            elif isinstance(v, ProjectiveMeasurement):
                out[k] = {"outcomes": list(v.outcome_labels), "rank": [int(round(np.trace(p).real)) for p in v.projectors]}
            elif isinstance(v, dict):
                out[k] = v
        out["provenance"] = self.provenance
        return out


def sub_seed(seed: int, j: int) -> int:
    return int(np.random.SeedSequence([int(seed), 7919, j]).generate_state(1, np.uint64)[0])


def _distinct(scheme: Scheme, n: int, x, x_tilde):
    x, x_tilde = scheme.check_plaintext(x, n), scheme.check_plaintext(x_tilde, n)
    if x == x_tilde:
        raise DomainError("distinct pair required: x and x_tilde must differ")
    return x, x_tilde


def _bit_unit(x: str, x_tilde: str) -> LabelFunction:
    return games.basis_function({x: 1, x_tilde: 0}, 2, f"f[{x}->1,{x_tilde}->0]")


def probe_orientation(scheme, distinguisher, policy, n, x, x_tilde, trials, copies, seed):
    """Signed IND probe; ``flip`` is true when D favours ``x_tilde``."""
    rep = games.run_ind(scheme, distinguisher, policy, n, x, x_tilde, trials, copies, seed)
    signed = rep.adversary_score - rep.simulator_score
    return signed < 0, abs(signed), rep


# -- IND breaker -> SEM-Q breaker ----------------------------------------------


def ind_breaker_to_semq_breaker(distinguisher: Adversary, x, x_tilde, scheme: Scheme | None = None,
                                n: int | None = None, flip: bool | None = None, policy=AttackModel.CPA,
                                probe_trials: int = DEFAULT_PROBE_TRIALS, copies: int = games.DEFAULT_COPIES,
                                seed: int = 0) -> ReductionOutput:
    """SEM-Q adversary that reports D's bit as ``|1>`` (for ``x``) or ``|0>``.

    ``X_n`` is uniform on ``{x, x_tilde}`` and ``f(x) = |1>``,
    ``f(x_tilde) = |0>``, so a ciphertext-blind simulator scores 1/2 while
    the built adversary scores ``1/2 + delta/2``. If ``flip`` is not given
    the orientation is probed (needs ``scheme`` and ``n``).
    """
    x, x_tilde = str(x), str(x_tilde)
    if x == x_tilde:
        raise DomainError("distinct pair required: x and x_tilde must differ")
    probed = None
    if flip is None:
        if scheme is None or n is None:
            flip = False
        else:
            flip, probed, _ = probe_orientation(scheme, distinguisher, policy, n, x, x_tilde, probe_trials,
                                                copies, sub_seed(seed, 0))

    def attack(view: AdversaryView):
        b = as_bit(distinguisher.attack(view)) ^ int(flip)
        return qsim.basis_state(b, 2)

    prepare = distinguisher.prepare
    built = Adversary(attack, distinguisher.advice, prepare, f"semq<-{distinguisher.name}")
    aux = {
        "X_n": MessageDistribution.uniform((x, x_tilde)),
        "f": _bit_unit(x, x_tilde),
        "x_n": x,
        "x_tilde_n": x_tilde,
        "flipped": bool(flip),
    }
    if probed is not None:
        aux["probed_advantage"] = probed
    return ReductionOutput(built, aux, "IND breaker -> SEM-Q breaker via the balanced two-point distribution")


# -- SEM-Q breaker -> IND breaker ----------------------------------------------


def projector_measurement(target: qsim.PureState) -> ProjectiveMeasurement:
    p0 = target.density
    return ProjectiveMeasurement((p0, np.eye(target.dim) - p0), ("1", "0"))


def semq_breaker_to_ind_breaker(sem_adversary: Adversary, f: LabelFunction, h: LabelFunction | None, scheme: Scheme,
                                n: int, probe_trials: int = DEFAULT_PROBE_TRIALS, policy=AttackModel.CPA,
                                copies: int = games.DEFAULT_COPIES, seed: int = 0) -> ReductionOutput:
    """Distinguisher for ``(x_n, alpha')`` from a SEM-Q breaker.

    ``alpha'`` is the first plaintext. Every other plaintext ``alpha`` is
    probed by running the SEM-Q game with ``X = {alpha}`` against the
    substitution simulator; ``x_n`` maximizes the adversary-minus-simulator
    score. The distinguisher runs C with leakage ``h(x_n)`` and measures
    ``{|f(x_n)><f(x_n)|, I - |f(x_n)><f(x_n)|}``, answering 1 on the first.
    """
    space = scheme.plaintext_space(n).elements
    if len(space) > MAX_PROBED_MESSAGES:
        raise CapacityError(f"|M_n| = {len(space)} is too large to probe")
    alpha_prime = space[0]
    candidates = space[1:]
    diffs = {}
    for j, alpha in enumerate(candidates):
        rep = games.run_sem_q(scheme, sem_adversary, games.substitution_transform(alpha_prime), policy, n,
                              MessageDistribution.point(alpha), f, h, probe_trials, copies, sub_seed(seed, 10 + j))
        diffs[alpha] = rep.advantage_or_gap
    x_n = max(candidates, key=lambda a: (diffs[a], -candidates.index(a)))
    meas = projector_measurement(f(x_n))
    leak = h(x_n) if h is not None else None

    def attack(view: AdversaryView):
        out = sem_adversary.attack(view.with_(leakage=leak))
        state = games.as_quantum(out, meas.dim)
        label, _ = qsim.sample_outcome(meas, state, view.rng)
        return int(label)

    built = Adversary(attack, sem_adversary.advice, sem_adversary.prepare, f"ind<-{sem_adversary.name}")
    aux = {
        "x_n": x_n,
        "x_tilde_n": alpha_prime,
        "projector_measurement": meas,
        "f": f,
        "probe_differences": {k: float(v) for k, v in diffs.items()},
    }
    return ReductionOutput(built, aux, "SEM-Q breaker -> IND breaker via substitution and the f(x_n) projector")


def lift_classical(f: LabelFunction, space) -> tuple[LabelFunction, dict]:
    """``alpha -> |index of f(alpha)>`` over the distinct values of ``f`` on ``space``."""
    values = []
    for a in space:
        v = f(a)
        if v not in values:
            values.append(v)
    index = {v: i for i, v in enumerate(values)}
    dim = max(2, len(values) + 1)  # the extra level absorbs outputs outside f(M_n)
    fq = games.basis_function({a: index[f(a)] for a in space}, dim, f"lift({f.name})")
    return fq, {"index": index, "dim": dim}


def semc_breaker_to_ind_breaker(sem_adversary: Adversary, f: LabelFunction, h: LabelFunction | None, scheme: Scheme,
                                n: int, **kwargs) -> ReductionOutput:
    """Lift a classical target to basis states and reuse the SEM-Q builder."""
    space = scheme.plaintext_space(n).elements
    fq, info = lift_classical(f, space)

    def attack(view: AdversaryView):
        guess = games.as_plaintext(sem_adversary.attack(view))
        return qsim.basis_state(info["index"].get(guess, info["dim"] - 1), info["dim"])

    lifted = Adversary(attack, sem_adversary.advice, sem_adversary.prepare, f"lift({sem_adversary.name})")
    out = semq_breaker_to_ind_breaker(lifted, fq, h, scheme, n, **kwargs)
    out.provenance = "SEM-C breaker -> IND breaker (classical target lifted to basis states)"
    return out


# -- IND <-> NM -------------------------------------------------------------------


def ind_breaker_to_nm_breaker(distinguisher: Adversary, x, x_tilde, scheme: Scheme, n: int,
                              policy=AttackModel.CCA2, flip: bool | None = None, balanced: bool = False,
                              probe_trials: int = DEFAULT_PROBE_TRIALS, copies: int = games.DEFAULT_COPIES,
                              seed: int = 0) -> ReductionOutput:
    """NM adversary that re-encrypts whichever of ``x``, ``x_tilde`` D points to.

    With ``R`` the identity and ``X_n`` a point mass on ``x``, the simulator
    that substitutes an encryption of ``x_tilde`` loses exactly D's
    advantage. ``balanced=True`` uses the uniform two-point distribution
    instead, halving the gap. No decryption oracle is used.
    """
    x, x_tilde = _distinct(scheme, n, x, x_tilde)
    probed = None
    if flip is None:
        flip, probed, _ = probe_orientation(scheme, distinguisher, policy, n, x, x_tilde, probe_trials, copies,
                                            sub_seed(seed, 0))
    from .adversaries import fresh_ciphertext

    def attack(view: AdversaryView):
        b = as_bit(distinguisher.attack(view)) ^ int(flip)
        return fresh_ciphertext(view, x if b else x_tilde)

    built = Adversary(attack, distinguisher.advice, distinguisher.prepare, f"nm<-{distinguisher.name}")
    dist = MessageDistribution.uniform((x, x_tilde)) if balanced else MessageDistribution.point(x)
    aux = {
        "X_n": dist,
        "relation": IDENTITY_RELATION,
        "x_n": x,
        "x_tilde_n": x_tilde,
        "transform": games.substitution_transform(x_tilde),
        "flipped": bool(flip),
    }
    if probed is not None:
        aux["probed_advantage"] = probed
    return ReductionOutput(built, aux, "IND breaker -> NM breaker with the identity relation")


def nm_breaker_to_ind_breaker(nm_adversary: Adversary, x, x_tilde, relation: RelationSpec = IDENTITY_RELATION,
                              h: LabelFunction | None = None, via: str = "oracle") -> ReductionOutput:
    """Distinguisher that checks the relation on the NM adversary's output.

    ``via="oracle"`` recovers the plaintext with a decryption-oracle query
    (a refused query scores 0 and flags the trial); ``via="harness"`` lets
    the IND harness decrypt with the real key, so no oracle is needed.
    """
    x, x_tilde = str(x), str(x_tilde)
    if x == x_tilde:
        raise DomainError("distinct pair required: x and x_tilde must differ")
    if via not in ("oracle", "harness"):
        raise DomainError(f"via must be 'oracle' or 'harness', got {via!r}")
    leak = h(x) if h is not None else None

    def attack(view: AdversaryView):
        out = nm_adversary.attack(view.with_(leakage=leak) if h is not None else view)
        if via == "harness":
            return DecryptionCheck(out, x)
        if not isinstance(out, Ciphertext):
            return Flagged(0, "adversary output is not a ciphertext")
        try:
            plain = view.oracles.decrypt(out)
        except PolicyViolation as exc:
            return Flagged(0, str(exc))
        return int(relation(x, plain))

    built = Adversary(attack, nm_adversary.advice, nm_adversary.prepare, f"ind<-{nm_adversary.name}")
    aux = {"relation": relation, "x_n": x, "x_tilde_n": x_tilde, "via": via,
           "X_n": MessageDistribution.uniform((x, x_tilde))}
    return ReductionOutput(built, aux, "NM breaker -> IND breaker by checking R on the decrypted output")


# -- pipelines -------------------------------------------------------------------


@dataclass
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool
    reports: dict = field(default_factory=dict)
    reduction: ReductionOutput | None = None

    def to_dict(self) -> dict:
        return {"inequality": self.name, "lhs": self.lhs, "rhs": self.rhs, "passed": self.passed}


def _check(name, lhs, rhs, reports, red):
    return InequalityCheck(name, float(lhs), float(rhs), bool(lhs >= rhs), reports, red)


def run_ind_to_semq(scheme, distinguisher, n, x, x_tilde, trials, copies, seed, policy=AttackModel.CPA,
                    workers=None) -> InequalityCheck:
    base = games.run_ind(scheme, distinguisher, policy, n, x, x_tilde, trials, copies, sub_seed(seed, 1), workers)
    signed = base.adversary_score - base.simulator_score
    red = ind_breaker_to_semq_breaker(distinguisher, x, x_tilde, flip=signed < 0)
    aux = red.auxiliary
    rep = games.run_sem_q(scheme, red.built_adversary, games.default_transform(scheme, n), policy, n, aux["X_n"],
                          aux["f"], None, trials, copies, sub_seed(seed, 2), workers)
    delta = abs(signed)
    tol = TOLERANCE_SIGMAS * analysis.combined_ci(base.ci95_halfwidth, rep.ci95_halfwidth)
    return _check("semq_score >= 1/2 + delta/2 - 3*cCI", rep.adversary_score, 0.5 + delta / 2 - tol,
                  {"source": base, "built": rep}, red)


def run_semq_to_ind(scheme, sem_adversary, n, trials, copies, seed, f=None, h=None, policy=AttackModel.CPA,
                    probe_trials=DEFAULT_PROBE_TRIALS, workers=None) -> InequalityCheck:
    space = scheme.plaintext_space(n).elements
    f = f or games.index_function(space)
    base = games.run_sem_q(scheme, sem_adversary, games.default_transform(scheme, n), policy, n,
                           MessageDistribution.uniform(space), f, h, trials, copies, sub_seed(seed, 1), workers)
    red = semq_breaker_to_ind_breaker(sem_adversary, f, h, scheme, n, probe_trials, policy, copies, sub_seed(seed, 2))
    aux = red.auxiliary
    rep = games.run_ind(scheme, red.built_adversary, policy, n, aux["x_n"], aux["x_tilde_n"], trials, copies,
                        sub_seed(seed, 3), workers)
    tol = TOLERANCE_SIGMAS * analysis.combined_ci(base.ci95_halfwidth, rep.ci95_halfwidth)
    return _check("ind_advantage >= gamma - 3*cCI", rep.advantage_or_gap, base.advantage_or_gap - tol,
                  {"source": base, "built": rep}, red)


def run_ind_to_nm(scheme, distinguisher, n, x, x_tilde, trials, copies, seed, policy=AttackModel.CCA2,
                  workers=None) -> InequalityCheck:
    base = games.run_ind(scheme, distinguisher, policy, n, x, x_tilde, trials, copies, sub_seed(seed, 1), workers)
    signed = base.adversary_score - base.simulator_score
    red = ind_breaker_to_nm_breaker(distinguisher, x, x_tilde, scheme, n, policy, flip=signed < 0)
    aux = red.auxiliary
    rep = games.run_nm(scheme, red.built_adversary, aux["transform"], policy, n, aux["X_n"], None, aux["relation"],
                       trials, copies, sub_seed(seed, 2), workers)
    tol = TOLERANCE_SIGMAS * analysis.combined_ci(base.ci95_halfwidth, rep.ci95_halfwidth)
    return _check("nm_gap >= ind_advantage - 3*cCI", rep.advantage_or_gap, abs(signed) - tol,
                  {"source": base, "built": rep}, red)


def run_nm_to_ind(scheme, nm_adversary, n, x, x_tilde, trials, copies, seed, policy=AttackModel.CCA2,
                  via="oracle", workers=None) -> InequalityCheck:
    red = nm_breaker_to_ind_breaker(nm_adversary, x, x_tilde, via=via)
    aux = red.auxiliary
    base = games.run_nm(scheme, nm_adversary, games.default_transform(scheme, n), policy, n, aux["X_n"], None,
                        aux["relation"], trials, copies, sub_seed(seed, 1), workers)
    rep = games.run_ind(scheme, red.built_adversary, policy, n, x, x_tilde, trials, copies, sub_seed(seed, 2),
                        workers)
    tol = TOLERANCE_SIGMAS * analysis.combined_ci(base.ci95_halfwidth, rep.ci95_halfwidth)
    return _check("ind_advantage >= nm_gap - 3*cCI", rep.advantage_or_gap, base.advantage_or_gap - tol,
                  {"source": base, "built": rep}, red)
