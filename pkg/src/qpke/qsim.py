"""Dense simulation of small quantum registers.

States are immutable. A state carries its register factorization (``dims``)
so that subsystem operations are unambiguous; ``prod(dims)`` is the total
dimension. Every operation that needs randomness takes a
``numpy.random.Generator``.
"""
from __future__ import annotations

import contextlib
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CapacityError, InconsistentMeasurementError, InvalidStateError, ShapeError

#: tolerance for structural invariants (normalization, hermiticity, ...)
ATOL = 1e-9
#: tolerance for derived inequalities (triangle inequality, product checks)
DERIVED_ATOL = 1e-8
#: default cap on the number of stored matrix (or vector) entries
DEFAULT_MAX_ENTRIES = 2**20

_config = {
    "max_entries": DEFAULT_MAX_ENTRIES,
    "debug": os.environ.get("QPKE_DEBUG", "") not in ("", "0"),
}


def max_entries() -> int:
    return _config["max_entries"]


@contextlib.contextmanager
def capacity(entries: int):
    """Temporarily change the entry cap."""
    old = _config["max_entries"]
    _config["max_entries"] = int(entries)
    try:
        yield
    finally:
        _config["max_entries"] = old


def debug_enabled() -> bool:
    return _config["debug"]


@contextlib.contextmanager
def debug_checks(enabled: bool = True):
    """Enable the expensive post-construction checks (PSD via eigenvalues)."""
    old = _config["debug"]
    _config["debug"] = enabled
    try:
        yield
    finally:
        _config["debug"] = old


def check_capacity(dim: int, *, pure: bool = False) -> None:
    entries = dim if pure else dim * dim
    if entries > _config["max_entries"]:
        kind = "vector" if pure else "matrix"
        raise CapacityError(
            f"{kind} of dimension {dim} needs {entries} entries; cap is {_config['max_entries']}"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _normalize_dims(dims, total: int) -> tuple[int, ...]:
    if dims is None:
        return (total,)
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ShapeError(f"register dimensions must be positive, got {dims}")
    if math.prod(dims) != total:
        raise ShapeError(f"register dimensions {dims} do not multiply to {total}")
    return dims


def _normalize_labels(labels, total: int):
    if labels is None:
        return None
    labels = tuple(str(x) for x in labels)
    if len(labels) != total:
        raise ShapeError(f"{len(labels)} labels for a {total}-dimensional space")
    return labels


@dataclass(frozen=True, eq=False)
class PureState:
    """A normalized state vector."""

    amplitudes: np.ndarray
    dims: tuple[int, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 1:
            raise InvalidStateError("a state needs at least one amplitude")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise InvalidStateError(f"amplitudes have squared norm {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "dims", _normalize_dims(self.dims, amps.size))
        object.__setattr__(self, "labels", _normalize_labels(self.labels, amps.size))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_mixed(self) -> "MixedState":
        return MixedState(self.density, self.dims, self.labels)

    def __repr__(self):
        return f"PureState(dim={self.dim}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class MixedState:
    """A density matrix: Hermitian, unit trace, positive semidefinite."""

    density: np.ndarray
    dims: tuple[int, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        rho = np.array(self.density, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise InvalidStateError(f"density must be a square matrix, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > ATOL:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > ATOL:
            raise InvalidStateError(f"density matrix has trace {tr!r}, expected 1")
        if _config["debug"]:
            lo = np.linalg.eigvalsh(rho).min()
            if lo < -ATOL:
                raise InvalidStateError(f"density matrix has negative eigenvalue {lo!r}")
        object.__setattr__(self, "density", _frozen(rho))
        object.__setattr__(self, "dims", _normalize_dims(self.dims, rho.shape[0]))
        object.__setattr__(self, "labels", _normalize_labels(self.labels, rho.shape[0]))

    @property
    def dim(self) -> int:
        return self.density.shape[0]

    def to_mixed(self) -> "MixedState":
        return self

    def purity(self) -> float:
        return float(np.real(np.vdot(self.density, self.density)))

    def __repr__(self):
        return f"MixedState(dim={self.dim}, dims={self.dims})"


QuantumState = Union[PureState, MixedState]


def density_of(s: QuantumState) -> np.ndarray:
    return s.density


def as_mixed(s: QuantumState) -> MixedState:
    return s.to_mixed()


def basis_state(index: int, dim: int, labels: Sequence[str] | None = None) -> PureState:
    if not 0 <= index < dim:
        raise ShapeError(f"basis index {index} outside dimension {dim}")
    check_capacity(dim, pure=True)
    amps = np.zeros(dim, dtype=complex)
    amps[index] = 1.0
    return PureState(amps, labels=labels)


def qubit_labels(n_qubits: int = 1) -> tuple[str, ...]:
    return tuple(format(i, f"0{n_qubits}b") for i in range(2**n_qubits))


def maximally_mixed(dim: int) -> MixedState:
    check_capacity(dim)
    return MixedState(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    matrix: np.ndarray

    def __post_init__(self):
        u = np.array(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ShapeError(f"unitary must be square, got shape {u.shape}")
        err = np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]))
        if err > ATOL:
            raise InvalidStateError(f"matrix is not unitary (|UU^dag - I|_F = {err:.3g})")
        object.__setattr__(self, "matrix", _frozen(u))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_measurement_ops(ops, kind: str):
    if not ops:
        raise InvalidStateError(f"a {kind} needs at least one operator")
    dim = ops[0].shape[0]
    for op in ops:
        if op.shape != (dim, dim):
            raise ShapeError(f"{kind} operators must all be {dim}x{dim}")
        if np.linalg.norm(op - op.conj().T) > ATOL:
            raise InvalidStateError(f"{kind} operator is not Hermitian")
    total = sum(ops)
    if np.linalg.norm(total - np.eye(dim)) > ATOL:
        raise InvalidStateError(f"{kind} operators do not sum to the identity")
    return dim


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    projectors: tuple
    outcome_labels: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(_frozen(np.array(p, dtype=complex)) for p in self.projectors)
        labels = tuple(str(x) for x in self.outcome_labels)
        if len(labels) != len(ops):
            raise ShapeError("one outcome label per projector is required")
        _check_measurement_ops(ops, "projective measurement")
        for p in ops:
            if np.linalg.norm(p @ p - p) > ATOL:
                raise InvalidStateError("measurement operator is not idempotent")
        object.__setattr__(self, "projectors", ops)
        object.__setattr__(self, "outcome_labels", labels)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def effects(self):
        return self.projectors


@dataclass(frozen=True, eq=False)
class POVM:
    """General measurement; post-measurement states use the Lüders instrument."""

    effects: tuple
    outcome_labels: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(_frozen(np.array(e, dtype=complex)) for e in self.effects)
        labels = tuple(str(x) for x in self.outcome_labels)
        if len(labels) != len(ops):
            raise ShapeError("one outcome label per effect is required")
        _check_measurement_ops(ops, "POVM")
        if _config["debug"]:
            for e in ops:
                if np.linalg.eigvalsh(e).min() < -ATOL:
                    raise InvalidStateError("POVM effect is not positive semidefinite")
        object.__setattr__(self, "effects", ops)
        object.__setattr__(self, "outcome_labels", labels)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]


Measurement = Union[ProjectiveMeasurement, POVM]


def computational_measurement(dim: int, labels: Sequence[str] | None = None) -> ProjectiveMeasurement:
    check_capacity(dim)
    labels = labels if labels is not None else [str(i) for i in range(dim)]
    projs = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1.0
        projs.append(p)
    return ProjectiveMeasurement(tuple(projs), tuple(labels))


# -- composition -----------------------------------------------------------


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    """Kronecker product; pure stays pure only if both factors are pure."""
    dim = a.dim * b.dim
    labels = None
    if a.labels is not None and b.labels is not None:
        labels = tuple(x + y for x in a.labels for y in b.labels)
    dims = a.dims + b.dims
    if isinstance(a, PureState) and isinstance(b, PureState):
        check_capacity(dim, pure=True)
        return PureState(np.kron(a.amplitudes, b.amplitudes), dims, labels)
    check_capacity(dim)
    return MixedState(np.kron(a.density, b.density), dims, labels)


def tensor_all(states: Iterable[QuantumState]) -> QuantumState:
    states = list(states)
    if not states:
        raise ShapeError("tensor_all needs at least one state")
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def _register_span(dims: tuple[int, ...], target) -> tuple[int, int]:
    if target is None:
        return 0, len(dims)
    if isinstance(target, range):
        if target.step != 1:
            raise ShapeError("target registers must be contiguous")
        start, stop = target.start, target.stop
    elif isinstance(target, int):
        start, stop = target, target + 1
    else:
        idx = sorted(int(i) for i in target)
        if not idx or idx != list(range(idx[0], idx[-1] + 1)):
            raise ShapeError(f"target registers {target!r} are not contiguous")
        start, stop = idx[0], idx[-1] + 1
    if not 0 <= start < stop <= len(dims):
        raise ShapeError(f"target registers {start}..{stop - 1} outside factorization {dims}")
    return start, stop


def apply_unitary(u: UnitaryOp, s: QuantumState, target=None) -> QuantumState:
    """Apply ``u`` to the contiguous registers ``target`` (all registers by default)."""
    start, stop = _register_span(s.dims, target)
    left = math.prod(s.dims[:start])
    mid = math.prod(s.dims[start:stop])
    right = math.prod(s.dims[stop:])
    if mid != u.dim:
        raise ShapeError(f"unitary of dimension {u.dim} applied to subsystem of dimension {mid}")
    U = u.matrix
    if left == 1 and right == 1:
        if isinstance(s, PureState):
            return PureState(U @ s.amplitudes, s.dims, s.labels)
        out = U @ s.density @ U.conj().T
        return MixedState((out + out.conj().T) / 2, s.dims, s.labels)
    if isinstance(s, PureState):
        psi = s.amplitudes.reshape(left, mid, right)
        out = np.einsum("ij,ajb->aib", U, psi).reshape(-1)
        return PureState(out, s.dims, s.labels)
    rho = s.density.reshape(left, mid, right, left, mid, right)
    out = np.einsum("ij,ajbckd,lk->aibcld", U, rho, U.conj(), optimize=True)
    out = out.reshape(s.dim, s.dim)
    return MixedState((out + out.conj().T) / 2, s.dims, s.labels)


def partial_trace(s: QuantumState, keep) -> MixedState:
    """Reduced state on the registers listed in ``keep``."""
    dims = s.dims
    if isinstance(keep, int):
        keep = [keep]
    keep = sorted(set(int(i) for i in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise ShapeError(f"keep={keep} does not match the register factorization {dims}")
    traced = [i for i in range(len(dims)) if i not in keep]
    kdim = math.prod(dims[i] for i in keep)
    if isinstance(s, PureState):
        psi = s.amplitudes.reshape(dims)
        red = np.tensordot(psi, psi.conj(), axes=(traced, traced))
    else:
        n = len(dims)
        rho = s.density.reshape(dims + dims)
        letters = "abcdefghijklmnopqrstuvwxyz"
        if 2 * n > len(letters):
            raise ShapeError("too many registers for partial_trace")
        row = list(letters[:n])
        col = list(letters[n : 2 * n])
        for i in traced:
            col[i] = row[i]
        out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
        red = np.einsum("".join(row) + "".join(col) + "->" + out, rho)
    red = red.reshape(kdim, kdim)
    red = (red + red.conj().T) / 2
    return MixedState(red, tuple(dims[i] for i in keep))


# -- measurement -----------------------------------------------------------


def born_probabilities(m: Measurement, s: QuantumState) -> np.ndarray:
    """Exact outcome probabilities of ``m`` on ``s``."""
    if m.dim != s.dim:
        raise ShapeError(f"measurement of dimension {m.dim} on state of dimension {s.dim}")
    if isinstance(s, PureState):
        psi = s.amplitudes
        probs = [np.vdot(psi, e @ psi).real for e in m.effects]
    else:
        rho_t = s.density.T
        probs = [np.sum(e * rho_t).real for e in m.effects]
    return np.clip(np.array(probs, dtype=float), 0.0, None)


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    total = probs.sum()
    if probs.max() < 1e-12:
        raise InconsistentMeasurementError("all outcome probabilities are below 1e-12")
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    if idx >= len(probs):
        # rounding pushed the draw past the last cdf entry
        idx = int(np.flatnonzero(probs > 0.0)[-1])
    return idx


def sample_outcome(m: Measurement, s: QuantumState, rng: np.random.Generator) -> tuple[str, float]:
    """Sample a label without building the post-measurement state."""
    probs = born_probabilities(m, s)
    idx = _sample(probs, rng)
    return m.outcome_labels[idx], float(probs[idx])


def _psd_sqrt(e: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(e)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def measure(m: Measurement, s: QuantumState, rng: np.random.Generator):
    """Measure ``s``; returns ``(label, post_state, probability)``.

    The probability is the exact Born value of the sampled outcome.
    """
    probs = born_probabilities(m, s)
    idx = _sample(probs, rng)
    p = float(probs[idx])
    op = m.effects[idx] if isinstance(m, ProjectiveMeasurement) else _psd_sqrt(m.effects[idx])
    if isinstance(s, PureState):
        post = op @ s.amplitudes
        post = PureState(post / np.linalg.norm(post), s.dims, s.labels)
    else:
        rho = op @ s.density @ op.conj().T
        rho = rho / np.trace(rho).real
        post = MixedState((rho + rho.conj().T) / 2, s.dims, s.labels)
    return m.outcome_labels[idx], post, p


def measure_computational(s: QuantumState, rng: np.random.Generator) -> tuple[int, float]:
    """Sample a computational-basis index (cheap path; no projectors built)."""
    if isinstance(s, PureState):
        probs = np.abs(s.amplitudes) ** 2
    else:
        probs = np.clip(np.diag(s.density).real, 0.0, None)
    idx = _sample(probs, rng)
    return idx, float(probs[idx])


# -- distances -------------------------------------------------------------


def _check_same_dim(a: QuantumState, b: QuantumState):
    if a.dim != b.dim:
        raise ShapeError(f"states have dimensions {a.dim} and {b.dim}")


def trace_distance(a: QuantumState, b: QuantumState) -> float:
    _check_same_dim(a, b)
    w = np.linalg.eigvalsh(a.density - b.density)
    return float(min(1.0, max(0.0, 0.5 * np.abs(w).sum())))


def helstrom_advantage(a: QuantumState, b: QuantumState) -> tuple[float, ProjectiveMeasurement]:
    """Optimal single-shot distinguishing advantage between ``a`` and ``b``.

    The returned measurement projects onto the nonnegative eigenspace of
    ``a - b`` (outcome ``"+"``) and its complement (``"-"``), so that
    ``Pr[+|a] - Pr[+|b]`` equals the trace distance.
    """
    _check_same_dim(a, b)
    w, v = np.linalg.eigh(a.density - b.density)
    pos = v[:, w >= -1e-12]
    p_plus = pos @ pos.conj().T
    p_minus = np.eye(a.dim) - p_plus
    adv = float(min(1.0, max(0.0, 0.5 * np.abs(w).sum())))
    return adv, ProjectiveMeasurement((p_plus, p_minus), ("+", "-"))


def fidelity_with_pure(target: PureState, s: QuantumState) -> float:
    """``<target|rho|target>``; equals ``|<target|s>|^2`` for pure ``s``."""
    _check_same_dim(target, s)
    psi = target.amplitudes
    if isinstance(s, PureState):
        return float(abs(np.vdot(psi, s.amplitudes)) ** 2)
    return float(np.vdot(psi, s.density @ psi).real)


def support_projector(s: QuantumState, tol: float = 1e-12) -> np.ndarray:
    if isinstance(s, PureState):
        return np.outer(s.amplitudes, s.amplitudes.conj())
    w, v = np.linalg.eigh(s.density)
    sup = v[:, w > tol]
    return sup @ sup.conj().T


def overlap_with_support(support: QuantumState, query: QuantumState) -> float:
    """``sqrt(tr(P rho_query))`` with ``P`` the support projector of ``support``.

    For a pure query this is ``|P q|``.
    """
    _check_same_dim(support, query)
    if isinstance(support, PureState):
        val = fidelity_with_pure(support, query)
    else:
        p = support_projector(support)
        val = float(np.real(np.sum(p * query.density.T)))
    return math.sqrt(max(0.0, val))


# -- text dump -------------------------------------------------------------


def dump_text(s: QuantumState) -> str:
    """Row-major text matrix, one row per line, entries as ``re,im``.

    A header line records the kind and register factorization; a pure state
    is written as a column (one amplitude per line).
    """
    kind = "pure" if isinstance(s, PureState) else "mixed"
    lines = [f"# {kind} dims={','.join(map(str, s.dims))}"]
    rows = s.amplitudes.reshape(-1, 1) if isinstance(s, PureState) else s.density
    for row in rows:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def load_text(text: str) -> QuantumState:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    header = lines[0].split()
    if len(header) != 3 or header[0] != "#" or not header[2].startswith("dims="):
        raise ShapeError("missing '# <kind> dims=...' header")
    kind = header[1]
    dims = tuple(int(x) for x in header[2][5:].split(","))
    rows = [[complex(float(re), float(im)) for re, im in (p.split(",") for p in ln.split())] for ln in lines[1:]]
    arr = np.array(rows, dtype=complex)
    if kind == "pure":
        return PureState(arr.reshape(-1), dims)
    if kind == "mixed":
        return MixedState(arr, dims)
    raise ShapeError(f"unknown state kind {kind!r}")
