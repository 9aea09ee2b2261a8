"""The symmetric group S_k on {0, ..., k-1} and its regular representation.

Permutations are tuples in one-line notation, ``p[i]`` being the image of
``i``. ``compose(a, b)`` is ``a`` after ``b``. Group elements are enumerated
in lexicographic order; that order fixes the computational basis of
``C[S_k]``.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

Perm = tuple[int, ...]


@lru_cache(maxsize=None)
def elements(k: int) -> tuple[Perm, ...]:
    if k < 1:
        raise DomainError(f"S_k needs k >= 1, got {k}")
    return tuple(itertools.permutations(range(k)))


@lru_cache(maxsize=None)
def index_of(k: int) -> dict[Perm, int]:
    return {p: i for i, p in enumerate(elements(k))}


def identity(k: int) -> Perm:
    return tuple(range(k))


def compose(a: Perm, b: Perm) -> Perm:
    return tuple(a[j] for j in b)


def inverse(p: Perm) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def cycles(p: Perm) -> list[tuple[int, ...]]:
    seen = set()
    out = []
    for start in range(len(p)):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        j = p[start]
        while j != start:
            cyc.append(j)
            seen.add(j)
            j = p[j]
        out.append(tuple(cyc))
    return out


def sign(p: Perm) -> int:
    return -1 if (len(p) - len(cycles(p))) % 2 else 1


def is_involution(p: Perm) -> bool:
    return compose(p, p) == identity(len(p))


@lru_cache(maxsize=None)
def odd_involutions(k: int) -> tuple[Perm, ...]:
    return tuple(p for p in elements(k) if is_involution(p) and sign(p) == -1)


def one_line(p: Perm) -> str:
    """1-based one-line notation, e.g. ``"213"``."""
    return "".join(str(i + 1) for i in p)


def cycle_notation(p: Perm) -> str:
    parts = ["(" + " ".join(str(i + 1) for i in c) + ")" for c in cycles(p) if len(c) > 1]
    return "".join(parts) or "id"


@lru_cache(maxsize=None)
def basis_labels(k: int) -> tuple[str, ...]:
    return tuple(one_line(p) for p in elements(k))


def order(k: int) -> int:
    return math.factorial(k)


def degree_for_dim(dim: int) -> int:
    """Invert ``dim = k!`` for the supported range."""
    for k in range(1, 8):
        if math.factorial(k) == dim:
            return k
    raise DomainError(f"{dim} is not k! for a supported k")


@lru_cache(maxsize=None)
def _right_matrix(k: int, pi: Perm) -> np.ndarray:
    idx = index_of(k)
    n = len(idx)
    m = np.zeros((n, n))
    for s, i in idx.items():
        m[idx[compose(s, pi)], i] = 1.0
    m.flags.writeable = False
    return m


def right_regular(pi: Perm) -> np.ndarray:
    """Permutation matrix of ``|s> -> |s pi>``."""
    return _right_matrix(len(pi), tuple(pi))


@lru_cache(maxsize=None)
def _left_matrix(k: int, g: Perm) -> np.ndarray:
    idx = index_of(k)
    n = len(idx)
    m = np.zeros((n, n))
    for s, i in idx.items():
        m[idx[compose(g, s)], i] = 1.0
    m.flags.writeable = False
    return m


def left_regular(g: Perm) -> np.ndarray:
    """Permutation matrix of ``|s> -> |g s>``."""
    return _left_matrix(len(g), tuple(g))


@lru_cache(maxsize=None)
def sign_vector(k: int) -> np.ndarray:
    v = np.array([sign(p) for p in elements(k)], dtype=float)
    v.flags.writeable = False
    return v


class IsotypicCompression:
    """Channel that discards the multiplicity spaces of ``C[S_k]``.

    Under right multiplication, ``C[S_k]`` splits as a sum over irreducible
    representations ``lam`` of ``V_lam (x) W_lam`` with the group acting on
    ``V_lam`` only. Tracing out every ``W_lam`` is a CPTP map onto a space of
    dimension ``sum_lam d_lam`` that is lossless on the algebra spanned by the
    right-multiplication matrices. The blocks are found numerically: a generic
    Hermitian element of the left-multiplication algebra has one eigenspace per
    copy of each irrep, and Schur intertwiners align the copies.
    """

    def __init__(self, k: int, seed: int = 20240601):
        self.k = k
        group = elements(k)
        n = len(group)
        rng = np.random.default_rng(seed)
        h = np.zeros((n, n))
        for g in group:
            c = rng.normal()
            h += c * (left_regular(g) + left_regular(g).T)
        w, v = np.linalg.eigh(h)
        spaces = []
        i = 0
        while i < n:
            j = i + 1
            while j < n and abs(w[j] - w[i]) < 1e-7:
                j += 1
            spaces.append(v[:, i:j].astype(complex))
            i = j
        classes: dict[tuple, list[np.ndarray]] = {}
        for b in spaces:
            chi = tuple(np.round([np.trace(b.conj().T @ right_regular(g) @ b).real for g in group], 6))
            classes.setdefault(chi, []).append(b)
        self.blocks: list[list[np.ndarray]] = []
        for copies in classes.values():
            d = copies[0].shape[1]
            if len(copies) != d or any(c.shape[1] != d for c in copies):
                raise RuntimeError(f"isotypic decomposition of S_{k} failed (degenerate spectrum)")
            ref = copies[0]
            aligned = [ref]
            for b in copies[1:]:
                x = rng.normal(size=(d, d))
                m = sum(
                    (b.conj().T @ right_regular(g) @ b) @ x @ (ref.conj().T @ right_regular(g) @ ref).conj().T
                    for g in group
                )
                scale = np.sqrt(np.trace(m.conj().T @ m).real / d)
                aligned.append(b @ (m / scale))
            self.blocks.append(aligned)
        self.blocks.sort(key=lambda bl: (bl[0].shape[1], -self._char_of(bl[0])))
        self.block_dims = tuple(bl[0].shape[1] for bl in self.blocks)
        self.dim = sum(self.block_dims)
        self.labels = tuple(f"irrep{b}:{i}" for b, d in enumerate(self.block_dims) for i in range(d))
        offsets = np.cumsum((0,) + self.block_dims)
        kraus = []
        for b, bl in enumerate(self.blocks):
            for copy in bl:
                op = np.zeros((self.dim, n), dtype=complex)
                op[offsets[b] : offsets[b + 1], :] = copy.conj().T
                kraus.append(op)
        self.kraus = tuple(kraus)
        total = sum(kk.conj().T @ kk for kk in self.kraus)
        if np.linalg.norm(total - np.eye(n)) > 1e-8:
            raise RuntimeError("isotypic compression is not trace preserving")

    def _char_of(self, b: np.ndarray) -> float:
        return float(np.trace(b.conj().T @ right_regular(odd_involutions(self.k)[0]) @ b).real)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = sum(kk @ rho @ kk.conj().T for kk in self.kraus)
        return (out + out.conj().T) / 2

    def apply_pure(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for kk in self.kraus:
            v = kk @ psi
            out += np.outer(v, v.conj())
        return (out + out.conj().T) / 2


@lru_cache(maxsize=None)
def isotypic_compression(k: int) -> IsotypicCompression:
    return IsotypicCompression(k)
