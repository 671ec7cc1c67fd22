"""Sparse multimode bosonic Fock-space engine.

States are dictionaries from occupation tuples to complex amplitudes.  Every
operation returns a new state; nothing here mutates its inputs.  The module is
deliberately generic (arbitrary mode count, arbitrary operator strings) so it
can serve as a brute-force reference for the faster reduced-basis code.

Beam-splitter convention
------------------------
A splitter acting on modes (a, b) with transmittance ``t`` and reflectance ``r``
realises the Heisenberg map::

    a_out = t a + r b
    b_out = conj(r) a - conj(t) b

In the Schroedinger picture the state is transformed by the unitary ``U`` with
``U^dag a_out_mode U`` equal to the expressions above, so the populations of
the output state's modes ``a`` and ``b`` are those of ``a_out`` and ``b_out``.
For ``t = r = 1/sqrt(2)`` this map is its own inverse.  ``flip_b=True`` selects
the alternate convention ``b_out = -conj(r) a + conj(t) b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation

CREATE = "create"
ANNIHILATE = "annihilate"

DEFAULT_PRUNE = 1e-14
SQRT_HALF = 1.0 / math.sqrt(2.0)


class SparseState:
    """Pure state of ``mode_count`` bosonic modes stored as a sparse amplitude map."""

    __slots__ = ("mode_count", "prune_threshold", "_amps")

    def __init__(
        self,
        mode_count: int,
        amplitudes: Mapping[Sequence[int], complex] | None = None,
        prune_threshold: float = DEFAULT_PRUNE,
    ):
        if mode_count < 1:
            raise ContractViolation(f"mode_count must be positive, got {mode_count}")
        if prune_threshold < 0:
            raise ContractViolation("prune_threshold must be non-negative")
        amps = {}
        for key, value in (amplitudes or {}).items():
            key = tuple(int(n) for n in key)
            if len(key) != mode_count:
                raise ContractViolation(
                    f"occupation {key} has {len(key)} entries, state has {mode_count} modes"
                )
            if any(n < 0 for n in key):
                raise ContractViolation(f"negative occupation in {key}")
            value = complex(value)
            if abs(value) > prune_threshold:
                amps[key] = amps.get(key, 0j) + value
        self.mode_count = mode_count
        self.prune_threshold = prune_threshold
        self._amps = amps

    @classmethod
    def _trusted(cls, mode_count, amps, prune_threshold):
        # Skips validation; callers guarantee key shape and pruning.
        obj = cls.__new__(cls)
        obj.mode_count = mode_count
        obj.prune_threshold = prune_threshold
        obj._amps = amps
        return obj

    @classmethod
    def fock(cls, *counts: int, prune_threshold: float = DEFAULT_PRUNE) -> "SparseState":
        """Single number state, e.g. ``SparseState.fock(4, 0, 0)``."""
        return cls(len(counts), {tuple(counts): 1.0}, prune_threshold)

    @classmethod
    def vacuum(cls, mode_count: int) -> "SparseState":
        return cls(mode_count, {(0,) * mode_count: 1.0})

    @property
    def amplitudes(self) -> Mapping[tuple, complex]:
        return MappingProxyType(self._amps)

    def __len__(self):
        return len(self._amps)

    def __repr__(self):
        return f"SparseState(mode_count={self.mode_count}, kets={len(self._amps)})"

    def amplitude(self, *counts: int) -> complex:
        return self._amps.get(tuple(counts), 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self._amps.values()))

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def normalized(self) -> "SparseState":
        nrm = self.norm()
        if nrm == 0:
            raise ContractViolation("cannot normalize the zero vector")
        return self.scaled(1.0 / nrm)

    def scaled(self, factor: complex) -> "SparseState":
        return SparseState(
            self.mode_count,
            {k: v * factor for k, v in self._amps.items()},
            self.prune_threshold,
        )

    def __add__(self, other: "SparseState") -> "SparseState":
        _check_same_modes(self, other)
        amps = dict(self._amps)
        for k, v in other._amps.items():
            amps[k] = amps.get(k, 0j) + v
        return SparseState(self.mode_count, amps, self.prune_threshold)

    def with_vacuum_mode(self) -> "SparseState":
        """Append one extra mode in the vacuum state."""
        amps = {k + (0,): v for k, v in self._amps.items()}
        return SparseState._trusted(self.mode_count + 1, amps, self.prune_threshold)

    def tensor(self, other: "SparseState") -> "SparseState":
        """Product state with ``other``'s modes appended after this state's."""
        amps = {}
        for ka, va in self._amps.items():
            for kb, vb in other._amps.items():
                amps[ka + kb] = va * vb
        return SparseState(self.mode_count + other.mode_count, amps, self.prune_threshold)

    def permuted(self, order: Sequence[int]) -> "SparseState":
        """Reorder modes so that new mode ``i`` is old mode ``order[i]``."""
        if sorted(order) != list(range(self.mode_count)):
            raise ContractViolation(f"{order} is not a permutation of the modes")
        amps = {tuple(k[j] for j in order): v for k, v in self._amps.items()}
        return SparseState._trusted(self.mode_count, amps, self.prune_threshold)

    def total_numbers(self) -> set:
        return {sum(k) for k in self._amps}


def _check_same_modes(a: SparseState, b: SparseState):
    if a.mode_count != b.mode_count:
        raise ContractViolation(
            f"mode_count mismatch: {a.mode_count} vs {b.mode_count}"
        )


@dataclass(frozen=True)
class LadderExpression:
    """Product of ladder operators times a scalar.

    ``factors`` is written left to right as in the operator string, so
    ``((1, CREATE), (0, ANNIHILATE))`` is ``a1^dag a0``; application to a ket
    proceeds right to left.
    """

    factors: tuple = ()
    prefactor: complex = 1.0

    def __post_init__(self):
        for mode, kind in self.factors:
            if kind not in (CREATE, ANNIHILATE):
                raise ContractViolation(f"unknown ladder kind {kind!r}")
            if mode < 0:
                raise ContractViolation(f"negative mode index {mode}")

    def __mul__(self, other):
        if isinstance(other, LadderExpression):
            return LadderExpression(
                self.factors + other.factors, self.prefactor * other.prefactor
            )
        return LadderExpression(self.factors, self.prefactor * other)

    __rmul__ = __mul__

    def dagger(self) -> "LadderExpression":
        flipped = tuple(
            (m, ANNIHILATE if kind == CREATE else CREATE) for m, kind in reversed(self.factors)
        )
        return LadderExpression(flipped, complex(self.prefactor).conjugate())

    def max_mode(self) -> int:
        return max((m for m, _ in self.factors), default=-1)


def create(mode: int) -> LadderExpression:
    return LadderExpression(((mode, CREATE),))


def annihilate(mode: int) -> LadderExpression:
    return LadderExpression(((mode, ANNIHILATE),))


def number(mode: int) -> LadderExpression:
    return create(mode) * annihilate(mode)


def identity() -> LadderExpression:
    return LadderExpression()


def dagger_terms(terms: Iterable[LadderExpression]) -> list:
    return [t.dagger() for t in terms]


def multiply_terms(left: Iterable[LadderExpression], right: Iterable[LadderExpression]) -> list:
    """Distribute the product of two operator sums."""
    right = list(right)
    return [a * b for a in left for b in right]


def apply_ladder(state: SparseState, expr: LadderExpression) -> SparseState:
    """Return ``expr |state>`` (not normalized)."""
    if expr.max_mode() >= state.mode_count:
        raise ContractViolation(
            f"mode index {expr.max_mode()} out of range for {state.mode_count}-mode state"
        )
    steps = [(m, kind == CREATE) for m, kind in reversed(expr.factors)]
    pref = complex(expr.prefactor)
    out = {}
    sqrt = math.sqrt
    for key, amp in state._amps.items():
        counts = list(key)
        coeff = amp * pref
        for mode, is_create in steps:
            n = counts[mode]
            if is_create:
                coeff *= sqrt(n + 1)
                counts[mode] = n + 1
            else:
                if n == 0:
                    coeff = 0.0
                    break
                coeff *= sqrt(n)
                counts[mode] = n - 1
        if coeff == 0.0:
            continue
        k = tuple(counts)
        out[k] = out.get(k, 0j) + coeff
    thr = state.prune_threshold
    out = {k: v for k, v in out.items() if abs(v) > thr}
    return SparseState._trusted(state.mode_count, out, thr)


def apply_terms(state: SparseState, terms: Iterable[LadderExpression]) -> SparseState:
    """Apply a sum of ladder expressions."""
    out = {}
    for term in terms:
        for k, v in apply_ladder(state, term)._amps.items():
            out[k] = out.get(k, 0j) + v
    thr = state.prune_threshold
    return SparseState._trusted(
        state.mode_count, {k: v for k, v in out.items() if abs(v) > thr}, thr
    )


def inner_product(a: SparseState, b: SparseState) -> complex:
    """<a|b>."""
    _check_same_modes(a, b)
    small, large = (a._amps, b._amps) if len(a) <= len(b) else (b._amps, a._amps)
    total = 0j
    for k, v in small.items():
        w = large.get(k)
        if w is not None:
            total += (v.conjugate() * w) if small is a._amps else (w.conjugate() * v)
    return total


def expectation(state: SparseState, expr) -> complex:
    """<state| expr |state> for one ladder expression or a list of them.

    Returns the raw complex number; Hermitian symmetrisation is up to the caller.
    """
    if isinstance(expr, LadderExpression):
        return inner_product(state, apply_ladder(state, expr))
    return inner_product(state, apply_terms(state, expr))


# -- beam splitter -----------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitterSpec:
    mode_a: int
    mode_b: int
    t: complex = SQRT_HALF
    r: complex = SQRT_HALF
    flip_b: bool = False

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ContractViolation("beam splitter needs two distinct modes")
        if abs(abs(self.t) ** 2 + abs(self.r) ** 2 - 1.0) > 1e-12:
            raise ContractViolation(f"|t|^2 + |r|^2 != 1 for t={self.t}, r={self.r}")

    def mode_matrix(self) -> np.ndarray:
        """Heisenberg map (a_out, b_out) = M (a_in, b_in).

        ``flip_b`` negates the b_out row, the mode-local sign change used to
        check that reported quantities do not depend on the convention.
        """
        t, r = complex(self.t), complex(self.r)
        sign = -1.0 if self.flip_b else 1.0
        return np.array([[t, r], [sign * r.conjugate(), -sign * t.conjugate()]])


def _binomial_terms(n, x, y):
    """Log-magnitudes and phases of C(n,i) x^i y^(n-i), i = 0..n."""
    i = np.arange(n + 1)
    logc = np.array([math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in i])
    logmag = logc.copy()
    phase = np.zeros(n + 1)
    mask = np.ones(n + 1, dtype=bool)
    for power, z in ((i, x), (n - i, y)):
        if z == 0:
            mask &= power == 0
        else:
            logmag += power * math.log(abs(z))
            phase += power * np.angle(z)
    return logmag, phase, mask


@lru_cache(maxsize=4096)
def _splitter_column(na: int, nb: int, m00: complex, m01: complex, m10: complex, m11: complex):
    """Amplitudes of U|na, nb> on |k, na+nb-k>, k = 0..na+nb."""
    # U a^dag U^dag = m00 a^dag + m10 b^dag ; U b^dag U^dag = m01 a^dag + m11 b^dag
    n = na + nb
    la, pa, ma = _binomial_terms(na, m00, m10)
    lb, pb, mb = _binomial_terms(nb, m01, m11)
    k = np.add.outer(np.arange(na + 1), np.arange(nb + 1))
    lg = np.array([math.lgamma(j + 1) for j in range(n + 1)])
    norm = 0.5 * (lg[k] + lg[n - k] - lg[na] - lg[nb])
    logmag = la[:, None] + lb[None, :] + norm
    phase = pa[:, None] + pb[None, :]
    mask = ma[:, None] & mb[None, :]
    vals = np.where(mask, np.exp(logmag) * np.exp(1j * phase), 0.0)
    out = np.zeros(n + 1, dtype=complex)
    np.add.at(out, k.ravel(), vals.ravel())
    return out


def apply_beam_splitter(state: SparseState, spec: BeamSplitterSpec) -> SparseState:
    """Exact Fock-space image of ``state`` under the splitter (see module docstring)."""
    a, b = spec.mode_a, spec.mode_b
    if max(a, b) >= state.mode_count or min(a, b) < 0:
        raise ContractViolation(f"splitter modes ({a}, {b}) out of range")
    m = spec.mode_matrix()
    entries = (complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))
    out = {}
    for key, amp in state._amps.items():
        na, nb = key[a], key[b]
        column = _splitter_column(na, nb, *entries)
        base = list(key)
        n = na + nb
        for kk, c in enumerate(column):
            if c == 0:
                continue
            base[a] = kk
            base[b] = n - kk
            t = tuple(base)
            out[t] = out.get(t, 0j) + amp * c
    thr = state.prune_threshold
    return SparseState._trusted(
        state.mode_count, {k: v for k, v in out.items() if abs(v) > thr}, thr
    )


# -- dense/sparse matrix oracle -------------------------------------------------


def reachable_basis(seed: SparseState, terms: Sequence[LadderExpression], max_total: int | None = None) -> list:
    """Occupation kets reachable from ``seed`` by repeated application of ``terms``.

    ``max_total`` caps the total boson number (for truncating non-conserving
    operators).  Returned sorted for a reproducible index order.
    """
    seen = set(seed._amps)
    frontier = list(seen)
    while frontier:
        nxt = []
        for key in frontier:
            ket = SparseState._trusted(seed.mode_count, {key: 1.0}, 0.0)
            for k in apply_terms(ket, terms)._amps:
                if k in seen or (max_total is not None and sum(k) > max_total):
                    continue
                seen.add(k)
                nxt.append(k)
        frontier = nxt
    return sorted(seen)


def operator_matrix(terms: Sequence[LadderExpression], basis: Sequence[tuple], mode_count: int):
    """Matrix of an operator sum restricted to ``basis`` (CSR, complex).

    Components leaving the basis are dropped, which is the usual truncation.
    """
    index = {k: i for i, k in enumerate(basis)}
    rows, cols, vals = [], [], []
    for j, key in enumerate(basis):
        ket = SparseState._trusted(mode_count, {key: 1.0}, 0.0)
        for k, v in apply_terms(ket, terms)._amps.items():
            i = index.get(k)
            if i is not None:
                rows.append(i)
                cols.append(j)
                vals.append(v)
    dim = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)


def to_vector(state: SparseState, basis: Sequence[tuple]) -> np.ndarray:
    index = {k: i for i, k in enumerate(basis)}
    vec = np.zeros(len(basis), dtype=complex)
    for k, v in state._amps.items():
        if k not in index:
            raise ContractViolation(f"ket {k} not in basis")
        vec[index[k]] = v
    return vec


def from_vector(vec, basis: Sequence[tuple], mode_count: int, prune_threshold: float = DEFAULT_PRUNE) -> SparseState:
    return SparseState(mode_count, dict(zip(basis, vec)), prune_threshold)


def density_expectation(components, terms, basis=None) -> complex:
    """tr(rho O) for rho = sum_i p_i |psi_i><psi_i| built as an explicit dense matrix.

    ``components`` is a sequence of ``(weight, SparseState)``.  Independent of
    :func:`expectation`; used to check mixture bookkeeping elsewhere.
    """
    if isinstance(terms, LadderExpression):
        terms = [terms]
    components = list(components)
    modes = components[0][1].mode_count
    if basis is None:
        # tr(rho O) only touches rows/columns in the support of rho
        keys = set()
        for _, psi in components:
            keys.update(psi._amps)
        basis = sorted(keys)
    dim = len(basis)
    rho = np.zeros((dim, dim), dtype=complex)
    for w, psi in components:
        v = to_vector(psi, basis)
        rho += w * np.outer(v, v.conj())
    op = operator_matrix(terms, basis, modes).toarray()
    return complex(np.trace(rho @ op))
