"""Exact degenerate four-wave-mixing dynamics in the symmetric reduced basis.

Starting from ``|N, 0, 0>`` the Hamiltonian ``H = i chi (a0^2 a1^dag a2^dag - h.c.)``
keeps the state in span{|N-2m, m, m>}, m = 0..N//2, where it is tridiagonal
with ``<m+1|H|m> = i chi g_m`` and ``g_m = sqrt((N-2m)(N-2m-1)) (m+1)``.

With the diagonal gauge ``D = diag(i^m)`` one has ``H = chi D G D^dag`` for the
real symmetric tridiagonal ``G`` carrying ``g_m`` on both off-diagonals, so the
propagator is obtained from one real eigendecomposition per N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ContractViolation, ResourceError
from .fock import SparseState

# Dense eigenvector workspace cap; 1 GiB admits N up to roughly 2.3e4.
DEFAULT_MAX_WORKSPACE_BYTES = 2**30


@dataclass(frozen=True)
class ModelParams:
    chi: float = 1.0
    N: int = 0

    def __post_init__(self):
        if not self.chi > 0:
            raise ContractViolation(f"chi must be positive, got {self.chi}")
        if self.N < 0 or int(self.N) != self.N:
            raise ContractViolation(f"N must be a non-negative integer, got {self.N}")


def basis_size(N: int) -> int:
    return N // 2 + 1


@dataclass(frozen=True, eq=False)
class ReducedState:
    """Coefficients c_m on |N-2m, m, m>."""

    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (basis_size(self.N),):
            raise ContractViolation(
                f"N={self.N} needs {basis_size(self.N)} coefficients, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def fock(cls, N: int) -> "ReducedState":
        c = np.zeros(basis_size(N), dtype=complex)
        c[0] = 1.0
        return cls(N, c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True, eq=False)
class TridiagonalHamiltonian:
    N: int
    couplings: np.ndarray

    def matrix(self, chi: float = 1.0) -> np.ndarray:
        """Dense Hermitian matrix with ``<m+1|H|m> = i chi g_m``."""
        n = basis_size(self.N)
        h = np.zeros((n, n), dtype=complex)
        idx = np.arange(n - 1)
        h[idx + 1, idx] = 1j * chi * self.couplings
        h[idx, idx + 1] = -1j * chi * self.couplings
        return h

    def gauge(self) -> np.ndarray:
        """diag(i^m); ``matrix(chi) == chi * D @ G @ D^dag``."""
        return 1j ** np.arange(basis_size(self.N))


def build_hamiltonian(params: ModelParams) -> TridiagonalHamiltonian:
    N = params.N
    m = np.arange(N // 2, dtype=float)
    g = np.sqrt((N - 2 * m) * (N - 2 * m - 1)) * (m + 1)
    g.setflags(write=False)
    return TridiagonalHamiltonian(N, g)


@dataclass(frozen=True, eq=False)
class Propagator:
    """Eigendecomposition of the gauged real tridiagonal matrix for one N (chi = 1)."""

    N: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge: np.ndarray = field(repr=False)

    def evolve_many(self, coeffs, chi_times) -> np.ndarray:
        """Coefficient matrix of shape (basis, len(chi_times))."""
        taus = np.atleast_1d(np.asarray(chi_times, dtype=float))
        w = self.eigenvectors.T @ (self.gauge.conj() * np.asarray(coeffs, dtype=complex))
        phases = np.exp(-1j * np.outer(self.eigenvalues, taus))
        out = self.eigenvectors @ (w[:, None] * phases)
        return self.gauge[:, None] * out


def check_budget(N: int, max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES):
    n = basis_size(N)
    need = 8 * n * n
    if need > max_workspace_bytes:
        raise ResourceError(
            f"N={N} needs a {n}x{n} eigenvector workspace ({need} bytes) "
            f"over the {max_workspace_bytes}-byte budget",
            dimension=n,
        )


@lru_cache(maxsize=8)
def _propagator(N: int) -> Propagator:
    g = build_hamiltonian(ModelParams(1.0, N)).couplings
    n = basis_size(N)
    if n == 1:
        vals, vecs = np.zeros(1), np.ones((1, 1))
    else:
        vals, vecs = eigh_tridiagonal(np.zeros(n), g)
    for a in (vals, vecs):
        a.setflags(write=False)
    gauge = 1j ** np.arange(n)
    gauge.setflags(write=False)
    return Propagator(N, vals, vecs, gauge)


def propagator(N: int, max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES) -> Propagator:
    check_budget(N, max_workspace_bytes)
    return _propagator(int(N))


def evolve(initial: ReducedState, params: ModelParams, time: float,
           max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES) -> ReducedState:
    """exp(-i H t)|initial>."""
    if initial.N != params.N:
        raise ContractViolation(f"state has N={initial.N}, params have N={params.N}")
    if time == 0:
        return ReducedState(initial.N, initial.coeffs.copy())
    prop = propagator(initial.N, max_workspace_bytes)
    return ReducedState(initial.N, prop.evolve_many(initial.coeffs, params.chi * time)[:, 0])


def evolve_many(initial: ReducedState, params: ModelParams, times,
                max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES) -> np.ndarray:
    """Coefficients at every time, shape (N//2 + 1, len(times))."""
    if initial.N != params.N:
        raise ContractViolation(f"state has N={initial.N}, params have N={params.N}")
    times = np.asarray(times, dtype=float)
    out = propagator(initial.N, max_workspace_bytes).evolve_many(initial.coeffs, params.chi * times)
    out[:, times == 0] = initial.coeffs[:, None]
    return out


def fock_start_evolution(N: int, chi_times,
                         max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES) -> np.ndarray:
    """Coefficients of exp(-iHt)|N,0,0> at each chi*t, shape (N//2 + 1, len(chi_times)).

    The gauged matrix has zero diagonal, so its graph is bipartite (even/odd m)
    and eigenpairs come as (lam, v) and (-lam, (-1)^m v).  Summing each pair
    leaves cos(lam t) on even sites and -i sin(lam t) on odd sites, so only the
    positive half of the spectrum is needed and all products are real.
    """
    prop = propagator(N, max_workspace_bytes)
    taus = np.atleast_1d(np.asarray(chi_times, dtype=float))
    n = basis_size(N)
    half = n // 2
    vals = prop.eigenvalues[n - half:]
    vecs = prop.eigenvectors[:, n - half:]
    w = 2.0 * vecs[0]
    arg = np.outer(vals, taus)
    out = np.empty((n, taus.size), dtype=complex)
    # contiguous copies: BLAS on strided views is an order of magnitude slower
    out[0::2] = np.ascontiguousarray(vecs[0::2]) @ (w[:, None] * np.cos(arg))
    out[1::2] = -1j * (np.ascontiguousarray(vecs[1::2]) @ (w[:, None] * np.sin(arg)))
    if n % 2:
        zero = prop.eigenvectors[:, half]
        out[0::2] += (zero[0] * zero[0::2])[:, None]
    out *= prop.gauge[:, None]
    out[:, taus == 0] = 0.0
    out[0, taus == 0] = 1.0
    return out


def mode_populations(state, N: int | None = None):
    """(n0, n1, n2) for a ReducedState, or for a coefficient matrix with explicit N."""
    if isinstance(state, ReducedState):
        N, coeffs = state.N, state.coeffs
    else:
        coeffs = np.asarray(state)
    m = np.arange(basis_size(N), dtype=float)
    probs = np.abs(coeffs) ** 2
    n1 = np.tensordot(m, probs, axes=(0, 0))
    total = probs.sum(axis=0)
    n0 = N * total - 2 * n1
    return n0, n1, n1.copy()


def lift_to_sparse(state: ReducedState) -> SparseState:
    N = state.N
    return SparseState(3, {(N - 2 * m, m, m): c for m, c in enumerate(state.coeffs)})


def project_to_reduced(state: SparseState, N: int) -> ReducedState:
    """Inverse of :func:`lift_to_sparse`; rejects amplitude outside the reduced basis."""
    if state.mode_count != 3:
        raise ContractViolation("reduced basis is defined for 3-mode states")
    coeffs = np.zeros(basis_size(N), dtype=complex)
    for (n0, n1, n2), amp in state.amplitudes.items():
        if n1 != n2 or n0 + n1 + n2 != N:
            raise ContractViolation(f"ket {(n0, n1, n2)} is outside the N={N} reduced basis")
        coeffs[n1] = amp
    return ReducedState(N, coeffs)
