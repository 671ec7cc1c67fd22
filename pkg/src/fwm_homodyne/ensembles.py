"""Initial number distributions for mode 0 and their evolved quadrature moments.

The Hamiltonian conserves total number, so each N block evolves on its own.
Mixture moments are built by weighting the *raw* (un-normalized) moments of
each block and only then normalizing by the ensemble LO populations; averaging
per-block variances would drop the spread of the block means.

Pure coherent states are handled through their number distribution: every
measured operator conserves total number, so coherences between different N
never reach an expectation value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dynamics import (
    DEFAULT_MAX_WORKSPACE_BYTES,
    ModelParams,
    ReducedState,
    fock_start_evolution,
    lift_to_sparse,
)
from .errors import ContractViolation
from .homodyne import (
    LO_FLOOR,
    QuadratureMoments,
    RawMoments,
    normalize,
    raw_moments_oracle,
    raw_moments_reduced,
    split_local_oscillator,
)

FOCK = "fock"
POISSONIAN = "poissonian"
THERMAL = "thermal"
COHERENT = "coherent"
TABLE = "table"
KINDS = (FOCK, POISSONIAN, THERMAL, COHERENT, TABLE)

DEFAULT_TRUNCATION = 1e-10
BLOCK_CUTOFF = 1e-12


@dataclass(frozen=True)
class NumberDistribution:
    kind: str
    mean: float
    weights: dict
    n_max: int
    amplitudes: dict | None = field(default=None, repr=False)

    def blocks(self, relative_cutoff: float = BLOCK_CUTOFF):
        """(N, p_N) in increasing N, dropping blocks below the relative cutoff."""
        top = max(self.weights.values())
        return [(n, p) for n, p in sorted(self.weights.items()) if p >= relative_cutoff * top]

    def total_weight(self) -> float:
        return math.fsum(self.weights.values())

    def mean_number(self) -> float:
        return math.fsum(n * p for n, p in self.weights.items()) / self.total_weight()


def thermal_weight(n, mean):
    q = mean / (1.0 + mean)
    return (1.0 - q) * q**n


def _thermal_cutoff(mean, eps):
    # tail sum_{N > n_max} p_N = q^(n_max + 1)
    if mean == 0:
        return 0
    q = mean / (1.0 + mean)
    n = max(0, math.ceil(math.log(eps) / math.log(q)) - 1)
    while q ** (n + 1) >= eps:
        n += 1
    while n > 0 and q**n < eps:
        n -= 1
    return n


def build_distribution(kind: str, mean: float, eps: float = DEFAULT_TRUNCATION,
                       phase: float = 0.0, table: dict | None = None) -> NumberDistribution:
    """Number distribution of the initial mode-0 state.

    ``mean`` is the exact N for ``fock`` and n-bar otherwise.  Weights are
    truncated at the smallest ``n_max`` whose tail mass is below ``eps`` and are
    not renormalized.
    """
    if kind not in KINDS:
        raise ContractViolation(f"unknown distribution kind {kind!r}; expected one of {KINDS}")
    if kind == TABLE:
        if not table:
            raise ContractViolation("table distribution needs a non-empty weight table")
        weights = {int(n): float(p) for n, p in table.items() if p > 0}
        if any(n < 0 for n in weights):
            raise ContractViolation("table keys must be non-negative integers")
        total = math.fsum(weights.values())
        mean_n = math.fsum(n * p for n, p in weights.items()) / total
        return NumberDistribution(TABLE, mean_n, weights, max(weights))
    if mean < 0:
        raise ContractViolation(f"mean must be non-negative, got {mean}")
    if kind == FOCK:
        if int(mean) != mean:
            raise ContractViolation(f"Fock distribution needs an integer N, got {mean}")
        return NumberDistribution(FOCK, float(mean), {int(mean): 1.0}, int(mean))
    if kind == THERMAL:
        n_max = _thermal_cutoff(mean, eps)
        ns = np.arange(n_max + 1)
        w = thermal_weight(ns, mean)
        return NumberDistribution(THERMAL, mean, dict(zip(ns.tolist(), w.tolist())), n_max)
    # Poissonian mixture or pure coherent state share |amplitude|^2
    n_max = int(stats.poisson.isf(eps, mean)) if mean > 0 else 0
    while n_max > 0 and stats.poisson.sf(n_max - 1, mean) < eps:
        n_max -= 1
    while stats.poisson.sf(n_max, mean) >= eps:
        n_max += 1
    ns = np.arange(n_max + 1)
    w = stats.poisson.pmf(ns, mean) if mean > 0 else (ns == 0).astype(float)
    weights = dict(zip(ns.tolist(), w.tolist()))
    if kind == POISSONIAN:
        return NumberDistribution(POISSONIAN, mean, weights, n_max)
    alpha = math.sqrt(mean) * complex(math.cos(phase), math.sin(phase))
    amps = {}
    for n in ns.tolist():
        # alpha^n e^{-|alpha|^2/2} / sqrt(n!) via logs for large n
        if mean == 0:
            amps[n] = 1.0 + 0j if n == 0 else 0j
            continue
        mag = math.exp(n * math.log(abs(alpha)) - mean / 2 - 0.5 * math.lgamma(n + 1))
        amps[n] = mag * complex(math.cos(n * phase), math.sin(n * phase))
    return NumberDistribution(COHERENT, mean, weights, n_max, amps)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    times: np.ndarray
    populations: tuple  # (n0, n1, n2) arrays
    raw: RawMoments
    moments: QuadratureMoments


def block_raw_moments(N: int, params: ModelParams, times, method: str = "reduced",
                      max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES):
    """Raw moments and populations of one Fock-start block over the time grid."""
    coeffs = fock_start_evolution(N, params.chi * np.asarray(times, dtype=float), max_workspace_bytes)
    m = np.arange(N // 2 + 1, dtype=float)[:, None]
    prob = np.abs(coeffs) ** 2
    n1 = (prob * m).sum(axis=0)
    n0 = (prob * (N - 2 * m)).sum(axis=0)
    if method == "reduced":
        raw = raw_moments_reduced(N, coeffs)
    elif method == "oracle":
        per_time = [
            raw_moments_oracle(split_local_oscillator(lift_to_sparse(ReducedState(N, coeffs[:, k]))))
            for k in range(coeffs.shape[1])
        ]
        raw = RawMoments(
            np.stack([r.mean for r in per_time], axis=-1),
            np.stack([r.second for r in per_time], axis=-1),
            np.stack([r.n_signal for r in per_time], axis=-1),
            np.stack([r.n_lo for r in per_time], axis=-1),
        )
    else:
        raise ContractViolation(f"unknown moment method {method!r}")
    return np.array([n0, n1, n1]), raw


def ensemble_raw(dist: NumberDistribution, params: ModelParams, times, method: str = "reduced",
                 workers: int | None = None, relative_cutoff: float = BLOCK_CUTOFF,
                 max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES):
    """Weighted raw moments and populations; blocks may run on a thread pool.

    The reduction always runs in increasing N so the result does not depend on
    the worker count.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    blocks = dist.blocks(relative_cutoff)
    total = math.fsum(p for _, p in blocks)

    def job(block):
        return block_raw_moments(block[0], params, times, method, max_workspace_bytes)

    pops = raw = None

    def accumulate(results):
        nonlocal pops, raw
        for (_, p), (pop, r) in zip(blocks, results):
            w = p / total
            pops = pop * w if pops is None else pops + pop * w
            raw = r.scaled(w) if raw is None else raw + r.scaled(w)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accumulate(pool.map(job, blocks))
    else:
        accumulate(map(job, blocks))
    return pops, raw


def ensemble_moments(dist: NumberDistribution, params: ModelParams, times, method: str = "reduced",
                     workers: int | None = None, floor: float = LO_FLOOR,
                     relative_cutoff: float = BLOCK_CUTOFF,
                     max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES) -> EnsembleResult:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    pops, raw = ensemble_raw(dist, params, times, method, workers, relative_cutoff, max_workspace_bytes)
    return EnsembleResult(times, (pops[0], pops[1], pops[2]), raw, normalize(raw, floor))
