"""Small-N invariant and oracle checks behind ``fwm-homodyne validate``.

Every check compares the fast reduced-basis path with an independent
evaluation (explicit ladder operators, dense matrix exponentials or closed
forms) at N <= 20.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .criteria import ALL, evaluate_all
from .dynamics import ModelParams, ReducedState, evolve, evolve_many, lift_to_sparse, mode_populations
from .ensembles import block_raw_moments, build_distribution, ensemble_raw
from .fock import (
    SparseState,
    annihilate,
    apply_beam_splitter,
    create,
    from_vector,
    operator_matrix,
    reachable_basis,
    to_vector,
)
from .homodyne import (
    ALTERNATE,
    STANDARD,
    RawMoments,
    commutator_closed_form,
    commutator_expectation,
    normalize,
    quadrature_moments,
    raw_moments_oracle,
    split_local_oscillator,
    splitter_for,
)

MAX_N = 20


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst {self.worst:.3e} (tolerance {self.tolerance:.0e})"


def _result(name, errors, tol):
    worst = float(max(errors)) if len(errors) else 0.0
    return CheckResult(name, bool(np.isfinite(worst) and worst <= tol), worst, tol)


def hamiltonian_terms():
    """H = i chi (a0^2 a1^dag a2^dag - h.c.) as ladder terms with chi = 1."""
    pump = annihilate(0) * annihilate(0) * create(1) * create(2)
    return [pump * 1j, pump.dagger() * -1j]


def generic_evolution(N: int, chi_t: float) -> SparseState:
    """Fock-space exp(-iHt)|N,0,0> from a dense matrix exponential."""
    seed = SparseState.fock(N, 0, 0)
    terms = hamiltonian_terms()
    basis = reachable_basis(seed, terms)
    H = operator_matrix(terms, basis, 3).toarray()
    return from_vector(expm(-1j * chi_t * H) @ to_vector(seed, basis), basis, 3)


def check_two_particle_oracle(points: int = 100) -> CheckResult:
    times = np.linspace(0, 3, points)
    coeffs = evolve_many(ReducedState.fock(2), ModelParams(1.0, 2), times)
    _, n1, _ = mode_populations(coeffs, 2)
    return _result("N=2 mode-1 population is sin^2(sqrt2 chi t)",
                   np.abs(n1 - np.sin(np.sqrt(2) * times) ** 2), 1e-10)


def check_generic_dynamics(sizes=range(0, 13, 3), times=(0.05, 0.4)) -> CheckResult:
    errs = []
    for N in sizes:
        for t in times:
            fast = lift_to_sparse(evolve(ReducedState.fock(N), ModelParams(1.0, N), t))
            slow = generic_evolution(N, t)
            keys = set(fast.amplitudes) | set(slow.amplitudes)
            errs.append(max(abs(fast.amplitude(*k) - slow.amplitude(*k)) for k in keys))
    return _result("reduced-basis evolution matches Fock-space expm", errs, 1e-10)


def _moment_arrays(m):
    return np.array([np.asarray(v, dtype=float) for v in m.as_dict().values()])


def check_oracle_moments(sizes=range(1, MAX_N + 1), n_times: int = 3, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    errs = []
    for N in sizes:
        times = np.sort(rng.uniform(0.0, 1.5 / max(N, 1), n_times))
        _, fast = block_raw_moments(N, ModelParams(1.0, N), times)
        _, slow = block_raw_moments(N, ModelParams(1.0, N), times, method="oracle")
        a, b = normalize(fast), normalize(slow)
        errs.append(np.max(np.abs(_moment_arrays(a) - _moment_arrays(b))))
    return _result("closed-form moments match ladder-operator oracle", errs, 1e-8)


def check_commutator(sizes=range(1, MAX_N + 1, 4), times=(0.02, 0.1)) -> CheckResult:
    errs = []
    for N in sizes:
        for t in times:
            state = split_local_oscillator(lift_to_sparse(evolve(ReducedState.fock(N), ModelParams(1.0, N), t)))
            raw = raw_moments_oracle(state)
            direct = np.asarray(commutator_expectation(state))
            errs.append(np.max(np.abs(direct - commutator_closed_form(raw.n_signal, raw.n_lo))))
    return _result("measured [X, Y] matches -2i(n_b - n_a)/n_b", errs, 1e-8)


def check_conservation(sizes=(4, 11, 20), points: int = 50) -> CheckResult:
    errs = []
    for N in sizes:
        pops, _ = block_raw_moments(N, ModelParams(1.0, N), np.linspace(0, 1, points))
        errs.append(np.max(np.abs(pops.sum(axis=0) - N)))
        errs.append(np.max(np.abs(pops[1] - pops[2])))
    return _result("n0 + n1 + n2 = N and n1 = n2", errs, 1e-9)


def check_boundary(sizes=(1, 5, 20)) -> CheckResult:
    errs = []
    for N in sizes:
        _, raw = block_raw_moments(N, ModelParams(1.0, N), [0.0])
        rep = evaluate_all(normalize(raw))
        errs.append(abs(rep["separability"].lhs[0] - 4))
        errs.append(abs(rep["separability"].margin[0]))
    return _result("t = 0 sits on the separability boundary", errs, 1e-9)


def check_convention_invariance(N: int = 20, t: float = 0.03) -> CheckResult:
    state = lift_to_sparse(evolve(ReducedState.fock(N), ModelParams(1.0, N), t))
    a = evaluate_all(quadrature_moments(split_local_oscillator(state, convention=STANDARD)))
    b = evaluate_all(quadrature_moments(split_local_oscillator(state, convention=ALTERNATE)))
    errs = []
    for name in ALL:
        x, y = a[name].margin, b[name].margin
        errs.append(0.0 if (np.isnan(x) and np.isnan(y)) else abs(x - y))
    return _result("criteria independent of beam-splitter sign convention", errs, 1e-10)


def check_splitter_unitary(max_total: int = 8) -> CheckResult:
    errs = []
    spec = splitter_for(0, 1)
    for n in range(max_total + 1):
        for k in range(n + 1):
            out = apply_beam_splitter(SparseState.fock(k, n - k), spec)
            errs.append(abs(out.norm() - 1))
            back = apply_beam_splitter(out, spec)
            errs.append(abs(back.amplitude(k, n - k) - 1))
    return _result("50-50 splitter is unitary and self-inverse", errs, 1e-12)


def check_coherent_mixture(mean: float = 2.0, phase: float = 0.7, times=(0.05, 0.2)) -> CheckResult:
    """A pure coherent start and the Poissonian mixture agree on every moment."""
    dist = build_distribution("coherent", mean, eps=1e-12, phase=phase)
    blocks = [(n, a) for n, a in sorted(dist.amplitudes.items()) if n <= 10]
    errs = []
    for t in times:
        state = None
        for n, amp in blocks:
            part = lift_to_sparse(evolve(ReducedState.fock(n), ModelParams(1.0, n), t)).scaled(amp)
            state = part if state is None else state + part
        state = split_local_oscillator(state.normalized())
        pure = raw_moments_oracle(state)
        trunc = build_distribution("table", 0, table={n: abs(a) ** 2 for n, a in blocks})
        _, mix = ensemble_raw(trunc, ModelParams(1.0, 0), [t])
        mix = RawMoments(mix.mean[..., 0], mix.second[..., 0], mix.n_signal[..., 0], mix.n_lo[..., 0])
        errs.append(np.max(np.abs(_moment_arrays(normalize(pure)) - _moment_arrays(normalize(mix)))))
    return _result("coherent start equals Poissonian mixture", errs, 1e-8)


CHECKS = (
    check_splitter_unitary,
    check_two_particle_oracle,
    check_generic_dynamics,
    check_conservation,
    check_boundary,
    check_oracle_moments,
    check_commutator,
    check_convention_invariance,
    check_coherent_mixture,
)


def run_all() -> list:
    return [check() for check in CHECKS]
