import math

import numpy as np
import pytest

from fwm_homodyne.dynamics import ModelParams, ReducedState, evolve, lift_to_sparse
from fwm_homodyne.ensembles import block_raw_moments
from fwm_homodyne.errors import ContractViolation, DegenerateNormalizationError
from fwm_homodyne.fock import SparseState, density_expectation, expectation, multiply_terms, number
from fwm_homodyne.homodyne import (
    ALTERNATE,
    STANDARD,
    MeasuredQuadratureSet,
    RawMoments,
    coherent_lo_floor,
    coherent_lo_moments,
    coherent_lo_reference,
    commutator_closed_form,
    commutator_expectation,
    normalize,
    quadrature_moments,
    quadrature_terms,
    raw_moments_oracle,
    raw_moments_reduced,
    split_local_oscillator,
)


def evolved(N, t, prune=None):
    s = lift_to_sparse(evolve(ReducedState.fock(N), ModelParams(1.0, N), t))
    if prune is not None:
        s = SparseState(3, s.amplitudes, prune_threshold=prune)
    return s


def coherent(alpha, cutoff=60):
    amps = {}
    for n in range(cutoff + 1):
        mag = math.exp(n * math.log(abs(alpha)) - abs(alpha) ** 2 / 2 - 0.5 * math.lgamma(n + 1))
        amps[(n,)] = mag * (alpha / abs(alpha)) ** n
    return SparseState(1, amps)


def moment_vector(m):
    return np.array([np.asarray(v, dtype=float) for v in m.as_dict().values()])


class TestSplitting:
    def test_fock_split_populations(self):
        s = split_local_oscillator(SparseState.fock(6, 0, 0))
        assert s.mode_count == 4
        assert expectation(s, number(0)).real == pytest.approx(3.0)
        assert expectation(s, number(3)).real == pytest.approx(3.0)
        assert s.total_numbers() == {6}

    def test_symmetric_and_antisymmetric_outputs(self):
        # a single boson leaves as (b1 + b2)/sqrt2 under the standard convention
        s = split_local_oscillator(SparseState.fock(1, 0, 0))
        assert s.amplitude(1, 0, 0, 0) == pytest.approx(1 / math.sqrt(2))
        assert s.amplitude(0, 0, 0, 1) == pytest.approx(1 / math.sqrt(2))
        alt = split_local_oscillator(SparseState.fock(1, 0, 0), convention=ALTERNATE)
        assert alt.amplitude(0, 0, 0, 1) == pytest.approx(-1 / math.sqrt(2))

    def test_bad_arguments(self):
        with pytest.raises(ContractViolation):
            split_local_oscillator(SparseState.fock(1, 0, 0), source_mode=5)
        with pytest.raises(ContractViolation):
            split_local_oscillator(SparseState.fock(1, 0, 0), convention="other")


class TestOracleAgreement:
    @pytest.mark.parametrize("N", [1, 2, 3, 6, 11, 20])
    def test_reduced_matches_oracle(self, N):
        for t in (0.0, 0.7 / N, 2.3 / N):
            state = evolved(N, t)
            fast = raw_moments_reduced(N, evolve(ReducedState.fock(N), ModelParams(1.0, N), t).coeffs)
            slow = raw_moments_oracle(split_local_oscillator(state))
            assert np.allclose(fast.second, slow.second, atol=1e-10)
            assert np.allclose(fast.mean, slow.mean, atol=1e-12)
            assert np.allclose(fast.n_lo, slow.n_lo)
            assert np.allclose(fast.n_signal, slow.n_signal)

    def test_block_methods_agree(self):
        times = np.array([0.01, 0.05, 0.2])
        _, a = block_raw_moments(9, ModelParams(1.0, 9), times)
        _, b = block_raw_moments(9, ModelParams(1.0, 9), times, method="oracle")
        assert np.allclose(moment_vector(normalize(a)), moment_vector(normalize(b)), atol=1e-10)

    def test_means_vanish(self):
        m = quadrature_moments(split_local_oscillator(evolved(8, 0.1)))
        for v in (m.mean_x1, m.mean_y1, m.mean_x2, m.mean_y2):
            assert abs(v) < 1e-12

    def test_initial_state_is_vacuum_like(self):
        m = quadrature_moments(split_local_oscillator(SparseState.fock(10, 0, 0)))
        for v in (m.var_x1, m.var_y1, m.var_x2, m.var_y2):
            assert v == pytest.approx(1.0)
        assert m.cov_x1x2 == pytest.approx(0.0)


class TestInvariances:
    def test_convention_invariance_N20(self):
        state = evolved(20, 0.03)
        a = quadrature_moments(split_local_oscillator(state, convention=STANDARD))
        b = quadrature_moments(split_local_oscillator(state, convention=ALTERNATE))
        for name in ("var_x1", "var_y1", "var_x2", "var_y2", "n_a1", "n_a2", "n_b1", "n_b2"):
            assert getattr(a, name) == pytest.approx(getattr(b, name), abs=1e-12)
        # b2 -> -b2 flips the sign of system 2's quadratures
        assert a.cov_x1x2 == pytest.approx(-b.cov_x1x2, abs=1e-12)
        assert a.var_x1_minus_x2 == pytest.approx(b.var_x1_plus_x2, abs=1e-12)
        assert abs(a.cov_x1x2) > 0.1

    def test_pruning_safety(self):
        loose = quadrature_moments(split_local_oscillator(evolved(20, 0.08, prune=1e-14)))
        exact = quadrature_moments(split_local_oscillator(evolved(20, 0.08, prune=0.0)))
        assert np.allclose(moment_vector(loose), moment_vector(exact), atol=1e-12)

    @pytest.mark.parametrize("N,t", [(1, 0.3), (4, 0.2), (13, 0.05), (20, 0.02)])
    def test_commutator_identity(self, N, t):
        state = split_local_oscillator(evolved(N, t))
        raw = raw_moments_oracle(state)
        direct = np.array(commutator_expectation(state))
        assert np.allclose(direct, commutator_closed_form(raw.n_signal, raw.n_lo), atol=1e-8)

    def test_commutator_canonical_limit(self):
        # no signal bosons: [X, Y] = -2i exactly as for canonical quadratures
        state = split_local_oscillator(SparseState.fock(8, 0, 0))
        assert np.allclose(commutator_expectation(state), -2j)


class TestNormalization:
    def test_floor_raises(self):
        raw = raw_moments_oracle(split_local_oscillator(SparseState.fock(0, 1, 1)))
        with pytest.raises(DegenerateNormalizationError) as info:
            normalize(raw)
        assert info.value.lo_population == 0.0

    def test_non_strict_marks_nan(self):
        _, raw = block_raw_moments(2, ModelParams(1.0, 2), [0.0, np.pi / (2 * np.sqrt(2))])
        m = normalize(raw, strict=False)
        assert np.isfinite(m.var_x1[0])
        assert np.isnan(m.var_x1[1])

    def test_measured_set_checks_lo(self):
        with pytest.raises(DegenerateNormalizationError):
            MeasuredQuadratureSet.for_state(split_local_oscillator(SparseState.fock(0, 1, 1)))

    def test_weighted_sum(self):
        _, a = block_raw_moments(4, ModelParams(1.0, 4), [0.1])
        total = RawMoments.weighted_sum([(0.25, a), (0.75, a)])
        assert np.allclose(total.second, a.second)
        with pytest.raises(ContractViolation):
            RawMoments.weighted_sum([])


def test_mixture_matches_density_matrix():
    # raw moments of a two-block mixture against tr(rho Q_i Q_k) on an explicit rho
    comps = [(0.4, split_local_oscillator(evolved(5, 0.2))), (0.6, split_local_oscillator(evolved(6, 0.15)))]
    mix = RawMoments.weighted_sum((w, raw_moments_oracle(s)) for w, s in comps)
    qx1, qy1 = quadrature_terms(1, 0)
    qx2, qy2 = quadrature_terms(2, 3)
    assert density_expectation(comps, multiply_terms(qx1, qx2)).real == pytest.approx(mix.second[0, 2], abs=1e-12)
    assert density_expectation(comps, multiply_terms(qy1, qy1)).real == pytest.approx(mix.second[1, 1], abs=1e-12)
    assert density_expectation(comps, number(0)).real == pytest.approx(mix.n_lo[0], abs=1e-12)


class TestCoherentLO:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_matches_explicit_coherent_oscillators(self, seed):
        rng = np.random.default_rng(seed)
        amps = {(i, j): complex(*rng.normal(size=2)) for i in range(3) for j in range(3) if rng.random() < 0.6}
        amps[(1, 1)] = 1.0
        signal = SparseState(2, amps).normalized()
        beta1, beta2 = 1.7, 2.1
        four = coherent(beta1).tensor(signal).tensor(coherent(beta2))
        oracle = quadrature_moments(four)
        closed = coherent_lo_moments(signal, [beta1**2, beta2**2])
        assert np.allclose(moment_vector(oracle), moment_vector(closed), atol=1e-9)

    def test_reference_variance(self):
        # vacuum signal: canonical variance 1 and no correction
        assert coherent_lo_reference(SparseState.fock(0), 5.0) == pytest.approx(1.0)
        # Fock |2>: Var[a + a^dag] = 5, plus 2/n_b
        assert coherent_lo_reference(SparseState.fock(2), 4.0) == pytest.approx(5.5)
        with pytest.raises(ContractViolation):
            coherent_lo_reference(SparseState.fock(1), 0.0)

    def test_floor(self):
        m = coherent_lo_moments(SparseState.fock(1, 1), [4.0, 2.0])
        assert coherent_lo_floor(m) == pytest.approx(0.25 + 0.5)
        assert m.var_x1_plus_x2 >= coherent_lo_floor(m)
