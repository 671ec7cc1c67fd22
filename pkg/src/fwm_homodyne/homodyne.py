"""Number-conserving homodyne quadratures with in-situ local oscillators.

System j consists of a signal mode ``a_j`` and a local-oscillator mode ``b_j``.
The measured quadratures are::

    X_j = (a_j b_j^dag + a_j^dag b_j) / sqrt(<b_j^dag b_j>)
    Y_j = i (a_j b_j^dag - a_j^dag b_j) / sqrt(<b_j^dag b_j>)

Moments are first accumulated *unnormalized* (:class:`RawMoments`, built from
``Q_j = X_j sqrt(<b_j^dag b_j>)``) so that mixtures can be formed by weighting
raw moments; :func:`normalize` then divides by the ensemble LO populations and
forms variances.  Index order for the four quadratures is (X1, Y1, X2, Y2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ContractViolation, DegenerateNormalizationError
from .fock import (
    SQRT_HALF,
    BeamSplitterSpec,
    SparseState,
    annihilate,
    apply_beam_splitter,
    create,
    expectation,
    multiply_terms,
    number,
)

LO_FLOOR = 1e-6
QUADRATURES = ("x1", "y1", "x2", "y2")

# STANDARD: b2 = (a0 - a3)/sqrt2.  ALTERNATE: b2 = -(a0 - a3)/sqrt2.
STANDARD = "standard"
ALTERNATE = "alternate"


def splitter_for(source_mode: int, aux_mode: int, convention: str = STANDARD) -> BeamSplitterSpec:
    if convention not in (STANDARD, ALTERNATE):
        raise ContractViolation(f"unknown beam-splitter convention {convention!r}")
    return BeamSplitterSpec(source_mode, aux_mode, SQRT_HALF, SQRT_HALF,
                            flip_b=convention == ALTERNATE)


def split_local_oscillator(state: SparseState, source_mode: int = 0,
                           convention: str = STANDARD) -> SparseState:
    """Append a vacuum mode and split ``source_mode`` 50-50 with it.

    Afterwards ``source_mode`` holds b1 = (a0 + a3)/sqrt2 and the appended
    mode holds b2 = (a0 - a3)/sqrt2.
    """
    if not 0 <= source_mode < state.mode_count:
        raise ContractViolation(f"source mode {source_mode} out of range")
    widened = state.with_vacuum_mode()
    return apply_beam_splitter(widened, splitter_for(source_mode, state.mode_count, convention))


@dataclass(frozen=True)
class MeasuredQuadratureSet:
    signal_modes: tuple = (1, 2)
    lo_modes: tuple = (0, 3)
    lo_norms: tuple | None = None
    floor: float = LO_FLOOR

    @classmethod
    def for_state(cls, state: SparseState, signal_modes=(1, 2), lo_modes=(0, 3),
                  floor: float = LO_FLOOR) -> "MeasuredQuadratureSet":
        norms = tuple(expectation(state, number(b)).real for b in lo_modes)
        cfg = cls(tuple(signal_modes), tuple(lo_modes), norms, floor)
        cfg.check()
        return cfg

    def check(self):
        for j, nb in enumerate(self.lo_norms or ()):
            if not nb > self.floor:
                raise DegenerateNormalizationError(
                    f"LO population <b{j + 1}^dag b{j + 1}> = {nb:.3g} is below the floor "
                    f"{self.floor:g}; the quadrature denominator sqrt(<b^dag b>) is degenerate",
                    lo_population=nb,
                )


@dataclass(frozen=True, eq=False)
class RawMoments:
    """Unnormalized moments of Q = (Qx1, Qy1, Qx2, Qy2) plus populations.

    ``mean`` has shape (4, ...), ``second`` the symmetrised (4, 4, ...) matrix
    of <{Q_i, Q_k}>/2, ``n_signal`` and ``n_lo`` shape (2, ...).  Trailing
    dimensions (e.g. time) broadcast through every operation.
    """

    mean: np.ndarray
    second: np.ndarray
    n_signal: np.ndarray
    n_lo: np.ndarray

    def scaled(self, w) -> "RawMoments":
        return RawMoments(self.mean * w, self.second * w, self.n_signal * w, self.n_lo * w)

    def __add__(self, other: "RawMoments") -> "RawMoments":
        return RawMoments(self.mean + other.mean, self.second + other.second,
                          self.n_signal + other.n_signal, self.n_lo + other.n_lo)

    @staticmethod
    def weighted_sum(items) -> "RawMoments":
        """Ordered sum of ``(weight, RawMoments)`` pairs."""
        total = None
        for w, raw in items:
            term = raw.scaled(w)
            total = term if total is None else total + term
        if total is None:
            raise ContractViolation("empty mixture")
        return total


@dataclass(frozen=True, eq=False)
class QuadratureMoments:
    mean_x1: np.ndarray
    mean_y1: np.ndarray
    mean_x2: np.ndarray
    mean_y2: np.ndarray
    var_x1: np.ndarray
    var_y1: np.ndarray
    var_x2: np.ndarray
    var_y2: np.ndarray
    cov_x1x2: np.ndarray
    cov_y1y2: np.ndarray
    var_x1_plus_x2: np.ndarray
    var_x1_minus_x2: np.ndarray
    var_y1_plus_y2: np.ndarray
    var_y1_minus_y2: np.ndarray
    n_a1: np.ndarray
    n_a2: np.ndarray
    n_b1: np.ndarray
    n_b2: np.ndarray

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return {name: getattr(self, name) for name in self.field_names()}

    @property
    def ratio1(self):
        return self.n_a1 / self.n_b1

    @property
    def ratio2(self):
        return self.n_a2 / self.n_b2

    def take(self, index) -> "QuadratureMoments":
        """Select one point (or a slice) out of array-valued moments."""
        return QuadratureMoments(**{k: np.asarray(v)[index] for k, v in self.as_dict().items()})


def normalize(raw: RawMoments, floor: float = LO_FLOOR, strict: bool = True) -> QuadratureMoments:
    """Rescale raw moments by the LO populations and form (co)variances.

    With ``strict=False`` points whose LO population is at or below ``floor``
    come back as NaN instead of raising.
    """
    n_lo = np.asarray(raw.n_lo, dtype=float)
    low = n_lo <= floor
    if np.any(low):
        if strict:
            raise DegenerateNormalizationError(
                f"LO population {np.min(n_lo):.3g} is below the floor {floor:g}; "
                "the quadrature denominator sqrt(<b^dag b>) is degenerate",
                lo_population=float(np.min(n_lo)),
            )
        n_lo = np.where(low.any(axis=0), np.nan, n_lo)
    scale = np.sqrt(np.stack([n_lo[0], n_lo[0], n_lo[1], n_lo[1]]))
    mean = raw.mean / scale
    second = raw.second / (scale[:, None] * scale[None, :])
    cov = second - mean[:, None] * mean[None, :]
    var = np.stack([cov[i, i] for i in range(4)])
    cxx, cyy = cov[0, 2], cov[1, 3]
    return QuadratureMoments(
        mean_x1=mean[0], mean_y1=mean[1], mean_x2=mean[2], mean_y2=mean[3],
        var_x1=var[0], var_y1=var[1], var_x2=var[2], var_y2=var[3],
        cov_x1x2=cxx, cov_y1y2=cyy,
        var_x1_plus_x2=var[0] + var[2] + 2 * cxx,
        var_x1_minus_x2=var[0] + var[2] - 2 * cxx,
        var_y1_plus_y2=var[1] + var[3] + 2 * cyy,
        var_y1_minus_y2=var[1] + var[3] - 2 * cyy,
        n_a1=np.asarray(raw.n_signal[0], dtype=float),
        n_a2=np.asarray(raw.n_signal[1], dtype=float),
        n_b1=np.asarray(raw.n_lo[0], dtype=float),
        n_b2=np.asarray(raw.n_lo[1], dtype=float),
    )


# -- oracle path: operator application on the 4-mode state ---------------------


def quadrature_terms(signal: int, lo: int):
    """Ladder-expression sums for (Qx, Qy) of one system."""
    a_bd = annihilate(signal) * create(lo)
    ad_b = create(signal) * annihilate(lo)
    return [a_bd, ad_b], [a_bd * 1j, ad_b * -1j]


def _hermitian_value(value: complex, what: str, tol: float = 1e-9) -> float:
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise ContractViolation(f"{what} has imaginary residue {value.imag:.3g}")
    return value.real


def raw_moments_oracle(state: SparseState, signal_modes=(1, 2), lo_modes=(0, 3)) -> RawMoments:
    """Every raw moment by explicit ladder-operator application."""
    ops = []
    for s, b in zip(signal_modes, lo_modes):
        ops.extend(quadrature_terms(s, b))
    mean = np.array([_hermitian_value(expectation(state, op), "<Q>") for op in ops])
    second = np.zeros((4, 4))
    for i in range(4):
        for k in range(i, 4):
            prod = expectation(state, multiply_terms(ops[i], ops[k]))
            if i == k or (i // 2 != k // 2):
                val = _hermitian_value(prod, "<Q_i Q_k>")
            else:
                rev = expectation(state, multiply_terms(ops[k], ops[i]))
                val = _hermitian_value(0.5 * (prod + rev), "<{Q_i, Q_k}>/2")
            second[i, k] = second[k, i] = val
    n_signal = np.array([expectation(state, number(s)).real for s in signal_modes])
    n_lo = np.array([expectation(state, number(b)).real for b in lo_modes])
    return RawMoments(mean, second, n_signal, n_lo)


def quadrature_moments(state: SparseState, config: MeasuredQuadratureSet | None = None) -> QuadratureMoments:
    """Normalized quadrature moments of a 4-mode post-splitter state (oracle path)."""
    if config is None:
        config = MeasuredQuadratureSet.for_state(state)
    elif config.lo_norms is None:
        config = MeasuredQuadratureSet.for_state(state, config.signal_modes, config.lo_modes, config.floor)
    config.check()
    raw = raw_moments_oracle(state, config.signal_modes, config.lo_modes)
    return normalize(raw, config.floor)


def commutator_expectation(state: SparseState, config: MeasuredQuadratureSet | None = None):
    """<[X_j, Y_j]> for j = 1, 2, evaluated by operator application."""
    if config is None:
        config = MeasuredQuadratureSet.for_state(state)
    config.check()
    out = []
    for s, b, nb in zip(config.signal_modes, config.lo_modes, config.lo_norms):
        qx, qy = quadrature_terms(s, b)
        xy = expectation(state, multiply_terms(qx, qy))
        yx = expectation(state, multiply_terms(qy, qx))
        out.append((xy - yx) / nb)
    return tuple(out)


def commutator_closed_form(n_signal, n_lo):
    """-2i (<b^dag b> - <a^dag a>) / <b^dag b>."""
    return -2j * (n_lo - n_signal) / n_lo


# -- fast path: closed forms in the reduced basis -----------------------------


def raw_moments_reduced(N: int, coeffs) -> RawMoments:
    """Raw moments of the split state built from sum_m c_m |N-2m, m, m>.

    ``coeffs`` may carry trailing (time) axes.  With mode 3 in vacuum before the
    splitter, and A_j = a_j b_j^dag:

    * <A_j A_j^dag> = <(n1 + 1) n0> / 2, <A_j^dag A_j> = <n1 (n0/2 + 1)>
    * <A_1 A_2> = <a1 a2 a0^dag^2> / 2
    * every moment changing n1 - n2 vanishes, so all means are zero.
    """
    c = np.asarray(coeffs, dtype=complex)
    trail = c.shape[1:]
    m = np.arange(N // 2 + 1, dtype=float).reshape((-1,) + (1,) * len(trail))
    p = np.abs(c) ** 2
    n0 = N - 2 * m
    pop0 = (p * n0).sum(axis=0)
    pop1 = (p * m).sum(axis=0)
    d_down = 0.5 * (p * (m + 1) * n0).sum(axis=0)
    d_up = (p * m * (n0 / 2 + 1)).sum(axis=0)
    if c.shape[0] > 1:
        mm = m[1:]
        amp = mm * np.sqrt((N - 2 * mm + 1) * (N - 2 * mm + 2))
        pair = 0.5 * (np.conj(c[:-1]) * c[1:] * amp).sum(axis=0)
    else:
        pair = np.zeros(trail, dtype=complex)
    diag = d_down + d_up
    xx, xy = 2 * pair.real, -2 * pair.imag
    zero = np.zeros(trail)
    second = np.array([
        [diag, zero, xx, xy],
        [zero, diag, xy, -xx],
        [xx, xy, diag, zero],
        [xy, -xx, zero, diag],
    ])
    mean = np.zeros((4,) + trail)
    return RawMoments(mean, second, np.array([pop1, pop1]), np.array([pop0 / 2, pop0 / 2]))


# -- coherent local-oscillator reference ---------------------------------------


def coherent_lo_reference(signal: SparseState, lo_population: float) -> float:
    """Measured X variance an independent coherent LO of this population would give.

    Var_c[a + a^dag] + <a^dag a> / <b^dag b>, exact for a coherent LO with real
    amplitude.
    """
    if signal.mode_count != 1:
        raise ContractViolation("coherent_lo_reference expects a single-mode signal")
    if not lo_population > 0:
        raise ContractViolation(f"LO population must be positive, got {lo_population}")
    x = [annihilate(0), create(0)]
    mean = expectation(signal, x).real
    second = expectation(signal, multiply_terms(x, x)).real
    return second - mean**2 + expectation(signal, number(0)).real / lo_population


def coherent_lo_moments(signal: SparseState, lo_populations) -> QuadratureMoments:
    """Measured moments for a 2-mode signal read out with independent coherent LOs.

    With real LO amplitudes the measured first moments and cross-system second
    moments equal the canonical ones, and each same-system second moment picks up
    <a_j^dag a_j>/<b_j^dag b_j>.
    """
    if signal.mode_count != 2:
        raise ContractViolation("coherent_lo_moments expects a 2-mode signal")
    nb = np.asarray(lo_populations, dtype=float)
    if np.any(nb <= 0):
        raise ContractViolation("LO populations must be positive")
    ops = []
    for j in range(2):
        ops.append([annihilate(j), create(j)])
        ops.append([annihilate(j) * 1j, create(j) * -1j])
    mean = np.array([expectation(signal, op).real for op in ops])
    second = np.zeros((4, 4))
    for i in range(4):
        for k in range(i, 4):
            v = expectation(signal, multiply_terms(ops[i], ops[k]))
            if i != k and i // 2 == k // 2:
                v = 0.5 * (v + expectation(signal, multiply_terms(ops[k], ops[i])))
            second[i, k] = second[k, i] = v.real
    na = np.array([expectation(signal, number(j)).real for j in range(2)])
    for j in range(2):
        for q in (2 * j, 2 * j + 1):
            second[q, q] += na[j] / nb[j]
    # scale to raw (unnormalized) units so normalize() can be reused
    s = np.sqrt(np.array([nb[0], nb[0], nb[1], nb[1]]))
    raw = RawMoments(mean * s, second * s[:, None] * s[None, :], na, nb)
    return normalize(raw, floor=0.0)


def coherent_lo_floor(moments: QuadratureMoments):
    """Lower bound on Var[X1 +- X2] for independent coherent LOs."""
    return moments.ratio1 + moments.ratio2
