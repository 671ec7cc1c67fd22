"""Undepleted-pump (two-mode squeezing) reference curves.

Treating mode 0 as a constant amplitude sqrt(N) gives

    a1(t) = cosh(r) a1(0) + sinh(r) a2^dag(0),   r = N chi t,

and symmetrically for a2.  With vacuum inputs and ideal local oscillators the
canonical quadratures obey Var[X_j] = cosh 2r, Var[X1, X2] = sinh 2r and
Var[Y1, Y2] = -sinh 2r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class PumpApproxMoments:
    r: float

    @property
    def var_x(self):
        return np.cosh(2 * self.r)

    @property
    def var_y(self):
        return np.cosh(2 * self.r)

    @property
    def cov_x(self):
        return np.sinh(2 * self.r)

    @property
    def cov_y(self):
        return -np.sinh(2 * self.r)

    @property
    def signal_population(self):
        return np.sinh(self.r) ** 2

    def var_x1_minus_x2(self):
        return 2 * np.exp(-2 * self.r)

    def var_y1_plus_y2(self):
        return 2 * np.exp(-2 * self.r)


def pump_criteria_curve(r):
    """Ideal-LO Duan sum and Reid inference product for the two-mode squeezed state.

    Returns ``{"duan": 4 exp(-2r), "reid": 1 / cosh(2r)^2}``; the Duan value is
    compared with 4 (and 2 for the EPR sum form), the Reid product with 1.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ContractViolation("squeezing parameter must be non-negative")
    inferred = np.cosh(2 * r) - np.sinh(2 * r) ** 2 / np.cosh(2 * r)
    return {"duan": 4 * np.exp(-2 * r), "reid": inferred**2}


@dataclass(frozen=True, eq=False)
class PumpComparison:
    scaled_time: np.ndarray
    deviation: np.ndarray
    relative_deviation: np.ndarray
    depletion: np.ndarray

    def onset(self, threshold: float, scale: float | None = None):
        """First index where the deviation exceeds ``threshold``.

        With ``scale`` the absolute deviation is compared to ``threshold*scale``;
        otherwise the pointwise relative deviation is used.  None if never.
        """
        measure = self.relative_deviation if scale is None else np.abs(self.deviation) / scale
        hit = np.flatnonzero(measure > threshold)
        return int(hit[0]) if hit.size else None


def small_time_consistency(N: int, scaled_time, rescaled_separability, n0) -> PumpComparison:
    """Finite-N rescaled separability minus the pump curve on a shared N chi t grid."""
    s = np.asarray(scaled_time, dtype=float)
    sep = np.asarray(rescaled_separability, dtype=float)
    n0 = np.asarray(n0, dtype=float)
    if not (s.shape == sep.shape == n0.shape) or s.ndim != 1:
        raise ContractViolation(
            f"grid mismatch: times {s.shape}, criterion {sep.shape}, populations {n0.shape}"
        )
    if N <= 0:
        raise ContractViolation("N must be positive")
    ref = pump_criteria_curve(s)["duan"]
    dev = sep - ref
    return PumpComparison(s, dev, np.abs(dev) / ref, 1.0 - n0 / N)
